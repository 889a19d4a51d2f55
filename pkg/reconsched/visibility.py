"""
Visibility of targets, ground stations and the Sun.

Tensors are kept per (stage, satellite) as bit-packed boolean planes laid
out as [slot, step, target|station]. The EOSSP works on the flat view, which
covers the whole horizon for the initial orbits only.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple
import json
import logging
import numpy as np

from reconsched.common import (ConfigurationError, DimensionError, R_EARTH,
    R_SUN, writeEpoch)
from reconsched.orbital import (Ephemeris, positionsAt, groundPointsAt, sunAt,
    TimeGrid)

logger = logging.getLogger(__name__)

CONE_INTERPRETATIONS = ["full_apex", "half_angle"]
TENSOR_FORMAT = 1

@dataclass
class VisibilitySettings:
    targetCone: float = 45.0
    stationCone: float = 120.0
    interpretation: str = "full_apex"
    sunThreshold: float = 1.0
    masking: bool = True
    perturbation: str = "two_body"
    gmstAtEpoch: float = 0.0


def halfAngle(coneAngle: float, interpretation: str) -> float:
    if not 0 < coneAngle < 180:
        raise ConfigurationError(f"Cone angle has to be in (0, 180), got {coneAngle}")
    if interpretation not in CONE_INTERPRETATIONS:
        raise ConfigurationError(f"Unknown cone interpretation '{interpretation}'")
    return coneAngle / 2 if interpretation == "full_apex" else coneAngle

def _positions(x) -> np.ndarray:
    return x.positions if isinstance(x, Ephemeris) else np.asarray(x, dtype=float)

def coneAccessArray(observer: np.ndarray, obj: np.ndarray, half: float) -> np.ndarray:
    """
    Vectorized access test on broadcastable (..., 3) arrays. The object has
    to lie in the nadir cone of the given half-angle (degrees, inclusive) and
    the line of sight must clear the Earth.
    """
    los = obj - observer
    losNorm = np.linalg.norm(los, axis=-1)
    obsNorm = np.linalg.norm(observer, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cosAngle = -np.sum(los * observer, axis=-1) / (losNorm * obsNorm)
        inCone = np.where(losNorm == 0, True,
            cosAngle >= np.cos(np.radians(half)) - 1e-12)
        tau = -np.sum(observer * los, axis=-1) / (losNorm ** 2)
    interior = (tau > 0) & (tau < 1)
    closest = observer + np.where(np.isfinite(tau), tau, 0)[..., None] * los
    occluded = interior & (np.linalg.norm(closest, axis=-1) < R_EARTH - 1e-6)
    return inCone & ~occluded

def coneAccess(observer, obj, coneAngle: float,
               interpretation: str = "full_apex") -> np.ndarray:
    obsPos, objPos = _positions(observer), _positions(obj)
    if obsPos.shape != objPos.shape:
        raise DimensionError(
            f"Ephemerides differ in shape: {obsPos.shape} vs. {objPos.shape}")
    return coneAccessArray(obsPos, objPos, halfAngle(coneAngle, interpretation))

def eclipseArray(satellite: np.ndarray, sun: np.ndarray) -> np.ndarray:
    """
    Fraction of the solar disk visible from the satellite using the dual-cone
    (umbra/penumbra) geometry of a spherical Earth.
    """
    toSun = sun - satellite
    rSat = np.linalg.norm(satellite, axis=-1)
    dSun = np.linalg.norm(toSun, axis=-1)
    thetaE = np.arcsin(np.clip(R_EARTH / rSat, -1, 1))
    thetaS = np.arcsin(np.clip(R_SUN / dSun, -1, 1))
    cosTheta = np.sum(toSun * -satellite, axis=-1) / (dSun * rSat)
    theta = np.arccos(np.clip(cosTheta, -1, 1))

    a, b, c = thetaS, thetaE, np.maximum(theta, 1e-15)
    x = (c ** 2 + a ** 2 - b ** 2) / (2 * c)
    y = np.sqrt(np.maximum(a ** 2 - x ** 2, 0))
    overlap = a ** 2 * np.arccos(np.clip(x / a, -1, 1)) \
        + b ** 2 * np.arccos(np.clip((c - x) / b, -1, 1)) - c * y
    partial = 1 - overlap / (np.pi * a ** 2)

    full = theta >= thetaE + thetaS
    umbra = (thetaE > thetaS) & (theta <= thetaE - thetaS)
    annular = (thetaS > thetaE) & (theta <= thetaS - thetaE)
    return np.select([full, umbra, annular],
        [1.0, 0.0, 1 - thetaE ** 2 / thetaS ** 2],
        np.clip(partial, 0.0, 1.0))

def eclipseSeries(satellite, sun) -> np.ndarray:
    satPos, sunPos = _positions(satellite), _positions(sun)
    if satPos.shape != sunPos.shape:
        raise DimensionError(
            f"Ephemerides differ in shape: {satPos.shape} vs. {sunPos.shape}")
    return eclipseArray(satPos, sunPos)

def binarizeSun(fraction, threshold: float = 1.0) -> np.ndarray:
    if not 0 < threshold <= 1:
        raise ConfigurationError(f"Sun threshold has to be in (0, 1], got {threshold}")
    return np.asarray(fraction) >= threshold

def maskingWindows(totalSteps: int, targets: int) -> List[Tuple[int, int]]:
    """
    Chronological windows [start, stop) of 0-based steps, one per target.
    """
    if targets < 1 or totalSteps % targets != 0:
        raise ConfigurationError(
            f"{totalSteps} steps cannot be split into {targets} target windows")
    width = totalSteps // targets
    return [(p * width, (p + 1) * width) for p in range(targets)]

def targetMask(totalSteps: int, targets: int) -> np.ndarray:
    mask = np.zeros((totalSteps, targets), dtype=bool)
    for p, (start, stop) in enumerate(maskingWindows(totalSteps, targets)):
        mask[start:stop, p] = True
    return mask

def applyTargetMasking(V: np.ndarray, totalSteps: int, steps=None) -> np.ndarray:
    """
    Zero V outside each target's window. V is indexed [..., step, target];
    `steps` gives the global step of every row when V covers a sub-range.
    """
    mask = targetMask(totalSteps, V.shape[-1])
    if steps is not None:
        mask = mask[np.asarray(steps)]
    if mask.shape != V.shape[-2:]:
        raise DimensionError(f"Mask {mask.shape} does not match {V.shape}")
    return V & mask


class PackedPlane:
    """
    Boolean array bit-packed along the step axis (axis 1).
    """
    def __init__(self, array: np.ndarray):
        array = np.asarray(array, dtype=bool)
        self.shape = array.shape
        self.data = np.packbits(array, axis=1)

    def unpack(self) -> np.ndarray:
        return np.unpackbits(self.data, axis=1, count=self.shape[1]).astype(bool)

    @staticmethod
    def fromPacked(data: np.ndarray, shape) -> PackedPlane:
        plane = PackedPlane.__new__(PackedPlane)
        plane.data = data
        plane.shape = tuple(int(x) for x in shape)
        return plane


@dataclass
class VisibilityTensors:
    stages: int
    stepsPerStage: int
    satellites: int
    targets: int
    stations: int
    slotCounts: List[List[int]]
    planes: Dict[Tuple[str, int, int], PackedPlane] = field(default_factory=dict)
    flatV: np.ndarray = None
    flatW: np.ndarray = None
    flatH: np.ndarray = None

    def targetVisibility(self, stage: int, sat: int) -> np.ndarray:
        """[slot, step, target]"""
        return self.planes[("V", stage, sat)].unpack()

    def stationVisibility(self, stage: int, sat: int) -> np.ndarray:
        """[slot, step, station]"""
        return self.planes[("W", stage, sat)].unpack()

    def sunVisibility(self, stage: int, sat: int) -> np.ndarray:
        """[slot, step]"""
        return self.planes[("H", stage, sat)].unpack()

    def flatView(self):
        """(V [sat, step, target], W [sat, step, station], H [sat, step])"""
        return self.flatV, self.flatW, self.flatH

    def slotCount(self, stage: int, sat: int) -> int:
        return self.slotCounts[stage - 1][sat]


def _visibilityBlock(satPos, targetPos, stationPos, sunPos, settings):
    """
    satPos [slot, step, 3]; targetPos/stationPos [n, step, 3]; sunPos [step, 3]
    """
    tHalf = halfAngle(settings.targetCone, settings.interpretation)
    gHalf = halfAngle(settings.stationCone, settings.interpretation)
    V = np.stack([coneAccessArray(satPos, p[None], tHalf) for p in targetPos], axis=-1) \
        if len(targetPos) else np.zeros(satPos.shape[:2] + (0,), dtype=bool)
    W = np.stack([coneAccessArray(satPos, g[None], gHalf) for g in stationPos], axis=-1) \
        if len(stationPos) else np.zeros(satPos.shape[:2] + (0,), dtype=bool)
    H = binarizeSun(eclipseArray(satPos, sunPos[None]), settings.sunThreshold)
    return V, W, H

def buildTensors(instance) -> VisibilityTensors:
    """
    Compute V, W, H for every stage, satellite and slot of an instance, plus
    the flat view of the initial orbits.
    """
    grid: TimeGrid = instance.grid
    settings: VisibilitySettings = instance.visibilitySettings
    slotGrid = instance.slotGrid
    P, G, K = len(instance.targets), len(instance.stations), len(instance.satellites)
    pert, gmst = settings.perturbation, settings.gmstAtEpoch

    def groundBlock(points, times):
        return np.stack([groundPointsAt(lat, lon, times, gmst) for lat, lon in points]) \
            if points else np.zeros((0, len(times), 3))

    tensors = VisibilityTensors(
        stages=grid.stages, stepsPerStage=grid.stepsPerStage, satellites=K,
        targets=P, stations=G,
        slotCounts=[[len(slotGrid.slots[s][k]) for k in range(K)]
            for s in range(1, grid.stages + 1)])

    times = grid.times()
    satPos = np.stack([positionsAt(e, times, pert) for e in instance.satellites])
    V, W, H = _visibilityBlock(satPos, groundBlock(instance.targets, times),
        groundBlock(instance.stations, times), sunAt(grid.epoch, times), settings)
    if settings.masking and P > 0:
        V = applyTargetMasking(V, grid.totalSteps)
    tensors.flatV, tensors.flatW, tensors.flatH = V, W, H

    for s in range(1, grid.stages + 1):
        steps = grid.stageSteps(s)
        times = grid.stageTimes(s)
        targetPos = groundBlock(instance.targets, times)
        stationPos = groundBlock(instance.stations, times)
        sunPos = sunAt(grid.epoch, times)
        for k in range(K):
            slots = slotGrid.slots[s][k]
            satPos = np.stack([positionsAt(e, times, pert) for e in slots])
            V, W, H = _visibilityBlock(satPos, targetPos, stationPos, sunPos, settings)
            if settings.masking and P > 0:
                V = applyTargetMasking(V, grid.totalSteps, steps)
            tensors.planes[("V", s, k)] = PackedPlane(V)
            tensors.planes[("W", s, k)] = PackedPlane(W)
            tensors.planes[("H", s, k)] = PackedPlane(H)
        logger.debug("Visibility of stage %d computed", s)
    return tensors

def saveTensors(path: str, tensors: VisibilityTensors, grid: TimeGrid,
                masking: bool) -> None:
    """
    Store tensors as a numpy archive. The `header` entry holds a JSON object
    with format version, dimensions, dt, epoch and the masking flag; every
    plane is stored as `<kind>_s<stage>_k<sat>` with its packed payload and a
    matching `<name>_shape` entry.
    """
    header = {
        "format": TENSOR_FORMAT,
        "stages": tensors.stages,
        "stepsPerStage": tensors.stepsPerStage,
        "satellites": tensors.satellites,
        "targets": tensors.targets,
        "stations": tensors.stations,
        "slotCounts": tensors.slotCounts,
        "dt": grid.dt,
        "epoch": writeEpoch(grid.epoch),
        "masking": bool(masking)
    }
    arrays = {
        "header": np.array(json.dumps(header)),
        "flatV": np.packbits(tensors.flatV, axis=1),
        "flatW": np.packbits(tensors.flatW, axis=1),
        "flatH": np.packbits(tensors.flatH, axis=1),
    }
    for (kind, s, k), plane in tensors.planes.items():
        name = f"{kind}_s{s}_k{k}"
        arrays[name] = plane.data
        arrays[name + "_shape"] = np.array(plane.shape)
    with open(path, "wb") as f:
        np.savez_compressed(f, **arrays)

def loadTensors(path: str) -> VisibilityTensors:
    with np.load(path) as archive:
        header = json.loads(str(archive["header"]))
        if header.get("format") != TENSOR_FORMAT:
            raise ConfigurationError(f"Unsupported tensor cache format in {path}")
        T = header["stages"] * header["stepsPerStage"]
        K = header["satellites"]
        tensors = VisibilityTensors(
            stages=header["stages"], stepsPerStage=header["stepsPerStage"],
            satellites=K, targets=header["targets"], stations=header["stations"],
            slotCounts=header["slotCounts"])
        tensors.flatV = np.unpackbits(archive["flatV"], axis=1, count=T).astype(bool)
        tensors.flatW = np.unpackbits(archive["flatW"], axis=1, count=T).astype(bool)
        tensors.flatH = np.unpackbits(archive["flatH"], axis=1, count=T).astype(bool)
        for s in range(1, header["stages"] + 1):
            for k in range(K):
                for kind in "VWH":
                    name = f"{kind}_s{s}_k{k}"
                    tensors.planes[(kind, s, k)] = PackedPlane.fromPacked(
                        archive[name], archive[name + "_shape"])
    return tensors

def tensorsFromArrays(flatV, flatW, flatH, stages: int = 1,
                      slotPlanes=None) -> VisibilityTensors:
    """
    Assemble tensors from plain boolean arrays. The flat arrays are indexed
    [sat, step, ·]. `slotPlanes` maps (stage, sat) to a (V, W, H) triple of
    slot arrays; stages missing from it get the flat orbit as their only
    slot.
    """
    flatV, flatW, flatH = (np.asarray(a, dtype=bool) for a in (flatV, flatW, flatH))
    K, T, P = flatV.shape
    if flatW.shape[:2] != (K, T) or flatH.shape != (K, T):
        raise DimensionError("Flat visibility arrays disagree in satellites or steps")
    if T % stages != 0:
        raise ConfigurationError(f"{T} steps cannot be split into {stages} stages")
    n = T // stages
    slotPlanes = slotPlanes or {}
    tensors = VisibilityTensors(stages=stages, stepsPerStage=n, satellites=K,
        targets=P, stations=flatW.shape[2], slotCounts=[[0] * K for _ in range(stages)],
        flatV=flatV, flatW=flatW, flatH=flatH)
    for s in range(1, stages + 1):
        steps = slice((s - 1) * n, s * n)
        for k in range(K):
            if (s, k) in slotPlanes:
                V, W, H = (np.asarray(a, dtype=bool) for a in slotPlanes[(s, k)])
            else:
                V, W, H = flatV[k, steps][None], flatW[k, steps][None], flatH[k, steps][None]
            if V.shape[1:] != (n, P) or W.shape[1:] != (n, flatW.shape[2]) \
                    or H.shape[1:] != (n,) or not V.shape[0] == W.shape[0] == H.shape[0]:
                raise DimensionError(f"Slot planes of stage {s}, satellite {k + 1} have wrong shapes")
            tensors.slotCounts[s - 1][k] = V.shape[0]
            tensors.planes[("V", s, k)] = PackedPlane(V)
            tensors.planes[("W", s, k)] = PackedPlane(W)
            tensors.planes[("H", s, k)] = PackedPlane(H)
    return tensors
