"""
Orbital slots and impulsive transfer costs between them.

All Δv values are in m/s. Transfers keep the orbit radius; a plane change is
a single impulse through the angle between the orbit normals, followed by a
two-impulse coplanar phasing maneuver when the phases differ.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple
import json
import math
import numpy as np

from reconsched.common import (ConfigurationError, MU_EARTH, R_EARTH,
    MIN_ALTITUDE, circularVelocity)
from reconsched.orbital import OrbitalElements, TimeGrid

SLOT_KINDS = ["phase_only", "plane_and_phase"]
COST_FORMAT = 1

class TransferError(RuntimeError):
    pass

@dataclass
class SlotGrid:
    """
    slots[s][k] lists the candidate orbits of satellite k in stage s; stage 0
    holds the initial orbit only.
    """
    slots: List[List[List[OrbitalElements]]]
    kind: str = "phase_only"

    @property
    def stages(self) -> int:
        return len(self.slots) - 1

    @property
    def counts(self) -> List[List[int]]:
        return [[len(satSlots) for satSlots in stage] for stage in self.slots]

    def toDict(self) -> dict:
        return {
            "kind": self.kind,
            "slots": [[[e.toDict() for e in satSlots] for satSlots in stage]
                for stage in self.slots]
        }

    @staticmethod
    def fromDict(d: dict) -> SlotGrid:
        return SlotGrid([[[OrbitalElements.fromDict(e) for e in satSlots]
            for satSlots in stage] for stage in d["slots"]], d.get("kind", "phase_only"))

def buildPhaseSlots(initial: OrbitalElements, J: int) -> List[OrbitalElements]:
    if J < 1:
        raise ConfigurationError(f"At least one slot is needed, got {J}")
    return [initial.replace(argLatitude=initial.argLatitude + 360.0 * l / J)
        for l in range(J)]

def maxPlaneOffset(semiMajorAxis: float, budget: float, scale: float) -> float:
    """
    Largest plane-change angle (deg) affordable with scale * budget of Δv.
    """
    if not 0 < scale <= 1:
        raise ConfigurationError(f"Budget scale has to be in (0, 1], got {scale}")
    ratio = scale * budget / (2000.0 * circularVelocity(semiMajorAxis))
    return math.degrees(2 * math.asin(min(1.0, ratio)))

def raanOffsetFor(planeAngle: float, inclination: float) -> float:
    """
    RAAN change (deg) whose orbit normals are planeAngle apart.
    """
    sinI = abs(math.sin(math.radians(inclination)))
    if sinI < 1e-12:
        return 0.0
    return math.degrees(2 * math.asin(min(1.0, math.sin(math.radians(planeAngle) / 2) / sinI)))

def planeLevels(m: int) -> List[int]:
    """Signed offset levels +1, -1, +2, -2, ... (m - 1 of them)"""
    return [(i // 2 + 1) * (1 if i % 2 == 0 else -1) for i in range(m - 1)]

def buildPlanePhaseSlots(initial: OrbitalElements, f: int, m: int,
                         budget: float, scale: float) -> List[OrbitalElements]:
    """
    (2m - 1) planes times f phases. The planes are the initial one plus m - 1
    inclination offsets and m - 1 RAAN offsets; the furthest offset uses
    scale * budget for a single plane change.
    """
    if f < 1 or m < 1:
        raise ConfigurationError(f"Invalid slot grid f={f}, m={m}")
    planes = [initial]
    levels = planeLevels(m)
    if levels:
        top = max(abs(l) for l in levels)
        dTheta = maxPlaneOffset(initial.semiMajorAxis, budget, scale)
        dRaan = raanOffsetFor(dTheta, initial.inclination)
        planes += [initial.replace(inclination=initial.inclination + l * dTheta / top)
            for l in levels]
        planes += [initial.replace(raan=initial.raan + l * dRaan / top)
            for l in levels]
    slots = []
    for plane in planes:
        slots.extend(buildPhaseSlots(plane, f))
    return slots

def planeChangeAngle(a: OrbitalElements, b: OrbitalElements) -> float:
    """Angle between orbit normals in degrees"""
    c = float(np.dot(a.normal(), b.normal()))
    if c >= 1 - 1e-12:
        return 0.0
    return math.degrees(math.acos(max(-1.0, c)))

def _phasingDeltaV(semiMajorAxis: float, phase: float, maxDuration: float,
                   maxRevolutions: int, minAltitude: float) -> float:
    """
    Cheapest two-impulse phasing for the slot `phase` degrees ahead.
    """
    theta = math.radians(phase % 360.0)
    if theta < 1e-12 or 2 * math.pi - theta < 1e-12:
        return 0.0
    a = semiMajorAxis
    n = math.sqrt(MU_EARTH / a ** 3)
    vc = math.sqrt(MU_EARTH / a)
    best = math.inf
    for k in range(1, maxRevolutions + 1):
        # catch up (shorter period) or fall back a full lap (longer period)
        for duration in ((2 * math.pi * k - theta) / n,
                         (2 * math.pi * (k + 1) - theta) / n):
            if duration > maxDuration:
                continue
            period = duration / k
            aPhasing = (MU_EARTH * (period / (2 * math.pi)) ** 2) ** (1 / 3)
            if 2 * aPhasing - a < R_EARTH + minAltitude:
                continue
            vPhasing = math.sqrt(MU_EARTH * (2 / a - 1 / aPhasing))
            best = min(best, 2000.0 * abs(vc - vPhasing))
    return best

def phasingCost(source: OrbitalElements, target: OrbitalElements,
                maxDuration: float = math.inf, maxRevolutions: int = 30,
                minAltitude: float = MIN_ALTITUDE) -> float:
    """
    Minimum coplanar phasing Δv over 1..maxRevolutions revolutions that fit
    into maxDuration; +inf when none fits.
    """
    return _phasingDeltaV(source.semiMajorAxis,
        target.argLatitude - source.argLatitude,
        maxDuration, maxRevolutions, minAltitude)

def planeChangeCost(source: OrbitalElements, target: OrbitalElements) -> float:
    v = circularVelocity(source.semiMajorAxis)
    return 2000.0 * v * math.sin(math.radians(planeChangeAngle(source, target)) / 2)

def transferCost(source: OrbitalElements, target: OrbitalElements,
                 maxDuration: float = math.inf, maxRevolutions: int = 30,
                 minAltitude: float = MIN_ALTITUDE) -> float:
    if abs(source.semiMajorAxis - target.semiMajorAxis) > 1e-6:
        raise TransferError("Transfers changing the orbit radius are not supported")
    plane = planeChangeCost(source, target)
    phase = phasingCost(source, target, maxDuration, maxRevolutions, minAltitude)
    return plane + phase


@dataclass
class CostTensor:
    """
    cost[(s, k)] is a (J^{s-1,k} x J^{sk}) matrix of Δv for s >= 1; +inf
    marks transfers that cannot be flown.
    """
    cost: Dict[Tuple[int, int], np.ndarray]
    budget: np.ndarray
    batteryPerManeuver: float
    maxDuration: float = math.inf

    @property
    def stages(self) -> int:
        return max(s for s, _ in self.cost) if self.cost else 0

    def arcs(self, stage: int, sat: int, budget: Optional[float] = None,
             origins: Optional[Sequence[int]] = None):
        """
        Flyable arcs (i, j, cost) of a stage within the budget.
        """
        limit = self.budget[sat] if budget is None else budget
        matrix = self.cost[(stage, sat)]
        rows = range(matrix.shape[0]) if origins is None else origins
        result = []
        for i in rows:
            for j in np.flatnonzero(matrix[i] <= limit + 1e-9):
                result.append((int(i), int(j), float(matrix[i, j])))
        return result

def _costMatrix(sources, targets, maxDuration, maxRevolutions, minAltitude):
    radii = {e.semiMajorAxis for e in sources} | {e.semiMajorAxis for e in targets}
    if max(radii) - min(radii) > 1e-6:
        raise TransferError("Slot grid mixes orbit radii; altitude changes are not supported")
    a = sources[0].semiMajorAxis
    srcNormals = np.stack([e.normal() for e in sources])
    dstNormals = np.stack([e.normal() for e in targets])
    cosines = srcNormals @ dstNormals.T
    angles = np.where(cosines >= 1 - 1e-12, 0.0, np.arccos(np.clip(cosines, -1, 1)))
    plane = 2000.0 * circularVelocity(a) * np.sin(angles / 2)

    srcU = np.array([e.argLatitude for e in sources])
    dstU = np.array([e.argLatitude for e in targets])
    du = np.round(np.mod(dstU[None, :] - srcU[:, None], 360.0), 9)
    phase = np.zeros_like(du)
    for value in np.unique(du):
        phase[du == value] = _phasingDeltaV(a, float(value), maxDuration,
            maxRevolutions, minAltitude)
    return plane + phase

def buildCostTensor(slotGrid: SlotGrid, grid: TimeGrid, budget,
                    batteryPerManeuver: float, maxDuration: Optional[float] = None,
                    maxRevolutions: int = 30,
                    minAltitude: float = MIN_ALTITUDE) -> CostTensor:
    """
    Δv of every transfer from a slot of stage s-1 to a slot of stage s. The
    transfer has to finish within maxDuration, one stage span by default.
    """
    if maxDuration is None:
        maxDuration = grid.stepsPerStage * grid.dt
    K = len(slotGrid.slots[0])
    budget = np.broadcast_to(np.asarray(budget, dtype=float), (K,)).copy()
    memo = {}
    cost = {}
    for s in range(1, slotGrid.stages + 1):
        for k in range(K):
            sources, targets = slotGrid.slots[s - 1][k], slotGrid.slots[s][k]
            key = (tuple(sources), tuple(targets))
            if key not in memo:
                memo[key] = _costMatrix(sources, targets, maxDuration,
                    maxRevolutions, minAltitude)
            cost[(s, k)] = memo[key]
    return CostTensor(cost, budget, float(batteryPerManeuver), float(maxDuration))

def saveCosts(path: str, costs: CostTensor) -> None:
    """
    numpy archive: `header` (JSON: format, stages, satellites, battery per
    maneuver, max duration), `budget`, and `c_s<stage>_k<sat>` matrices with
    +inf preserved.
    """
    K = len(costs.budget)
    header = {
        "format": COST_FORMAT,
        "stages": costs.stages,
        "satellites": K,
        "batteryPerManeuver": costs.batteryPerManeuver,
        "maxDuration": None if math.isinf(costs.maxDuration) else costs.maxDuration
    }
    arrays = {"header": np.array(json.dumps(header)), "budget": costs.budget}
    for (s, k), matrix in costs.cost.items():
        arrays[f"c_s{s}_k{k}"] = matrix
    with open(path, "wb") as f:
        np.savez_compressed(f, **arrays)

def loadCosts(path: str) -> CostTensor:
    with np.load(path) as archive:
        header = json.loads(str(archive["header"]))
        if header.get("format") != COST_FORMAT:
            raise ConfigurationError(f"Unsupported cost cache format in {path}")
        cost = {(s, k): archive[f"c_s{s}_k{k}"]
            for s in range(1, header["stages"] + 1)
            for k in range(header["satellites"])}
        maxDuration = header["maxDuration"]
        return CostTensor(cost, archive["budget"], header["batteryPerManeuver"],
            math.inf if maxDuration is None else maxDuration)
