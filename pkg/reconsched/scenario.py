"""
Scenario instances: the random-instance generator, the storm-track case
study and the scenario config file.

A scenario config is a JSON document::

    {
        "format": 1,
        "name": "random-s8-k5-j20-seed0",
        "seed": 0,
        "grid": {"epoch": ..., "dt": ..., "totalSteps": ..., "stages": ...},
        "satellites": [{"semiMajorAxis": ..., "inclination": ...,
                        "raan": ..., "argLatitude": ...}, ...],
        "slots": {"kind": ..., "slots": [[[elements, ...], ...], ...]},
        "targets": [[lat, lon], ...],
        "stations": [[lat, lon], ...],
        "stationNames": [...],
        "constants": {"dObs": ..., ...},
        "visibility": {"targetCone": ..., ...},
        "maneuver": {"budgetScale": ..., ...}
    }

Visibility and cost tensors are not stored; they are rebuilt on demand and
cached by content hash in the directory named by RECONSCHED_CACHE.
"""
from __future__ import annotations
from dataclasses import dataclass, field, fields
from typing import Any, List, Optional, Sequence, Tuple
import hashlib
import json
import logging
import os
import commentjson
import numpy as np

from reconsched.common import ConfigurationError, SchemaError, readEpoch, writeEpoch
from reconsched.landmask import isLand
from reconsched.maneuver import (SlotGrid, buildCostTensor, buildPhaseSlots,
    buildPlanePhaseSlots, loadCosts, saveCosts)
from reconsched.model import PhysicalConstants, ProblemData
from reconsched.orbital import OrbitalElements, TimeGrid, gmstFromEpoch, walkerDelta
from reconsched.track import IngestionError, readTrack
from reconsched.visibility import (VisibilitySettings, buildTensors, loadTensors,
    saveTensors)

logger = logging.getLogger(__name__)

CONFIG_FORMAT = 1
CACHE_ENV = "RECONSCHED_CACHE"
MAX_LAND_ATTEMPTS = 100000

CONSTANT_NAMES = ["dObs", "dComm", "dMin", "dMax", "bObs", "bComm", "bCharge",
    "bTime", "bRecon", "bMin", "bMax", "C", "cMax", "gigabyte"]


@dataclass
class ManeuverSettings:
    budgetScale: float = 0.75
    maxRevolutions: int = 30
    maxDuration: Optional[float] = None
    minAltitude: float = 100.0


@dataclass
class ScenarioInstance:
    name: str
    grid: TimeGrid
    satellites: List[OrbitalElements]
    slotGrid: SlotGrid
    targets: List[Tuple[float, float]]
    stations: List[Tuple[float, float]]
    constants: PhysicalConstants
    visibilitySettings: VisibilitySettings = field(default_factory=VisibilitySettings)
    maneuver: ManeuverSettings = field(default_factory=ManeuverSettings)
    seed: Optional[int] = None
    stationNames: Optional[List[str]] = None
    _tensors: Any = field(default=None, repr=False, compare=False)
    _costs: Any = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        K, P, G = len(self.satellites), len(self.targets), len(self.stations)
        if min(K, P, G) < 1:
            raise ConfigurationError(
                f"A scenario needs satellites, targets and stations, got K={K}, P={P}, G={G}")
        if self.grid.totalSteps % P != 0:
            raise ConfigurationError(
                f"{self.grid.totalSteps} steps cannot be split into {P} target windows")
        if self.slotGrid.stages != self.grid.stages:
            raise ConfigurationError(f"Slot grid has {self.slotGrid.stages} stages, "
                f"the time grid {self.grid.stages}")
        if any(len(stage) != K for stage in self.slotGrid.slots):
            raise ConfigurationError("Slot grid does not list every satellite")

    @property
    def tensors(self):
        if self._tensors is None:
            self._tensors = _cached("tensors", self.tensorHash(),
                lambda: buildTensors(self),
                lambda path, t: saveTensors(path, t, self.grid, self.visibilitySettings.masking),
                loadTensors)
        return self._tensors

    @property
    def costs(self):
        if self._costs is None:
            self._costs = _cached("costs", self.costHash(), self._buildCosts,
                saveCosts, loadCosts)
        return self._costs

    def _buildCosts(self):
        m = self.maneuver
        return buildCostTensor(self.slotGrid, self.grid,
            self.constants.perSatellite("cMax", len(self.satellites)),
            self.constants.bRecon, m.maxDuration, m.maxRevolutions, m.minAltitude)

    def problemData(self) -> ProblemData:
        return ProblemData(self.tensors, self.constants, self.costs)

    def withStages(self, stages: int, slotGrid: Optional[SlotGrid] = None) -> ScenarioInstance:
        """Same scenario with the horizon split into a different number of stages"""
        if slotGrid is None:
            slotGrid = SlotGrid([self.slotGrid.slots[0]] +
                [self.slotGrid.slots[1]] * stages, self.slotGrid.kind)
        return ScenarioInstance(self.name, self.grid.withStages(stages), self.satellites,
            slotGrid, self.targets, self.stations, self.constants,
            self.visibilitySettings, self.maneuver, self.seed, self.stationNames)

    def tensorHash(self) -> str:
        d = configToDict(self)
        return _digest({k: d[k] for k in ["grid", "slots", "satellites", "targets",
            "stations", "visibility"]})

    def costHash(self) -> str:
        d = configToDict(self)
        return _digest({
            "grid": d["grid"], "slots": d["slots"], "maneuver": d["maneuver"],
            "cMax": d["constants"]["cMax"], "bRecon": d["constants"]["bRecon"]})


def _digest(obj) -> str:
    text = json.dumps(obj, sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:20]

def _cached(kind, digest, build, save, load):
    cacheDir = os.environ.get(CACHE_ENV)
    if not cacheDir:
        return build()
    path = os.path.join(cacheDir, f"{kind}-{digest}.npz")
    if os.path.exists(path):
        try:
            value = load(path)
            logger.info("Loaded %s from cache %s", kind, path)
            return value
        except (OSError, ValueError, KeyError, ConfigurationError) as e:
            logger.warning("Ignoring unreadable cache entry %s: %s", path, e)
    value = build()
    os.makedirs(cacheDir, exist_ok=True)
    save(path, value)
    logger.info("Stored %s in cache %s", kind, path)
    return value


def constantsFromPreset(section: dict) -> PhysicalConstants:
    return PhysicalConstants(**{name: float(section[name]) for name in CONSTANT_NAMES})

def visibilityFromPreset(preset: dict, epoch) -> VisibilitySettings:
    vis, prop = preset["visibility"], preset["propagation"]
    gmst = prop["gmstAtEpoch"]
    return VisibilitySettings(
        targetCone=float(vis["targetCone"]),
        stationCone=float(vis["stationCone"]),
        interpretation=vis["interpretation"],
        sunThreshold=float(vis["sunThreshold"]),
        masking=bool(vis["masking"]),
        perturbation=prop["perturbation"],
        gmstAtEpoch=gmstFromEpoch(epoch) if gmst is None else float(gmst))

def maneuverFromPreset(section: dict) -> ManeuverSettings:
    maxDuration = section["maxDuration"]
    return ManeuverSettings(
        budgetScale=float(section["budgetScale"]),
        maxRevolutions=int(section["maxRevolutions"]),
        maxDuration=None if maxDuration is None else float(maxDuration),
        minAltitude=float(section["minAltitude"]))

def buildSlotGrid(satellites: Sequence[OrbitalElements], stages: int, kind: str,
                  phases: int, planeLevels: int = 1, budget: float = 0.0,
                  budgetScale: float = 0.75) -> SlotGrid:
    """
    Slots are fixed relative to every satellite's initial orbit and repeat in
    every stage; stage 0 holds the initial orbit. The initial orbit is always
    one of the slots, so staying put is possible.
    """
    if kind == "phase_only":
        perSat = [buildPhaseSlots(e, phases) for e in satellites]
    elif kind == "plane_and_phase":
        perSat = [buildPlanePhaseSlots(e, phases, planeLevels, budget, budgetScale)
            for e in satellites]
    else:
        raise ConfigurationError(f"Unknown slot grid kind '{kind}'")
    return SlotGrid([[[e] for e in satellites]] + [perSat] * stages, kind)


def generateRandom(seed: int, stages: int, satellites: int, slots: int,
                   preset: Optional[dict] = None) -> ScenarioInstance:
    """
    Random instance with inclined circular orbits. Draws come from a PCG64
    generator in a fixed order: per satellite altitude, inclination, RAAN and
    argument of latitude; per target latitude and longitude; per station
    latitude and longitude, redrawn until the station is on land when
    required.
    """
    if preset is None:
        from reconsched.presets import obtainPreset
        preset = obtainPreset([])
    rnd = preset["random"]
    gridSection = preset["grid"]
    grid = TimeGrid.fromHorizon(gridSection["epoch"], float(gridSection["dt"]),
        float(gridSection["horizon"]), stages)
    P, G = rnd["targets"], rnd["stations"]
    if grid.totalSteps % P != 0:
        raise ConfigurationError(f"{grid.totalSteps} steps cannot be split into {P} targets")
    if satellites < 1 or slots < 1:
        raise ConfigurationError("At least one satellite and one slot are needed")

    rng = np.random.Generator(np.random.PCG64(seed))
    orbits = []
    for _ in range(satellites):
        altitude = rng.uniform(*rnd["altitude"])
        inclination = rng.uniform(*rnd["inclination"])
        raan = rng.uniform(*rnd["raan"])
        argLatitude = rng.uniform(*rnd["argLatitude"])
        orbits.append(OrbitalElements.fromAltitude(altitude, inclination, raan, argLatitude))
    targets = [(float(rng.uniform(*rnd["latitude"])), float(rng.uniform(*rnd["longitude"])))
        for _ in range(P)]
    stations = []
    for _ in range(G):
        for attempt in range(MAX_LAND_ATTEMPTS):
            lat, lon = float(rng.uniform(*rnd["latitude"])), float(rng.uniform(*rnd["longitude"]))
            if not rnd["stationsOnLand"] or isLand(lat, lon):
                break
        else:
            raise ConfigurationError("No land found for a ground station; check the ranges")
        logger.debug("Station %d placed at (%.2f, %.2f) after %d draws",
            len(stations), lat, lon, attempt + 1)
        stations.append((lat, lon))

    constants = constantsFromPreset(preset["constants"])
    maneuver = maneuverFromPreset(preset["maneuver"])
    slotGrid = buildSlotGrid(orbits, stages, "phase_only", slots)
    logger.info("Generated random instance: seed %d, S=%d, K=%d, J=%d, T=%d",
        seed, stages, satellites, slots, grid.totalSteps)
    return ScenarioInstance(
        name=f"random-s{stages}-k{satellites}-j{slots}-seed{seed}",
        grid=grid, satellites=orbits, slotGrid=slotGrid, targets=targets,
        stations=stations, constants=constants,
        visibilitySettings=visibilityFromPreset(preset, grid.epoch),
        maneuver=maneuver, seed=seed)


def loadCaseStudy(trackFile: Optional[str] = None,
                  preset: Optional[dict] = None) -> ScenarioInstance:
    """
    Storm-tracking scenario: every fix of the track is a target, the horizon
    starts at the first fix and the constellation is a Walker-delta pattern
    with the plane-and-phase slot grid.
    """
    if preset is None:
        from reconsched.presets import obtainPreset
        preset = obtainPreset([":caseStudy"])
    study = preset["caseStudy"]
    points = readTrack(trackFile or study["track"], float(study["trackInterval"]))
    gridSection = preset["grid"]
    epoch = points[0].time
    try:
        grid = TimeGrid.fromHorizon(epoch, float(gridSection["dt"]),
            float(gridSection["horizon"]), gridSection["stages"])
    except ConfigurationError as e:
        raise IngestionError(str(e)) from None
    if grid.totalSteps % len(points) != 0:
        raise IngestionError(f"{grid.totalSteps} steps cannot be split into "
            f"{len(points)} track windows")

    walker = study["walker"]
    satellites = walkerDelta(walker.total, walker.planes, walker.phasing,
        float(walker.inclination), float(study["altitude"]))
    constants = constantsFromPreset(preset["constants"])
    man = preset["maneuver"]
    maneuver = maneuverFromPreset(man)
    slotGrid = buildSlotGrid(satellites, grid.stages, man["slots"], man["phases"],
        man["planeLevels"], float(constants.cMax) if np.ndim(constants.cMax) == 0
            else float(np.min(constants.cMax)),
        maneuver.budgetScale)
    logger.info("Case study: %d fixes, %d satellites, T=%d, %d slots per stage",
        len(points), len(satellites), grid.totalSteps, len(slotGrid.slots[1][0]))
    return ScenarioInstance(
        name="case-study", grid=grid, satellites=satellites, slotGrid=slotGrid,
        targets=[(p.lat, p.lon) for p in points],
        stations=[(lat, lon) for _, lat, lon in study["stations"]],
        constants=constants,
        visibilitySettings=visibilityFromPreset(preset, epoch),
        maneuver=maneuver,
        stationNames=[name for name, _, _ in study["stations"]])


def _plain(value):
    if isinstance(value, np.ndarray):
        return [float(v) for v in value]
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return float(value)

def configToDict(instance: ScenarioInstance) -> dict:
    g = instance.grid
    return {
        "format": CONFIG_FORMAT,
        "name": instance.name,
        "seed": instance.seed,
        "grid": {"epoch": writeEpoch(g.epoch), "dt": g.dt, "totalSteps": g.totalSteps,
            "stages": g.stages},
        "satellites": [e.toDict() for e in instance.satellites],
        "slots": instance.slotGrid.toDict(),
        "targets": [[float(lat), float(lon)] for lat, lon in instance.targets],
        "stations": [[float(lat), float(lon)] for lat, lon in instance.stations],
        "stationNames": instance.stationNames,
        "constants": {name: _plain(getattr(instance.constants, name))
            for name in CONSTANT_NAMES},
        "visibility": {f.name: getattr(instance.visibilitySettings, f.name)
            for f in fields(VisibilitySettings)},
        "maneuver": {f.name: getattr(instance.maneuver, f.name)
            for f in fields(ManeuverSettings)}
    }

def _checkKeys(location: str, d: Any, allowed: Sequence[str], required=True) -> None:
    if not isinstance(d, dict):
        raise SchemaError(location, "an object expected")
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise SchemaError(f"{location}.{unknown[0]}", "unknown field")
    if required:
        missing = [k for k in allowed if k not in d]
        if missing:
            raise SchemaError(f"{location}.{missing[0]}", "missing field")

def configFromDict(d: dict) -> ScenarioInstance:
    _checkKeys("config", d, ["format", "name", "seed", "grid", "satellites", "slots",
        "targets", "stations", "stationNames", "constants", "visibility", "maneuver"],
        required=False)
    if d.get("format") != CONFIG_FORMAT:
        raise SchemaError("config.format",
            f"version {d.get('format')} is not supported, expected {CONFIG_FORMAT}")
    for key in ["grid", "satellites", "slots", "targets", "stations", "constants"]:
        if key not in d:
            raise SchemaError(f"config.{key}", "missing field")
    _checkKeys("config.grid", d["grid"], ["epoch", "dt", "totalSteps", "stages"])
    _checkKeys("config.constants", d["constants"], CONSTANT_NAMES, required=False)
    visNames = [f.name for f in fields(VisibilitySettings)]
    _checkKeys("config.visibility", d.get("visibility", {}), visNames, required=False)
    manNames = [f.name for f in fields(ManeuverSettings)]
    _checkKeys("config.maneuver", d.get("maneuver", {}), manNames, required=False)
    _checkKeys("config.slots", d["slots"], ["kind", "slots"], required=False)
    for i, e in enumerate(d["satellites"]):
        _checkKeys(f"config.satellites[{i}]", e,
            ["semiMajorAxis", "inclination", "raan", "argLatitude"])

    try:
        g = d["grid"]
        grid = TimeGrid(readEpoch(g["epoch"]), float(g["dt"]), int(g["totalSteps"]),
            int(g["stages"]))
        constants = dict(d["constants"])
        missing = [n for n in CONSTANT_NAMES if n not in constants and n != "gigabyte"]
        if missing:
            raise SchemaError(f"config.constants.{missing[0]}", "missing field")
        constants = PhysicalConstants(**{k: (np.array(v, dtype=float)
            if isinstance(v, list) else float(v)) for k, v in constants.items()})
        return ScenarioInstance(
            name=d.get("name", "scenario"),
            grid=grid,
            satellites=[OrbitalElements.fromDict(e) for e in d["satellites"]],
            slotGrid=SlotGrid.fromDict(d["slots"]),
            targets=[(float(lat), float(lon)) for lat, lon in d["targets"]],
            stations=[(float(lat), float(lon)) for lat, lon in d["stations"]],
            constants=constants,
            visibilitySettings=VisibilitySettings(**d.get("visibility", {})),
            maneuver=ManeuverSettings(**d.get("maneuver", {})),
            seed=d.get("seed"),
            stationNames=d.get("stationNames"))
    except (TypeError, ValueError, KeyError) as e:
        raise SchemaError("config", f"malformed value ({e})") from None

def saveConfig(path: str, instance: ScenarioInstance) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(configToDict(instance), f, indent=2)

def loadConfig(path: str) -> ScenarioInstance:
    try:
        with open(path, encoding="utf-8") as f:
            d = commentjson.load(f)
    except OSError as e:
        raise SchemaError(path, f"cannot read ({e})") from None
    except (ValueError, commentjson.JSONLibraryException) as e:
        raise SchemaError(path, f"not valid JSON ({e})") from None
    return configFromDict(d)
