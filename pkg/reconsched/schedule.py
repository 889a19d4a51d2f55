"""
Schedules recovered from model solutions, their storage trajectories and
their scores.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple
import json
import math
import numpy as np

from reconsched.common import INTEGRALITY_TOL, SchemaError
from reconsched.model import MilpModel, PhysicalConstants

SCHEDULE_FORMAT = 1
RESIMULATION_TOL = 1e-6

class ExtractionError(RuntimeError):
    pass

@dataclass
class Schedule:
    """
    Task series over the global step grid [sat, step, ·]. `route[k, s]` is
    the slot occupied in stage s (0 is the initial orbit), -1 where unknown;
    fixed-constellation schedules have no route. `deltaV[k, s]` is the
    transfer cost of arriving in stage s. Steps outside
    firstStage..lastStage carry NaN storage.
    """
    kind: str
    stages: int
    stepsPerStage: int
    y: np.ndarray
    q: np.ndarray
    h: np.ndarray
    d: np.ndarray
    b: np.ndarray
    route: Optional[np.ndarray] = None
    deltaV: Optional[np.ndarray] = None
    firstStage: int = 1
    lastStage: int = 0
    objective: float = 0.0
    z: float = 0.0
    Z: float = 0.0

    def __post_init__(self):
        if not self.lastStage:
            self.lastStage = self.stages

    @property
    def satellites(self) -> int:
        return self.y.shape[0]

    @property
    def totalSteps(self) -> int:
        return self.y.shape[1]

    @property
    def targets(self) -> int:
        return self.y.shape[2]

    @property
    def stations(self) -> int:
        return self.q.shape[2]

    @property
    def staged(self) -> bool:
        return self.route is not None

    @property
    def steps(self) -> range:
        n = self.stepsPerStage
        return range((self.firstStage - 1) * n, self.lastStage * n)

    def stageSlice(self, stage: int) -> slice:
        n = self.stepsPerStage
        return slice((stage - 1) * n, stage * n)

    def observations(self) -> int:
        return int(self.y.sum())

    def downlinks(self) -> int:
        return int(self.q.sum())

    def stageCounts(self) -> Dict[str, np.ndarray]:
        """
        Observations, downlinks and charging steps as [sat, stage] arrays.
        """
        K, S, n = self.satellites, self.stages, self.stepsPerStage
        return {
            "observations": self.y.reshape(K, S, n, self.targets).sum(axis=(2, 3)),
            "downlinks": self.q.reshape(K, S, n, self.stations).sum(axis=(2, 3)),
            "charging": self.h.reshape(K, S, n).sum(axis=2)
        }

    def propellantUsed(self) -> np.ndarray:
        """Δv spent per satellite, m/s"""
        if self.deltaV is None:
            return np.zeros(self.satellites)
        return self.deltaV.sum(axis=1)

    def restrict(self, firstStage: int, lastStage: int) -> Schedule:
        """
        Copy keeping only the given stages; everything else is cleared.
        """
        keep = np.zeros(self.totalSteps, dtype=bool)
        keep[(firstStage - 1) * self.stepsPerStage:lastStage * self.stepsPerStage] = True
        result = emptySchedule(self.kind, self.satellites, self.stages,
            self.stepsPerStage, self.targets, self.stations, self.staged,
            firstStage, lastStage)
        result.y[:, keep] = self.y[:, keep]
        result.q[:, keep] = self.q[:, keep]
        result.h[:, keep] = self.h[:, keep]
        result.d[:, keep] = self.d[:, keep]
        result.b[:, keep] = self.b[:, keep]
        if self.staged:
            result.route[:, firstStage - 1:lastStage + 1] = self.route[:, firstStage - 1:lastStage + 1]
            result.deltaV[:, firstStage:lastStage + 1] = self.deltaV[:, firstStage:lastStage + 1]
        return result


def emptySchedule(kind: str, satellites: int, stages: int, stepsPerStage: int,
                  targets: int, stations: int, staged: bool = True,
                  firstStage: int = 1, lastStage: int = 0) -> Schedule:
    T = stages * stepsPerStage
    K = satellites
    return Schedule(
        kind=kind, stages=stages, stepsPerStage=stepsPerStage,
        y=np.zeros((K, T, targets), dtype=bool),
        q=np.zeros((K, T, stations), dtype=bool),
        h=np.zeros((K, T), dtype=bool),
        d=np.full((K, T), np.nan), b=np.full((K, T), np.nan),
        route=np.full((K, stages + 1), -1, dtype=int) if staged else None,
        deltaV=np.zeros((K, stages + 1)) if staged else None,
        firstStage=firstStage, lastStage=lastStage or stages)


def simulateStorage(schedule: Schedule, constants: PhysicalConstants,
                    d1: np.ndarray, b1: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Forward simulation of data and battery storage from the entry values of
    schedule.firstStage. Every stage entry of a staged schedule pays one
    maneuver; the last step's tasks never post to storage.
    """
    c = constants
    K, T = schedule.satellites, schedule.totalSteps
    steps = schedule.steps
    d = np.full((K, T), np.nan)
    b = np.full((K, T), np.nan)
    if not len(steps):
        return d, b
    sel = slice(steps.start, steps.stop)
    obs = schedule.y[:, sel].sum(axis=2)
    dl = schedule.q[:, sel].sum(axis=2)
    charge = schedule.h[:, sel]
    dInc = c.dObs * obs - c.dComm * dl
    bInc = c.bCharge * charge - c.bObs * obs - c.bComm * dl - c.bTime
    zero = np.zeros((K, 1))
    d[:, sel] = np.asarray(d1)[:, None] + np.hstack([zero, np.cumsum(dInc[:, :-1], axis=1)])
    b[:, sel] = np.asarray(b1)[:, None] + np.hstack([zero, np.cumsum(bInc[:, :-1], axis=1)])
    if schedule.staged and c.bRecon:
        recon = np.zeros(len(steps))
        recon[::schedule.stepsPerStage] = c.bRecon
        b[:, sel] -= np.cumsum(recon)[None, :]
    return d, b


def _globalSteps(model: MilpModel, index: np.ndarray) -> np.ndarray:
    if model.meta["staged"]:
        return (index[:, 0] - 1) * model.meta["stepsPerStage"] + index[:, 2]
    return index[:, 2]

def _scheduleFor(model: MilpModel) -> Schedule:
    m = model.meta
    schedule = emptySchedule(model.kind, m["satellites"], m["stages"],
        m["stepsPerStage"], m["targets"], m["stations"], m["staged"],
        m["firstStage"], m["lastStage"])
    if m["staged"]:
        schedule.route[:, m["firstStage"] - 1] = m["origins"]
    return schedule

def extractSchedule(model: MilpModel, values) -> Schedule:
    """
    Read a solution vector back into a schedule. The storage series are
    re-simulated from the tasks and must agree with the solver's values.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (model.numVariables,):
        raise ExtractionError(
            f"Solution has {values.size} values, model {model.name} has {model.numVariables} columns")
    worst = model.integralityViolation(values)
    if worst > INTEGRALITY_TOL:
        raise ExtractionError(f"Binary value off by {worst:.2e} from an integer")
    v = values.copy()
    v[model.binary] = np.round(v[model.binary])
    schedule = _scheduleFor(model)

    for prefix, target in (("y", schedule.y), ("q", schedule.q)):
        cols, index = model.family(prefix)
        chosen = v[cols] > 0.5
        if np.any(chosen):
            target[index[chosen, 1], _globalSteps(model, index)[chosen], index[chosen, 3]] = True
    cols, index = model.family("h")
    chosen = v[cols] > 0.5
    schedule.h[index[chosen, 1], _globalSteps(model, index)[chosen]] = True

    solverStorage = {}
    for prefix in ("d", "b"):
        cols, index = model.family(prefix)
        series = np.full((schedule.satellites, schedule.totalSteps), np.nan)
        series[index[:, 1], _globalSteps(model, index)] = v[cols]
        solverStorage[prefix] = series

    if schedule.staged:
        cols, index = model.family("x")
        arrivals = np.zeros_like(schedule.route)
        for col, (s, k, i, j) in zip(cols[v[cols] > 0.5], index[v[cols] > 0.5]):
            if schedule.route[k, s - 1] not in (-1, i):
                raise ExtractionError(
                    f"Satellite {k + 1} leaves slot {i + 1} in stage {s} without occupying it")
            schedule.route[k, s - 1] = i
            schedule.route[k, s] = j
            schedule.deltaV[k, s] = model.xCost[col]
            arrivals[k, s] += 1
        stages = slice(schedule.firstStage, schedule.lastStage + 1)
        if np.any(arrivals[:, stages] != 1):
            raise ExtractionError("Every satellite has to take exactly one transfer per stage")

    d, b = simulateStorage(schedule, model.constants, model.meta["d1"], model.meta["b1"])
    for name, simulated in (("data", d), ("battery", b)):
        solver = solverStorage[name[0]]
        covered = ~np.isnan(simulated)
        diff = np.abs(solver[covered] - simulated[covered])
        limit = RESIMULATION_TOL * np.maximum(1.0, np.abs(simulated[covered]))
        if np.any(diff > limit):
            where = np.argwhere(covered)[np.argmax(diff - limit)]
            raise ExtractionError(
                f"Solver {name} storage of satellite {where[0] + 1} at step {where[1] + 1} "
                f"disagrees with re-simulation by {diff.max():.3e}")
    schedule.d, schedule.b = d, b
    schedule.objective = model.objectiveValue(v)
    schedule.z, schedule.Z = score(schedule, model.constants)
    return schedule


def embedSchedule(model: MilpModel, schedule: Schedule) -> np.ndarray:
    """
    Solution vector of `model` realizing the tasks and route of a schedule.
    Storage is re-simulated for the model's entry state. A schedule without
    a route stays in its origin slots.
    """
    m = model.meta
    v = np.zeros(model.numVariables)
    for prefix, source in (("y", schedule.y), ("q", schedule.q)):
        cols, index = model.family(prefix)
        if len(cols):
            v[cols] = source[index[:, 1], _globalSteps(model, index), index[:, 3]]
    cols, index = model.family("h")
    v[cols] = schedule.h[index[:, 1], _globalSteps(model, index)]

    target = _scheduleFor(model)
    target.y, target.q, target.h = schedule.y, schedule.q, schedule.h
    if m["staged"]:
        if schedule.staged:
            route = schedule.route.copy()
            route[:, m["firstStage"] - 1] = m["origins"]
        else:
            route = np.repeat(np.asarray(m["origins"])[:, None], m["stages"] + 1, axis=1)
        target.route = route
        cols, index = model.family("x")
        if len(cols):
            v[cols] = (route[index[:, 1], index[:, 0] - 1] == index[:, 2]) \
                & (route[index[:, 1], index[:, 0]] == index[:, 3])
        cols, index = model.family("o")
        if len(cols):
            v[cols] = route[index[:, 1], index[:, 0]] == index[:, 2]
    d, b = simulateStorage(target, model.constants, m["d1"], m["b1"])
    for prefix, series in (("d", d), ("b", b)):
        cols, index = model.family(prefix)
        v[cols] = series[index[:, 1], _globalSteps(model, index)]
    return v


def scoreCounts(observations: int, downlinks: int,
                constants: PhysicalConstants) -> Tuple[float, float]:
    """
    Objective value and downlinked data in GB.
    """
    z = constants.C * downlinks + observations
    Z = constants.dComm * downlinks / constants.gigabyte
    return float(z), float(Z)

def score(schedule: Schedule, constants: PhysicalConstants) -> Tuple[float, float]:
    return scoreCounts(schedule.observations(), schedule.downlinks(), constants)


def dataLeft(schedule: Schedule, constants: PhysicalConstants) -> np.ndarray:
    """
    Data still on board after the last step, MB per satellite.
    """
    last = schedule.steps.stop - 1
    return schedule.d[:, last] + constants.dObs * schedule.y[:, last].sum(axis=1) \
        - constants.dComm * schedule.q[:, last].sum(axis=1)


def transferStats(schedule: Schedule, slotGrid) -> Dict[str, int]:
    """
    Count transfers that leave the current slot and the plane changes among
    them.
    """
    stats = {"transfers": 0, "inclinationRaise": 0, "inclinationLower": 0,
        "raanRaise": 0, "raanLower": 0}
    if not schedule.staged:
        return stats
    for k in range(schedule.satellites):
        for s in range(schedule.firstStage, schedule.lastStage + 1):
            i, j = schedule.route[k, s - 1], schedule.route[k, s]
            if i < 0 or j < 0:
                continue
            src, dst = slotGrid.slots[s - 1][k][i], slotGrid.slots[s][k][j]
            if src.sameOrbit(dst):
                continue
            stats["transfers"] += 1
            di = dst.inclination - src.inclination
            dRaan = (dst.raan - src.raan + 180) % 360 - 180
            if abs(di) > 1e-9:
                stats["inclinationRaise" if di > 0 else "inclinationLower"] += 1
            if abs(dRaan) > 1e-9:
                stats["raanRaise" if dRaan > 0 else "raanLower"] += 1
    return stats


def _nanToNone(series):
    return [None if math.isnan(x) else round(float(x), 9) for x in series]

def scheduleToDict(schedule: Schedule) -> dict:
    satellites = []
    for k in range(schedule.satellites):
        stages = []
        for s in range(schedule.firstStage, schedule.lastStage + 1):
            sl = schedule.stageSlice(s)
            obs = np.argwhere(schedule.y[k, sl])
            dl = np.argwhere(schedule.q[k, sl])
            stages.append({
                "stage": s,
                "slot": int(schedule.route[k, s]) if schedule.staged else None,
                "deltaV": float(schedule.deltaV[k, s]) if schedule.staged else 0.0,
                "observations": [[int(t) + 1, int(p) + 1] for t, p in obs],
                "downlinks": [[int(t) + 1, int(g) + 1] for t, g in dl],
                "charging": [int(t) + 1 for t in np.flatnonzero(schedule.h[k, sl])]
            })
        satellites.append({
            "satellite": k + 1,
            "origin": int(schedule.route[k, schedule.firstStage - 1]) if schedule.staged else None,
            "stages": stages,
            "data": _nanToNone(schedule.d[k]),
            "battery": _nanToNone(schedule.b[k])
        })
    return {
        "format": SCHEDULE_FORMAT,
        "meta": {
            "kind": schedule.kind,
            "satellites": schedule.satellites,
            "stages": schedule.stages,
            "stepsPerStage": schedule.stepsPerStage,
            "targets": schedule.targets,
            "stations": schedule.stations,
            "firstStage": schedule.firstStage,
            "lastStage": schedule.lastStage,
            "staged": schedule.staged,
            "objective": schedule.objective,
            "z": schedule.z,
            "Z": schedule.Z
        },
        "satellites": satellites
    }

def scheduleFromDict(data: dict) -> Schedule:
    try:
        if data.get("format") != SCHEDULE_FORMAT:
            raise SchemaError("format", f"unsupported schedule format {data.get('format')}")
        m = data["meta"]
        schedule = emptySchedule(m["kind"], m["satellites"], m["stages"],
            m["stepsPerStage"], m["targets"], m["stations"], m["staged"],
            m["firstStage"], m["lastStage"])
        n = schedule.stepsPerStage
        for k, sat in enumerate(data["satellites"]):
            if schedule.staged:
                schedule.route[k, schedule.firstStage - 1] = sat["origin"]
            for stage in sat["stages"]:
                s = stage["stage"]
                offset = (s - 1) * n - 1
                for t, p in stage["observations"]:
                    schedule.y[k, offset + t, p - 1] = True
                for t, g in stage["downlinks"]:
                    schedule.q[k, offset + t, g - 1] = True
                for t in stage["charging"]:
                    schedule.h[k, offset + t] = True
                if schedule.staged:
                    schedule.route[k, s] = stage["slot"]
                    schedule.deltaV[k, s] = stage["deltaV"]
            schedule.d[k] = [np.nan if x is None else x for x in sat["data"]]
            schedule.b[k] = [np.nan if x is None else x for x in sat["battery"]]
        schedule.objective = m["objective"]
        schedule.z, schedule.Z = m["z"], m["Z"]
        return schedule
    except (KeyError, TypeError, IndexError, ValueError) as e:
        raise SchemaError("schedule", f"malformed schedule ({e})") from None

def saveSchedule(path: str, schedule: Schedule) -> None:
    with open(path, "w") as f:
        json.dump(scheduleToDict(schedule), f, indent=2)

def loadSchedule(path: str) -> Schedule:
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise SchemaError(path, f"not valid JSON ({e})") from None
    return scheduleFromDict(data)
