"""
Solving a scenario with one of the formulations and storing the outcome as a
run record: a JSON document with the scores, the Δv ledger, per-stage
counts, the occupied slots and the schedule itself.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional
import json
import logging
import time
import numpy as np

from reconsched.common import SchemaError
from reconsched.model import InfeasibleModelError, ProblemData, buildEossp, buildReossp
from reconsched.rhp import RhpError, runRhp
from reconsched.schedule import (Schedule, dataLeft, extractSchedule, scheduleFromDict,
    scheduleToDict, transferStats)
from reconsched.solver import (INFEASIBLE, NO_SOLUTION_LIMIT, UNBOUNDED, SolveLimits,
    solveMilp)

logger = logging.getLogger(__name__)

RUN_FORMAT = 1
FORMULATIONS = ["eossp", "reossp", "rhp"]

class NoScheduleError(RuntimeError):
    """A solve finished without a schedule; `status` tells why"""
    def __init__(self, message: str, status: str):
        super().__init__(message)
        self.status = status


@dataclass
class FormulationRun:
    formulation: str
    scenario: str
    status: str
    z: float
    Z: float
    wallTime: float
    deltaV: List[List[float]]
    budget: List[float]
    stages: int
    counts: Dict[str, List[List[int]]]
    slots: Optional[List[List[Dict[str, float]]]] = None
    dataLeft: List[float] = field(default_factory=list)
    transfers: Dict[str, int] = field(default_factory=dict)
    bound: Optional[float] = None
    gap: Optional[float] = None
    subproblems: Optional[int] = None
    trace: Optional[List[dict]] = None
    schedule: Any = None

    @property
    def propellant(self) -> np.ndarray:
        """Δv per satellite, m/s"""
        return np.asarray(self.deltaV, dtype=float).reshape(len(self.budget), -1).sum(axis=1)

    def toDict(self) -> dict:
        d = dict(self.__dict__)
        d["format"] = RUN_FORMAT
        d["schedule"] = None if self.schedule is None else scheduleToDict(self.schedule)
        return d

    @staticmethod
    def fromDict(d: dict) -> FormulationRun:
        if d.get("format") != RUN_FORMAT:
            raise SchemaError("run.format", f"unsupported run format {d.get('format')}")
        values = {k: v for k, v in d.items() if k != "format"}
        try:
            run = FormulationRun(**values)
        except TypeError as e:
            raise SchemaError("run", str(e)) from None
        if run.schedule is not None:
            run.schedule = scheduleFromDict(run.schedule)
        return run


def saveRun(path: str, run: FormulationRun) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(run.toDict(), f, indent=2)

def loadRun(path: str) -> FormulationRun:
    try:
        with open(path, encoding="utf-8") as f:
            return FormulationRun.fromDict(json.load(f))
    except OSError as e:
        raise SchemaError(path, f"cannot read ({e})") from None
    except ValueError as e:
        raise SchemaError(path, f"not valid JSON ({e})") from None


def occupiedSlots(schedule: Schedule, slotGrid) -> Optional[List[List[Dict[str, float]]]]:
    """Elements of the slot every satellite occupies in every stage"""
    if not schedule.staged:
        return None
    result = []
    for k in range(schedule.satellites):
        perStage = []
        for s in range(1, schedule.stages + 1):
            j = int(schedule.route[k, s])
            e = slotGrid.slots[s][k][j]
            perStage.append({"slot": j + 1, "inclination": e.inclination,
                "raan": e.raan, "argLatitude": e.argLatitude})
        result.append(perStage)
    return result

def runRecord(formulation: str, instance, schedule: Schedule, status: str,
              wallTime: float, bound=None, gap=None, traces=None) -> FormulationRun:
    K = schedule.satellites
    budget = instance.constants.perSatellite("cMax", K)
    ledger = schedule.deltaV[:, 1:] if schedule.staged else np.zeros((K, schedule.stages))
    return FormulationRun(
        formulation=formulation, scenario=instance.name, status=status,
        z=schedule.z, Z=schedule.Z, wallTime=float(wallTime),
        deltaV=ledger.tolist(), budget=budget.tolist(), stages=schedule.stages,
        counts={k: v.astype(int).tolist() for k, v in schedule.stageCounts().items()},
        slots=occupiedSlots(schedule, instance.slotGrid),
        dataLeft=dataLeft(schedule, instance.constants).tolist(),
        transfers=transferStats(schedule, instance.slotGrid),
        bound=None if bound is None else float(bound),
        gap=None if gap is None else float(gap),
        subproblems=None if traces is None else len(traces),
        trace=None if traces is None else [t.toDict() for t in traces],
        schedule=schedule)


def solveFormulation(instance, formulation: str, limits: Optional[SolveLimits] = None,
                     lookahead: int = 1, arrivals: str = "direct",
                     splitTime: bool = True) -> FormulationRun:
    """
    Build and solve one formulation on a scenario. Raises NoScheduleError
    when the solver ends without a schedule.
    """
    if formulation not in FORMULATIONS:
        raise ValueError(f"Unknown formulation '{formulation}', use one of {', '.join(FORMULATIONS)}")
    limits = limits or SolveLimits()
    data = ProblemData(instance.tensors, instance.constants) if formulation == "eossp" \
        else instance.problemData()
    if formulation == "rhp":
        start = time.perf_counter()
        try:
            result = runRhp(data, lookahead, limits, arrivals, splitTime)
        except RhpError as e:
            raise NoScheduleError(str(e), e.status or INFEASIBLE) from None
        logger.debug("RHP took %.2f s including model building", time.perf_counter() - start)
        return runRecord("rhp", instance, result.schedule, result.status,
            result.wallTime, traces=result.traces)
    try:
        model = buildEossp(data) if formulation == "eossp" else buildReossp(data, arrivals)
    except InfeasibleModelError as e:
        raise NoScheduleError(str(e), INFEASIBLE) from None
    solution = solveMilp(model, limits)
    if solution.status in (INFEASIBLE, UNBOUNDED, NO_SOLUTION_LIMIT) or not solution.hasSolution:
        raise NoScheduleError(f"{formulation}: no schedule ({solution.status})", solution.status)
    schedule = extractSchedule(model, solution.values)
    return runRecord(formulation, instance, schedule, solution.status,
        solution.wallTime, solution.bound, solution.gap)
