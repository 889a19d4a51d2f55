"""
Rolling horizon procedure: solve a window of 1 + lookahead stages, commit the
first of them, roll the carry state forward and repeat. The last window
commits everything it covers.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from typing import List, Optional, Sequence
import json
import logging
import numpy as np

from reconsched.model import (CarryState, InfeasibleModelError, buildRhpSubproblem,
    initialCarry, updateCarryState)
from reconsched.schedule import Schedule, emptySchedule, extractSchedule, score, simulateStorage
from reconsched.solver import (INFEASIBLE, UNBOUNDED, NO_SOLUTION_LIMIT, SolveLimits,
    solveMilp)

logger = logging.getLogger(__name__)

class RhpError(RuntimeError):
    def __init__(self, stage: int, message: str, status: Optional[str] = None):
        super().__init__(f"Subproblem of stage {stage}: {message}")
        self.stage = stage
        self.status = status

class AssemblyError(RuntimeError):
    pass


@dataclass
class SubproblemTrace:
    stage: int
    committedFirst: int
    committedLast: int
    status: str
    objective: float
    committedObjective: float
    committedZ: float
    bound: Optional[float]
    gap: Optional[float]
    nodes: int
    wallTime: float
    committedDeltaV: float

    def toDict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class RhpResult:
    schedule: Schedule
    traces: List[SubproblemTrace] = field(default_factory=list)

    @property
    def z(self) -> float:
        return self.schedule.z

    @property
    def Z(self) -> float:
        return self.schedule.Z

    @property
    def subproblems(self) -> int:
        return len(self.traces)

    @property
    def wallTime(self) -> float:
        return sum(t.wallTime for t in self.traces)

    @property
    def status(self) -> str:
        if all(t.status == "optimal" for t in self.traces):
            return "optimal"
        return "feasible_limit_hit"

    def traceToDict(self) -> dict:
        return {
            "subproblems": [t.toDict() for t in self.traces],
            "z": self.z,
            "Z": self.Z,
            "wallTime": self.wallTime
        }

def saveTrace(path: str, result: RhpResult) -> None:
    with open(path, "w") as f:
        json.dump(result.traceToDict(), f, indent=2)


def commitPattern(stages: int, lookahead: int) -> List[Sequence[int]]:
    """
    Stages committed by every subproblem: one each until the last window,
    which keeps all of its stages.
    """
    if not 1 <= lookahead <= stages - 1:
        raise RhpError(1, f"lookahead {lookahead} has to be in 1..{stages - 1}")
    last = stages - lookahead
    return [range(s, s + 1) for s in range(1, last)] + [range(last, stages + 1)]


def runRhp(data, lookahead: int, limits: Optional[SolveLimits] = None,
           arrivals: str = "direct", splitTime: bool = True) -> RhpResult:
    """
    Solve the reconfigurable problem piecewise. With `splitTime` the time
    limit is shared evenly among the subproblems.
    """
    limits = limits or SolveLimits()
    S = data.tensors.stages
    pattern = commitPattern(S, lookahead)
    subLimits = limits.scaled(1 / len(pattern)) if splitTime else limits
    carry = initialCarry(data.constants, data.tensors.satellites)
    commits, traces = [], []
    for committed in pattern:
        s = committed[0]
        logger.info("RHP subproblem %d/%d: stages %d..%d, committing %d..%d",
            len(traces) + 1, len(pattern), s, s + lookahead, committed[0], committed[-1])
        try:
            model = buildRhpSubproblem(data, s, lookahead, carry, arrivals)
        except InfeasibleModelError as e:
            raise RhpError(s, str(e), INFEASIBLE) from None
        solution = solveMilp(model, subLimits)
        if solution.status in (INFEASIBLE, UNBOUNDED, NO_SOLUTION_LIMIT):
            raise RhpError(s, f"no schedule ({solution.status})", solution.status)
        window = extractSchedule(model, solution.values)
        commit = window.restrict(committed[0], committed[-1])
        commit.d, commit.b = simulateStorage(commit, data.constants, carry.d1, carry.b1)
        commit.z, commit.Z = score(commit, data.constants)
        commit.objective = commit.z
        traces.append(SubproblemTrace(
            stage=s, committedFirst=committed[0], committedLast=committed[-1],
            status=solution.status, objective=float(solution.objective),
            committedObjective=commit.z, committedZ=commit.Z,
            bound=solution.bound, gap=solution.gap, nodes=solution.nodes,
            wallTime=solution.wallTime,
            committedDeltaV=float(commit.propellantUsed().sum())))
        commits.append(commit)
        if committed[-1] < S:
            carry = updateCarryState(carry, window, data.constants)
    schedule = assemble(commits, data.constants)
    logger.info("RHP finished: z = %g over %d subproblems", schedule.z, len(traces))
    return RhpResult(schedule, traces)


def assemble(commits: Sequence[Schedule], constants, d1=None, b1=None) -> Schedule:
    """
    Join committed stage blocks into one schedule over the whole horizon.
    Storage is re-simulated from the initial entry state.
    """
    if not commits:
        raise AssemblyError("Nothing to assemble")
    first = commits[0]
    K, S, n = first.satellites, first.stages, first.stepsPerStage
    covered = np.zeros(S + 1, dtype=int)
    result = emptySchedule("rhp", K, S, n, first.targets, first.stations,
        first.staged, 1, S)
    for part in commits:
        if (part.satellites, part.stages, part.stepsPerStage, part.staged) \
                != (K, S, n, first.staged):
            raise AssemblyError("Committed blocks describe different instances")
        covered[part.firstStage:part.lastStage + 1] += 1
        sl = slice((part.firstStage - 1) * n, part.lastStage * n)
        result.y[:, sl] = part.y[:, sl]
        result.q[:, sl] = part.q[:, sl]
        result.h[:, sl] = part.h[:, sl]
        if part.staged:
            entry = part.route[:, part.firstStage - 1]
            known = result.route[:, part.firstStage - 1]
            if np.any((known >= 0) & (known != entry)):
                raise AssemblyError(f"Stage {part.firstStage} does not start where "
                    "the previous block ended")
            result.route[:, part.firstStage - 1:part.lastStage + 1] = \
                part.route[:, part.firstStage - 1:part.lastStage + 1]
            result.deltaV[:, part.firstStage:part.lastStage + 1] = \
                part.deltaV[:, part.firstStage:part.lastStage + 1]
    if np.any(covered[1:] > 1):
        raise AssemblyError(f"Stages {list(np.flatnonzero(covered > 1))} are committed twice")
    if np.any(covered[1:] == 0):
        missing = [int(s) for s in np.flatnonzero(covered == 0) if s > 0]
        raise AssemblyError(f"Stages {missing} are missing")
    d1 = constants.perSatellite("dMin", K) if d1 is None else d1
    b1 = constants.perSatellite("bMax", K) if b1 is None else b1
    result.d, result.b = simulateStorage(result, constants, d1, b1)
    result.z, result.Z = score(result, constants)
    result.objective = result.z
    return result
