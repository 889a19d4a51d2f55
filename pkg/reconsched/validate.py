"""
Feasibility check of a schedule against the instance data alone. It never
looks at a model matrix; storage is re-simulated step by step.
"""
from __future__ import annotations
from dataclasses import dataclass
from typing import List, Optional
import math
import numpy as np

from reconsched.common import FEASIBILITY_TOL

VIOLATION_KINDS = ["shape", "visibility", "exclusivity", "route", "budget",
    "data", "battery", "storage"]

@dataclass
class Violation:
    kind: str
    satellite: int
    stage: Optional[int]
    step: Optional[int]
    message: str

    def __str__(self):
        where = [f"satellite {self.satellite + 1}"]
        if self.stage is not None:
            where.append(f"stage {self.stage}")
        if self.step is not None:
            where.append(f"step {self.step + 1}")
        return f"[{self.kind}] {', '.join(where)}: {self.message}"


def _tol(value: float) -> float:
    return FEASIBILITY_TOL * max(1.0, abs(value))

def _checkVisibility(schedule, tensors, violations):
    K, n = schedule.satellites, schedule.stepsPerStage
    for k in range(K):
        for s in range(schedule.firstStage, schedule.lastStage + 1):
            sl = schedule.stageSlice(s)
            if schedule.staged:
                j = schedule.route[k, s]
                if not 0 <= j < tensors.slotCount(s, k):
                    continue
                V = tensors.targetVisibility(s, k)[j]
                W = tensors.stationVisibility(s, k)[j]
                H = tensors.sunVisibility(s, k)[j]
            else:
                V, W, H = tensors.flatV[k, sl], tensors.flatW[k, sl], tensors.flatH[k, sl]
            for name, task, visible in (("observation", schedule.y[k, sl], V),
                                        ("downlink", schedule.q[k, sl], W),
                                        ("charging", schedule.h[k, sl], H)):
                for t in np.argwhere(task & ~visible)[:, 0][:1]:
                    violations.append(Violation("visibility", k, s, sl.start + int(t),
                        f"{name} without visibility"))

def _checkRoute(schedule, costs, budget, origins, violations):
    for k in range(schedule.satellites):
        if schedule.route[k, schedule.firstStage - 1] != origins[k]:
            violations.append(Violation("route", k, schedule.firstStage, None,
                f"path does not start in slot {origins[k] + 1}"))
        spent = 0.0
        for s in range(schedule.firstStage, schedule.lastStage + 1):
            i, j = schedule.route[k, s - 1], schedule.route[k, s]
            matrix = costs.cost[(s, k)]
            if not (0 <= i < matrix.shape[0] and 0 <= j < matrix.shape[1]):
                violations.append(Violation("route", k, s, None, "no slot occupied"))
                continue
            cost = float(matrix[i, j])
            if math.isinf(cost):
                violations.append(Violation("route", k, s, None,
                    f"transfer {i + 1} -> {j + 1} cannot be flown"))
                continue
            spent += cost
        if spent > budget[k] + _tol(budget[k]):
            violations.append(Violation("budget", k, None, None,
                f"spends {spent:.2f} m/s of {budget[k]:.2f} m/s"))

def _checkStorage(schedule, c, d1, b1, violations):
    """
    Step-by-step storage bookkeeping of every satellite.
    """
    n = schedule.stepsPerStage
    recon = c.bRecon if schedule.staged else 0.0
    for k in range(schedule.satellites):
        dMin, dMax = c.at("dMin", k), c.at("dMax", k)
        bMin, bMax = c.at("bMin", k), c.at("bMax", k)
        d = float(d1[k])
        b = float(b1[k]) - recon
        if b < bMin - _tol(bMin):
            violations.append(Violation("battery", k, schedule.firstStage, None,
                "first maneuver drains the battery"))
        steps = schedule.steps
        dataFailed = batteryFailed = storageFailed = False
        for t in steps:
            s = t // n + 1
            obs = int(schedule.y[k, t].sum())
            dl = int(schedule.q[k, t].sum())
            ch = int(schedule.h[k, t])
            stageEnd = (t + 1) % n == 0
            last = t == steps.stop - 1
            nextRecon = recon if stageEnd and not last else 0.0

            if not dataFailed and (d < dMin - _tol(dMin) or d > dMax + _tol(dMax)
                    or d + c.dObs * obs > dMax + _tol(dMax)
                    or d - c.dComm * dl < dMin - _tol(dMin)):
                violations.append(Violation("data", k, s, t,
                    f"data storage {d:.3f} MB leaves its limits"))
                dataFailed = True
            drained = b - c.bObs * obs - c.bComm * dl - nextRecon - c.bTime
            if not batteryFailed and (b < bMin - _tol(bMin) or b > bMax + _tol(bMax)
                    or b + c.bCharge * ch > bMax + _tol(bMax)
                    or drained < bMin - _tol(bMin)):
                violations.append(Violation("battery", k, s, t,
                    f"battery {b:.3f} kJ leaves its limits"))
                batteryFailed = True
            for name, stored, simulated in (("data", schedule.d[k, t], d),
                                            ("battery", schedule.b[k, t], b)):
                if not storageFailed and not math.isnan(stored) \
                        and abs(stored - simulated) > _tol(simulated):
                    violations.append(Violation("storage", k, s, t,
                        f"recorded {name} {stored:.6f} differs from {simulated:.6f}"))
                    storageFailed = True
            if last:
                break
            d += c.dObs * obs - c.dComm * dl
            b += c.bCharge * ch - c.bObs * obs - c.bComm * dl - c.bTime - nextRecon


def validateSchedule(schedule, data, carry=None) -> List[Violation]:
    """
    Return every violated constraint group; an empty list means feasible.
    `carry` gives the entry state when the schedule starts past stage 1.
    """
    c, tensors = data.constants, data.tensors
    K = schedule.satellites
    violations = []
    if (schedule.totalSteps != tensors.stages * tensors.stepsPerStage
            or K != tensors.satellites or schedule.targets != tensors.targets
            or schedule.stations != tensors.stations):
        return [Violation("shape", 0, None, None, "schedule does not match the instance")]

    _checkVisibility(schedule, tensors, violations)

    load = schedule.y.sum(axis=2) + schedule.q.sum(axis=2) + schedule.h
    for k, t in np.argwhere(load > 1):
        violations.append(Violation("exclusivity", int(k),
            int(t) // schedule.stepsPerStage + 1, int(t), "more than one task"))

    if carry is None:
        budget = c.perSatellite("cMax", K)
        origins = [0] * K
        d1, b1 = c.perSatellite("dMin", K), c.perSatellite("bMax", K)
    else:
        budget, origins, d1, b1 = carry.residual, carry.origins, carry.d1, carry.b1
    if schedule.staged:
        if data.costs is None:
            violations.append(Violation("route", 0, None, None, "no transfer costs available"))
        else:
            _checkRoute(schedule, data.costs, budget, origins, violations)
    _checkStorage(schedule, c, d1, b1, violations)
    return violations
