import math
import numpy as np
from reconsched.model import ProblemData, buildEossp, buildReossp, initialCarry, updateCarryState
from reconsched.schedule import embedSchedule, emptySchedule, extractSchedule
from reconsched.validate import validateSchedule, Violation
from .toy import (CONSTANTS, fixedData, stagedData, pointFor, EOSSP_OPTIMUM,
    REOSSP_POINT)

def fixedSchedule():
    model = buildEossp(fixedData())
    return extractSchedule(model, pointFor(model, EOSSP_OPTIMUM))

def stagedSchedule():
    model = buildReossp(stagedData())
    return extractSchedule(model, pointFor(model, REOSSP_POINT))

def kinds(violations):
    return {v.kind for v in violations}

def test_solverSchedulesAreFeasible():
    assert validateSchedule(fixedSchedule(), fixedData()) == []
    assert validateSchedule(stagedSchedule(), stagedData()) == []

def test_idleScheduleIsFeasible():
    idle = emptySchedule("eossp", 1, 2, 2, 1, 1, staged=False)
    assert validateSchedule(idle, fixedData()) == []

def test_shapeMismatch():
    other = emptySchedule("eossp", 2, 2, 2, 1, 1, staged=False)
    assert kinds(validateSchedule(other, fixedData())) == {"shape"}

def test_observationWithoutVisibility():
    schedule = fixedSchedule()
    schedule.y[0, 1, 0] = True
    violations = validateSchedule(schedule, fixedData())
    assert "visibility" in kinds(violations)
    visibility = [v for v in violations if v.kind == "visibility"][0]
    assert visibility.step == 1
    assert "step 2" in str(visibility)

def test_exclusivity():
    schedule = fixedSchedule()
    schedule.h[0, 2] = True
    assert "exclusivity" in kinds(validateSchedule(schedule, fixedData()))

def test_recordedStorageMismatch():
    schedule = fixedSchedule()
    schedule.d[0, 2] = 99
    assert kinds(validateSchedule(schedule, fixedData())) == {"storage"}

def test_dataOverflow():
    data = fixedData()
    tight = ProblemData(data.tensors, CONSTANTS.replace(dMax=5))
    assert "data" in kinds(validateSchedule(fixedSchedule(), tight))

def test_batteryDrain():
    data = fixedData()
    weak = ProblemData(data.tensors, CONSTANTS.replace(bMin=48))
    assert "battery" in kinds(validateSchedule(fixedSchedule(), weak))

def test_budgetExceeded():
    data = stagedData()
    poor = ProblemData(data.tensors, CONSTANTS.replace(cMax=3), data.costs)
    violations = validateSchedule(stagedSchedule(), poor)
    assert kinds(violations) == {"budget"}
    assert "4.00 m/s of 3.00 m/s" in violations[0].message

def test_unflyableTransfer():
    violations = validateSchedule(stagedSchedule(), stagedData(moveCost=math.inf))
    assert "route" in kinds(violations)

def test_routeMustStartAtOrigin():
    schedule = stagedSchedule()
    schedule.route[0, 0] = 1
    assert "route" in kinds(validateSchedule(schedule, stagedData()))

def test_missingCosts():
    data = stagedData()
    violations = validateSchedule(stagedSchedule(), ProblemData(data.tensors, CONSTANTS))
    assert "route" in kinds(violations)

def test_partialScheduleWithCarry():
    schedule = stagedSchedule()
    carry = updateCarryState(initialCarry(CONSTANTS, 1), schedule, CONSTANTS)
    assert validateSchedule(schedule.restrict(2, 2), stagedData(), carry) == []
    # Without the carried state the second stage starts from the wrong slot
    assert "route" in kinds(validateSchedule(schedule.restrict(2, 2), stagedData()))

def test_violationText():
    v = Violation("budget", 2, None, None, "too much")
    assert str(v) == "[budget] satellite 3: too much"

def unrecorded(schedule):
    schedule.d[:] = np.nan
    schedule.b[:] = np.nan
    return schedule

def fixedIdle():
    return emptySchedule("eossp", 1, 2, 2, 1, 1, staged=False)

def test_downlinkWithoutData():
    schedule = fixedIdle()
    schedule.q[0, 2, 0] = True
    violations = validateSchedule(schedule, fixedData())
    assert kinds(violations) == {"data"}
    assert violations[0].step == 2

def test_downlinkBelowDataFloor():
    schedule = fixedIdle()
    schedule.y[0, 0, 0] = True
    schedule.q[0, 2, 0] = True
    data = fixedData()
    exact = ProblemData(data.tensors, CONSTANTS.replace(dMin=5, dComm=10))
    assert validateSchedule(schedule, exact) == []
    below = ProblemData(data.tensors, CONSTANTS.replace(dMin=5, dComm=12))
    violations = validateSchedule(schedule, below)
    assert kinds(violations) == {"data"}
    assert violations[0].step == 2

def test_overcharge():
    schedule = fixedIdle()
    schedule.h[0, 1] = True
    violations = validateSchedule(schedule, fixedData())
    assert kinds(violations) == {"battery"}
    assert violations[0].step == 1

def test_downlinkWithoutVisibility():
    schedule = unrecorded(fixedSchedule())
    schedule.q[0, 1, 0] = True
    violations = validateSchedule(schedule, fixedData())
    assert kinds(violations) == {"visibility"}
    assert "downlink" in violations[0].message

def test_chargingWithoutVisibility():
    schedule = fixedIdle()
    schedule.h[0, 3] = True
    violations = validateSchedule(schedule, fixedData())
    assert "visibility" in kinds(violations)
    assert any("charging" in v.message for v in violations)

def test_recordedBatteryMismatch():
    schedule = fixedSchedule()
    schedule.b[0, 1] = 10
    violations = validateSchedule(schedule, fixedData())
    assert kinds(violations) == {"storage"}
    assert "battery" in violations[0].message

def test_maneuverDrainsAtStageGap():
    data = stagedData()
    weak = ProblemData(data.tensors, CONSTANTS.replace(bMax=6, bRecon=2), data.costs)
    violations = validateSchedule(unrecorded(stagedSchedule()), weak)
    assert kinds(violations) == {"battery"}
    # 4 kJ on entry, 1.5 kJ after observing, the gap needs 2.5 kJ
    assert (violations[0].stage, violations[0].step) == (1, 1)

def test_firstManeuverDrains():
    data = stagedData()
    weak = ProblemData(data.tensors, CONSTANTS.replace(bMax=5, bRecon=6), data.costs)
    violations = validateSchedule(unrecorded(stagedSchedule()), weak)
    assert kinds(violations) == {"battery"}
    entry = violations[0]
    assert entry.step is None and "first maneuver" in entry.message

def test_budgetAcrossStages():
    schedule = emptySchedule("reossp", 1, 3, 2, 1, 1)
    schedule.route[0] = [0, 1, 0, 1]
    violations = validateSchedule(schedule, stagedData(stages=3))
    assert kinds(violations) == {"budget"}
    assert "12.00 m/s of 10.00 m/s" in violations[0].message

def test_noSlotOccupied():
    schedule = stagedSchedule()
    schedule.route[0, 2] = -1
    violations = validateSchedule(schedule, stagedData())
    assert kinds(violations) == {"route"}
    assert "no slot occupied" in violations[0].message

def test_visibilityFollowsRoute():
    schedule = stagedSchedule()
    schedule.route[0, 2] = 0
    violations = validateSchedule(schedule, stagedData())
    assert kinds(violations) == {"visibility"}
    assert violations[0].step == 3

def concordanceModels():
    fixed, staged = fixedData(), stagedData()
    variants = [CONSTANTS, CONSTANTS.replace(bMax=3),
        CONSTANTS.replace(dMin=5, dMax=10, bMax=5, bRecon=2),
        CONSTANTS.replace(cMax=5, bMin=1, bMax=4), CONSTANTS.replace(cMax=3)]
    pairs = []
    for c in variants:
        data = ProblemData(fixed.tensors, c)
        pairs.append((buildEossp(data), data))
        data = ProblemData(staged.tensors, c, staged.costs)
        pairs.append((buildReossp(data), data))
    return pairs

def test_validatorAgreesWithModel():
    rng = np.random.default_rng(2024)
    pairs = concordanceModels()
    outcomes = set()
    for _ in range(1000):
        model, data = pairs[rng.integers(len(pairs))]
        staged = model.meta["staged"]
        schedule = emptySchedule(model.kind, 1, 2, 2, 1, 1, staged)
        schedule.y = rng.random(schedule.y.shape) < 0.25
        schedule.q = rng.random(schedule.q.shape) < 0.25
        schedule.h = rng.random(schedule.h.shape) < 0.25
        if staged:
            schedule.route[0] = [0, *rng.integers(0, 2, 2)]
        valid = validateSchedule(schedule, data) == []
        assert valid == model.isFeasible(embedSchedule(model, schedule))
        outcomes.add(valid)
    assert outcomes == {True, False}
