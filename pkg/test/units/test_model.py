from types import SimpleNamespace
import math
import numpy as np
import pytest
from reconsched.common import ConfigurationError
from reconsched.model import *
from .toy import (CONSTANTS, fixedData, stagedData, pointFor, EOSSP_OPTIMUM,
    REOSSP_POINT)

def test_constantsValidation():
    with pytest.raises(ConfigurationError):
        CONSTANTS.replace(C=1)
    with pytest.raises(ConfigurationError):
        CONSTANTS.replace(dMin=200)
    with pytest.raises(ConfigurationError):
        CONSTANTS.replace(bObs=-1)
    with pytest.raises(ConfigurationError):
        CONSTANTS.replace(gigabyte=1001)

def test_constantsPerSatellite():
    c = CONSTANTS.replace(cMax=[10, 20, 30])
    assert list(c.perSatellite("cMax", 3)) == [10, 20, 30]
    assert c.at("cMax", 1) == 20
    assert list(c.perSatellite("dMax", 2)) == [100, 100]
    with pytest.raises(ConfigurationError):
        c.perSatellite("cMax", 2)

def test_eosspShape():
    model = buildEossp(fixedData())
    # y, q, h, d, b for 4 steps
    assert model.numVariables == 20
    assert model.numBinaries == 12
    assert model.kind == "eossp"
    assert "y_k01_t0001_p01" in model.varNames
    assert "d_k01_t0004" in model.varNames
    yCols, yIndex = model.family("y")
    assert yIndex.shape == (4, 4)
    assert list(model.upper[yCols]) == [1, 0, 0, 0]
    assert list(model.objective[yCols]) == [1, 1, 1, 1]
    qCols, _ = model.family("q")
    assert list(model.objective[qCols]) == [2, 2, 2, 2]
    assert model.meta["totalSteps"] == 4
    with pytest.raises(ModelError):
        model.column(("y", 0, 0, 9, 0))

def test_eosspIdleIsFeasible():
    model = buildEossp(fixedData())
    values = pointFor(model, {("b", 0, 0, t): 50 - 0.5 * t for t in range(4)})
    assert model.isFeasible(values)
    assert model.objectiveValue(values) == 0

def test_eosspObserveAndDownlink():
    model = buildEossp(fixedData())
    values = pointFor(model, EOSSP_OPTIMUM)
    assert model.isFeasible(values)
    assert model.objectiveValue(values) == 3

    # Data does not appear without the observation
    values[model.column(("y", 0, 0, 0, 0))] = 0
    assert not model.isFeasible(values)
    assert model.violation(values) > 1

def test_eosspRejectsBadInput():
    with pytest.raises(ModelError):
        buildEossp(ProblemData(None, CONSTANTS))

def test_relaxedAndBounds():
    model = buildEossp(fixedData())
    relaxed = model.relaxed()
    assert relaxed.numBinaries == 0
    assert relaxed.numVariables == model.numVariables
    fixed = model.withBounds(model.lower, np.zeros(model.numVariables))
    assert fixed.column(("h", 0, 0, 1)) == model.column(("h", 0, 0, 1))
    assert model.integralityViolation(np.full(model.numVariables, 0.5)) == 0.5

def test_reosspColumns():
    model = buildReossp(stagedData())
    xCols, xIndex = model.family("x")
    assert sorted(map(tuple, xIndex)) == [(1, 0, 0, 0), (1, 0, 0, 1),
        (2, 0, 0, 0), (2, 0, 0, 1), (2, 0, 1, 0), (2, 0, 1, 1)]
    assert model.xCost[model.column(("x", 1, 0, 0, 1))] == 4
    assert model.meta["staged"]
    assert model.meta["firstStage"] == 1 and model.meta["lastStage"] == 2
    assert "x_s01_k01_i001_j002" in model.varNames
    assert "budget_k01" in model.rowNames

def test_reosspSkipsUnaffordableTransfers():
    model = buildReossp(stagedData(moveCost=math.inf))
    _, xIndex = model.family("x")
    assert sorted(map(tuple, xIndex)) == [(1, 0, 0, 0), (2, 0, 0, 0), (2, 0, 1, 1)]
    model = buildReossp(stagedData(moveCost=11))
    assert len(model.family("x")[0]) == 3

def test_reosspWithoutRoute():
    with pytest.raises(InfeasibleModelError):
        buildReossp(stagedData(stayCost=20, moveCost=20))

def test_reosspNeedsCosts():
    data = stagedData()
    with pytest.raises(ModelError):
        buildReossp(ProblemData(data.tensors, CONSTANTS))
    with pytest.raises(ConfigurationError):
        buildReossp(data, arrivals="sideways")

def test_aggregatedArrivals():
    direct = buildReossp(stagedData())
    aggregated = buildReossp(stagedData(), arrivals="aggregated")
    assert len(aggregated.family("o")[0]) == 4
    assert len(direct.family("o")[0]) == 0
    assert aggregated.numBinaries == direct.numBinaries
    assert aggregated.meta["arrivals"] == "aggregated"

def test_reosspMoveAndObserve():
    # Move to the second slot in stage 1, observe, stay and downlink in stage 2
    model = buildReossp(stagedData())
    values = pointFor(model, REOSSP_POINT)
    assert model.isFeasible(values)
    assert model.objectiveValue(values) == 3
    assert float(model.xCost @ values) == 4

def test_rhpSubproblem():
    data = stagedData()
    carry = initialCarry(CONSTANTS, 1)
    assert carry.stage == 1
    assert list(carry.residual) == [10]
    assert list(carry.b1) == [50]
    model = buildRhpSubproblem(data, 1, 1, carry)
    assert model.kind == "rhp"
    assert model.name == "rhp_s01"
    single = buildRhpSubproblem(data, 1, 0, carry)
    assert single.meta["lastStage"] == 1
    with pytest.raises(ModelError):
        buildRhpSubproblem(data, 2, 1, carry)
    with pytest.raises(ModelError):
        buildRhpSubproblem(data, 2, 0, carry)

def test_rhpStartsFromCarriedSlot():
    data = stagedData()
    carry = CarryState(2, np.array([6.0]), [1], np.array([10.0]), np.array([45.0]))
    model = buildRhpSubproblem(data, 2, 0, carry)
    _, xIndex = model.family("x")
    assert sorted(map(tuple, xIndex)) == [(2, 0, 1, 0), (2, 0, 1, 1)]
    assert model.meta["origins"] == [1]
    assert list(model.meta["d1"]) == [10]

def test_updateCarryState():
    carry = initialCarry(CONSTANTS, 1)
    y = np.zeros((1, 4, 1))
    y[0, 0, 0] = 1
    q = np.zeros((1, 4, 1))
    h = np.zeros((1, 4))
    h[0, 1] = 1
    schedule = SimpleNamespace(stepsPerStage=2, deltaV=np.array([[0, 4.0, 0]]),
        y=y, q=q, h=h, route=np.array([[0, 1, 1]]))
    nxt = updateCarryState(carry, schedule, CONSTANTS)
    assert nxt.stage == 2
    assert list(nxt.residual) == [6]
    assert nxt.origins == [1]
    assert list(nxt.d1) == [10]
    # 50 - recon 1 + charge 3 - observe 2 - idle 2 x 0.5
    assert list(nxt.b1) == [49]

def test_updateCarryStateOverBudget():
    carry = initialCarry(CONSTANTS, 1)
    schedule = SimpleNamespace(stepsPerStage=2, deltaV=np.array([[0, 40.0, 0]]),
        y=np.zeros((1, 4, 1)), q=np.zeros((1, 4, 1)), h=np.zeros((1, 4)),
        route=np.array([[0, 1, 1]]))
    with pytest.raises(ModelError):
        updateCarryState(carry, schedule, CONSTANTS)

def test_updateCarryStateRealisticNumbers():
    constants = CONSTANTS.replace(cMax=750, dObs=2.5, dMax=1000, bRecon=0)
    carry = initialCarry(constants, 2)
    y = np.zeros((2, 4, 1))
    y[1, 0, 0] = 1
    schedule = SimpleNamespace(stepsPerStage=2,
        deltaV=np.array([[0, 189.94, 0], [0, 0, 0]]),
        y=y, q=np.zeros((2, 4, 1)), h=np.zeros((2, 4)),
        route=np.array([[0, 1, 1], [0, 0, 0]]))
    nxt = updateCarryState(carry, schedule, constants)
    assert nxt.residual[0] == pytest.approx(560.06)
    assert nxt.residual[1] == pytest.approx(750)
    assert nxt.d1[1] - carry.d1[1] == pytest.approx(2.5)
    # an idle stage only pays for time
    assert carry.b1[0] - nxt.b1[0] == pytest.approx(2 * constants.bTime)
