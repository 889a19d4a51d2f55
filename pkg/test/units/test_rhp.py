import json
import pytest
from reconsched.model import buildReossp
from reconsched.schedule import extractSchedule
from reconsched.solver import solveMilp, SolveLimits, INFEASIBLE
from reconsched.validate import validateSchedule
from reconsched.rhp import *
from .toy import CONSTANTS, stagedData, pointFor, REOSSP_POINT

def test_commitPattern():
    pattern = commitPattern(8, 1)
    assert len(pattern) == 7
    assert [list(p) for p in pattern[:2]] == [[1], [2]]
    assert list(pattern[-1]) == [7, 8]
    assert [list(p) for p in commitPattern(8, 3)] == [[1], [2], [3], [4], [5, 6, 7, 8]]
    assert [list(p) for p in commitPattern(2, 1)] == [[1, 2]]
    with pytest.raises(RhpError):
        commitPattern(8, 0)
    with pytest.raises(RhpError):
        commitPattern(8, 8)

def test_singleWindowMatchesFullModel():
    data = stagedData()
    result = runRhp(data, 1)
    assert result.subproblems == 1
    assert result.z == 6
    assert result.status == "optimal"
    assert result.schedule.kind == "rhp"

def test_rollingThreeStages():
    data = stagedData(stages=3)
    result = runRhp(data, 1, SolveLimits(timeLimit=20))
    assert result.subproblems == 2
    first, second = result.traces
    assert (first.committedFirst, first.committedLast) == (1, 1)
    assert (second.committedFirst, second.committedLast) == (2, 3)
    assert first.objective == 6
    assert first.committedObjective == 3
    assert first.committedDeltaV == 4
    assert second.committedObjective == 6
    assert second.committedDeltaV == 0

    schedule = result.schedule
    assert schedule.route.tolist() == [[0, 1, 1, 1]]
    assert result.z == 9
    assert result.Z == pytest.approx(0.015)
    assert validateSchedule(schedule, data) == []

    full = solveMilp(buildReossp(data))
    assert full.objective == pytest.approx(result.z)

def test_subproblemWithoutRoute():
    with pytest.raises(RhpError) as info:
        runRhp(stagedData(stayCost=20, moveCost=20, stages=3), 1)
    assert info.value.stage == 1
    assert info.value.status == INFEASIBLE

def test_traceFile(tmp_path):
    result = runRhp(stagedData(stages=3), 1)
    path = tmp_path / "trace.json"
    saveTrace(str(path), result)
    trace = json.loads(path.read_text())
    assert len(trace["subproblems"]) == 2
    assert trace["subproblems"][1]["stage"] == 2
    assert trace["z"] == 9

def blocks():
    model = buildReossp(stagedData())
    schedule = extractSchedule(model, pointFor(model, REOSSP_POINT))
    return schedule, schedule.restrict(1, 1), schedule.restrict(2, 2)

def test_assemble():
    schedule, first, second = blocks()
    joined = assemble([first, second], CONSTANTS)
    assert joined.kind == "rhp"
    assert (joined.y == schedule.y).all()
    assert (joined.route == schedule.route).all()
    assert joined.b == pytest.approx(schedule.b)
    assert joined.z == schedule.z

def test_assembleErrors():
    _, first, second = blocks()
    with pytest.raises(AssemblyError):
        assemble([], CONSTANTS)
    with pytest.raises(AssemblyError, match="twice"):
        assemble([first, first, second], CONSTANTS)
    with pytest.raises(AssemblyError, match="missing"):
        assemble([first], CONSTANTS)
    second.route[0, 1] = 0
    with pytest.raises(AssemblyError, match="does not start"):
        assemble([first, second], CONSTANTS)
