from types import SimpleNamespace
import dataclasses
import json
import pytest
from reconsched.common import SchemaError
from reconsched.orbital import OrbitalElements
from reconsched.runs import *
from reconsched.presets import obtainPreset
from reconsched.scenario import generateRandom
from reconsched.schedule import Schedule, scheduleToDict
from reconsched.solver import SolveLimits
from .toy import CONSTANTS, stagedData

def fakeInstance(**costs):
    data = stagedData(**costs)
    base = OrbitalElements.fromAltitude(700, 60, 0, 0)
    raised = base.replace(raan=10)
    return SimpleNamespace(name="toy", tensors=data.tensors, constants=CONSTANTS,
        problemData=lambda: data,
        slotGrid=SimpleNamespace(slots=[[[base]], [[base, raised]], [[base, raised]]]))

def test_reconfigurableRun():
    run = solveFormulation(fakeInstance(), "reossp")
    assert run.status == "optimal"
    assert run.z == 6
    assert run.Z == pytest.approx(0.01)
    assert run.deltaV == [[4.0, 0.0]]
    assert run.budget == [10.0]
    assert list(run.propellant) == [4.0]
    assert [s["slot"] for s in run.slots[0]] == [2, 2]
    assert run.slots[0][0]["raan"] == 10
    assert run.transfers["transfers"] == 1 and run.transfers["raanRaise"] == 1
    assert run.counts["observations"] == [[1, 1]]
    assert run.subproblems is None

def test_fixedRun():
    run = solveFormulation(fakeInstance(), "eossp")
    assert run.z == 0
    assert run.slots is None
    assert run.deltaV == [[0.0, 0.0]]

def test_rhpRun():
    run = solveFormulation(fakeInstance(), "rhp")
    assert run.formulation == "rhp"
    assert run.z == 6
    assert run.subproblems == 1
    assert run.trace[0]["committedLast"] == 2

def test_runErrors():
    with pytest.raises(ValueError):
        solveFormulation(fakeInstance(), "milp")
    with pytest.raises(NoScheduleError) as info:
        solveFormulation(fakeInstance(stayCost=20, moveCost=20), "reossp")
    assert info.value.status == "infeasible"

def test_runFile(tmp_path):
    run = solveFormulation(fakeInstance(), "reossp")
    path = tmp_path / "run.json"
    saveRun(str(path), run)
    assert json.loads(path.read_text())["format"] == RUN_FORMAT
    loaded = loadRun(str(path))
    assert loaded.z == run.z
    assert loaded.deltaV == run.deltaV
    assert isinstance(loaded.schedule, Schedule)
    assert (loaded.schedule.route == run.schedule.route).all()

def test_malformedRunFile(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"format": 7}))
    with pytest.raises(SchemaError):
        loadRun(str(path))
    path.write_text(json.dumps({"format": RUN_FORMAT, "colour": "red"}))
    with pytest.raises(SchemaError):
        loadRun(str(path))

HIGHS = SolveLimits(backend="highs", timeLimit=120)

def toyScenario(seed, stages=2):
    instance = generateRandom(seed, stages, 2, 3, obtainPreset([":toy"]))
    instance.tensors  # built once, shared by the withConstants copies
    return instance

def withConstants(instance, **values):
    return dataclasses.replace(instance,
        constants=instance.constants.replace(**values), _costs=None)

@pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
def test_zeroBudgetMatchesFixedConstellation(seed):
    instance = withConstants(toyScenario(seed), cMax=0, bRecon=0)
    fixed = solveFormulation(instance, "eossp", HIGHS)
    pinned = solveFormulation(instance, "reossp", HIGHS)
    assert fixed.status == pinned.status == "optimal"
    assert pinned.z == fixed.z
    assert pinned.deltaV == [[0.0, 0.0], [0.0, 0.0]]
    if seed in (1, 4):
        assert fixed.z > 0

@pytest.mark.parametrize("seed", range(1, 11))
def test_reconfigurationDominates(seed):
    instance = toyScenario(seed, stages=4)
    fixed = solveFormulation(instance, "eossp", HIGHS)
    free = solveFormulation(withConstants(instance, bRecon=0), "reossp", HIGHS)
    exact = solveFormulation(instance, "reossp", HIGHS)
    committed = solveFormulation(instance, "rhp", HIGHS)
    assert fixed.status == free.status == exact.status == "optimal"
    assert committed.subproblems == 3
    assert free.z >= fixed.z
    assert exact.z >= committed.z - 1e-6

def test_solveIsDeterministic():
    first = solveFormulation(fakeInstance(), "reossp", SolveLimits(backend="bnb"))
    second = solveFormulation(fakeInstance(), "reossp", SolveLimits(backend="bnb"))
    assert json.dumps(scheduleToDict(first.schedule)) == \
        json.dumps(scheduleToDict(second.schedule))

def test_scenarioSolveIsDeterministic():
    runs = [solveFormulation(toyScenario(4), "reossp", HIGHS) for _ in range(2)]
    assert runs[0].z == runs[1].z
    assert json.dumps(scheduleToDict(runs[0].schedule)) == \
        json.dumps(scheduleToDict(runs[1].schedule))
