from types import SimpleNamespace
import json
import math
import numpy as np
import pytest
from reconsched.common import SchemaError
from reconsched.model import buildEossp, buildReossp
from reconsched.orbital import OrbitalElements
from reconsched.schedule import *
from .toy import (CONSTANTS, fixedData, stagedData, pointFor, EOSSP_OPTIMUM,
    REOSSP_POINT)

def fixedSchedule():
    model = buildEossp(fixedData())
    return extractSchedule(model, pointFor(model, EOSSP_OPTIMUM))

def stagedSchedule():
    model = buildReossp(stagedData())
    return extractSchedule(model, pointFor(model, REOSSP_POINT))

def test_extractFixed():
    schedule = fixedSchedule()
    assert schedule.kind == "eossp"
    assert not schedule.staged
    assert schedule.y[0, 0, 0] and schedule.observations() == 1
    assert schedule.q[0, 2, 0] and schedule.downlinks() == 1
    assert list(schedule.d[0]) == pytest.approx([0, 10, 10, 5])
    assert list(schedule.b[0]) == pytest.approx([50, 47.5, 47, 45.5])
    assert schedule.objective == 3
    assert schedule.z == 3
    assert schedule.Z == pytest.approx(0.005)
    assert list(schedule.propellantUsed()) == [0]

def test_extractStaged():
    schedule = stagedSchedule()
    assert schedule.staged
    assert schedule.route.tolist() == [[0, 1, 1]]
    assert schedule.deltaV.tolist() == [[0, 4, 0]]
    assert list(schedule.propellantUsed()) == [4]
    assert list(schedule.b[0]) == pytest.approx([49, 46.5, 45, 44.5])
    counts = schedule.stageCounts()
    assert counts["observations"].tolist() == [[1, 0]]
    assert counts["downlinks"].tolist() == [[0, 1]]
    assert counts["charging"].tolist() == [[0, 0]]

def test_extractRejectsBadSolutions():
    model = buildEossp(fixedData())
    values = pointFor(model, EOSSP_OPTIMUM)
    with pytest.raises(ExtractionError):
        extractSchedule(model, values[:-1])

    fractional = values.copy()
    fractional[model.column(("h", 0, 0, 1))] = 0.4
    with pytest.raises(ExtractionError):
        extractSchedule(model, fractional)

    # Solver storage that does not follow from the tasks
    wrong = values.copy()
    wrong[model.column(("d", 0, 0, 3))] = 7
    with pytest.raises(ExtractionError, match="data storage"):
        extractSchedule(model, wrong)

def test_extractRejectsBrokenRoute():
    model = buildReossp(stagedData())
    values = pointFor(model, REOSSP_POINT)
    values[model.column(("x", 2, 0, 1, 1))] = 0
    values[model.column(("x", 2, 0, 0, 0))] = 1
    with pytest.raises(ExtractionError):
        extractSchedule(model, values)

def test_embedRecoversSolution():
    model = buildReossp(stagedData())
    values = pointFor(model, REOSSP_POINT)
    assert embedSchedule(model, stagedSchedule()) == pytest.approx(values)

def test_embedIntoAggregatedModel():
    model = buildReossp(stagedData(), arrivals="aggregated")
    values = embedSchedule(model, stagedSchedule())
    assert model.isFeasible(values)
    assert model.objectiveValue(values) == 3
    assert values[model.column(("o", 2, 0, 1))] == 1
    assert values[model.column(("o", 2, 0, 0))] == 0

def test_embedFixedScheduleStaysPut():
    model = buildReossp(stagedData())
    values = embedSchedule(model, emptySchedule("eossp", 1, 2, 2, 1, 1, staged=False))
    assert model.isFeasible(values)
    assert values[model.column(("x", 1, 0, 0, 0))] == 1
    assert values[model.column(("x", 2, 0, 0, 0))] == 1
    assert model.objectiveValue(values) == 0

def test_scoreCounts():
    constants = CONSTANTS.replace(dComm=100)
    assert scoreCounts(9, 8, constants) == pytest.approx((25, 0.80))
    assert scoreCounts(33, 32, constants) == pytest.approx((97, 3.20))
    assert scoreCounts(25, 24, constants) == pytest.approx((73, 2.40))
    binary = constants.replace(gigabyte=1024)
    assert scoreCounts(0, 1024, binary)[1] == pytest.approx(100)

def test_dataLeft():
    assert list(dataLeft(fixedSchedule(), CONSTANTS)) == pytest.approx([5])
    assert list(dataLeft(stagedSchedule(), CONSTANTS)) == pytest.approx([5])

def test_restrict():
    schedule = stagedSchedule()
    second = schedule.restrict(2, 2)
    assert second.firstStage == 2 and second.lastStage == 2
    assert second.observations() == 0
    assert second.downlinks() == 1
    assert second.route.tolist() == [[-1, 1, 1]]
    assert second.deltaV.tolist() == [[0, 0, 0]]
    assert math.isnan(second.d[0, 0])
    assert list(second.steps) == [2, 3]

def test_transferStats():
    base = OrbitalElements.fromAltitude(700, 60, 0, 0)
    raised = base.replace(raan=10)
    lowered = base.replace(inclination=58)
    slotGrid = SimpleNamespace(slots=[[[base]], [[base, raised]], [[lowered, raised]]])
    schedule = emptySchedule("reossp", 1, 2, 2, 1, 1)
    schedule.route[0] = [0, 1, 1]
    assert transferStats(schedule, slotGrid) == {"transfers": 1, "inclinationRaise": 0,
        "inclinationLower": 0, "raanRaise": 1, "raanLower": 0}
    schedule.route[0] = [0, 0, 0]
    stats = transferStats(schedule, slotGrid)
    assert stats["transfers"] == 1
    assert stats["inclinationLower"] == 1
    assert transferStats(fixedSchedule(), slotGrid)["transfers"] == 0

def test_scheduleFile(tmp_path):
    schedule = stagedSchedule()
    path = tmp_path / "schedule.json"
    saveSchedule(str(path), schedule)
    data = json.loads(path.read_text())
    assert data["meta"]["kind"] == "reossp"
    stages = data["satellites"][0]["stages"]
    assert stages[0] == {"stage": 1, "slot": 1, "deltaV": 4.0,
        "observations": [[1, 1]], "downlinks": [], "charging": []}
    assert stages[1]["downlinks"] == [[2, 1]]

    loaded = loadSchedule(str(path))
    assert (loaded.y == schedule.y).all()
    assert (loaded.q == schedule.q).all()
    assert (loaded.route == schedule.route).all()
    assert loaded.b == pytest.approx(schedule.b)
    assert loaded.z == 3

def test_scheduleFileWithGaps(tmp_path):
    schedule = stagedSchedule().restrict(2, 2)
    path = tmp_path / "partial.json"
    saveSchedule(str(path), schedule)
    data = json.loads(path.read_text())
    assert data["satellites"][0]["data"][:2] == [None, None]
    loaded = loadSchedule(str(path))
    assert np.isnan(loaded.d[0, :2]).all()
    assert loaded.route.tolist() == [[-1, 1, 1]]

def test_malformedSchedule(tmp_path):
    with pytest.raises(SchemaError):
        scheduleFromDict({"format": 99})
    with pytest.raises(SchemaError):
        scheduleFromDict({"format": SCHEDULE_FORMAT, "meta": {}})
    path = tmp_path / "broken.json"
    path.write_text("{ nope")
    with pytest.raises(SchemaError):
        loadSchedule(str(path))
