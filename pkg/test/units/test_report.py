import json
import numpy as np
import pytest
from reconsched.runs import FormulationRun
from reconsched.report import *

def makeRun(formulation, z, Z, deltaV, scenario="case-study"):
    K, S = len(deltaV), len(deltaV[0])
    zeros = [[0] * S for _ in range(K)]
    slots = None
    if formulation != "eossp":
        slots = [[{"slot": 1, "inclination": 98.18, "raan": 0.0, "argLatitude": 0.0}] * S
            for _ in range(K)]
    return FormulationRun(formulation=formulation, scenario=scenario, status="optimal",
        z=z, Z=Z, wallTime=1.5, deltaV=deltaV, budget=[750.0] * K, stages=S,
        counts={"observations": zeros, "downlinks": zeros, "charging": zeros},
        slots=slots, dataLeft=[0.0] * K)

def ledger(totals):
    # The whole spend in the first stage
    return [[t, 0.0] for t in totals]

def caseStudyRuns():
    return [
        makeRun("rhp", 73, 2.40, ledger([745.76, 686.42, 711.10, 749.58])),
        makeRun("eossp", 25, 0.80, ledger([0, 0, 0, 0])),
        makeRun("reossp", 97, 3.20, ledger([722.75, 713.15, 510.69, 317.93])),
    ]

def test_summarizeBudget():
    single = summarizeBudget([189.94, 0, 0, 66.13, 0, 365.01, 101.67, 0], 750)
    assert single.total == pytest.approx(722.75)
    assert single.totalPercent == pytest.approx(96.37, abs=0.005)

    reossp = summarizeBudget(ledger([722.75, 713.15, 510.69, 317.93]), 750)
    assert reossp.total == pytest.approx(2264.52)
    assert reossp.totalPercent == pytest.approx(75.48, abs=0.005)
    assert reossp.percent[0] == pytest.approx(96.37, abs=0.005)

    rhp = summarizeBudget(ledger([745.76, 686.42, 711.10, 749.58]), [750] * 4)
    assert rhp.totalPercent == pytest.approx(96.43, abs=0.005)

def test_zeroBudget():
    summary = summarizeBudget([[0.0, 0.0]], 0)
    assert summary.totalPercent == 0
    assert list(summary.percent) == [0]

def test_gammas():
    report = ComparisonReport(caseStudyRuns())
    gammas = {(g["better"], g["baseline"]): g for g in report.gammas()}
    assert gammas[("reossp", "eossp")]["z"] == pytest.approx(288)
    assert gammas[("reossp", "eossp")]["Z"] == pytest.approx(300)
    assert gammas[("rhp", "reossp")]["z"] == pytest.approx((73 - 97) / 97 * 100)
    assert gammas[("rhp", "eossp")]["z"] == pytest.approx(192)
    assert gammas[("rhp", "eossp")]["Z"] == pytest.approx(200)

def test_gammaWithoutBaseline():
    report = ComparisonReport([makeRun("eossp", 0, 0.0, ledger([0])),
        makeRun("reossp", 10, 0.1, ledger([5]))])
    assert report.gammas()[0]["z"] is None
    assert "n/a" in report.toText()

def test_order():
    report = ComparisonReport(caseStudyRuns())
    assert [r.formulation for r in report.ordered] == ["eossp", "reossp", "rhp"]

def test_duplicateRun():
    with pytest.raises(ReportError):
        ComparisonReport([makeRun("eossp", 1, 0, ledger([0]))] * 2)
    with pytest.raises(ReportError):
        ComparisonReport([])

def test_text():
    text = ComparisonReport(caseStudyRuns()).toText(stages=True)
    lines = text.splitlines()
    assert lines[1].startswith("EOSSP")
    assert "75.48%" in text and "96.43%" in text
    assert "gamma REOSSP over EOSSP: 288.00% (objective), 300.00% (downlinked data)" in text
    assert "REOSSP propellant: 722.75 m/s (96.37%)" in text
    assert "REOSSP-RHP per stage" in text

def test_json():
    d = json.loads(ComparisonReport(caseStudyRuns()).toJson())
    assert [r["formulation"] for r in d["runs"]] == ["eossp", "reossp", "rhp"]
    assert d["runs"][1]["budget"]["total"] == pytest.approx(2264.52)
    assert len(d["gamma"]) == 3

def test_stageTable():
    rows = stageTable(caseStudyRuns()[2])
    assert len(rows) == 8
    assert rows[0]["deltaV"] == 722.75 and rows[1]["deltaV"] == 0
    assert rows[0]["slot"] == 1
    assert "slot" not in stageTable(caseStudyRuns()[1])[0]

def test_html(tmp_path):
    description = tmp_path / "about.md"
    description.write_text("# Storm run\n\nEight stages.\n")
    report = ComparisonReport(caseStudyRuns())
    target = report.renderHtml(str(tmp_path / "out"), description=str(description))
    html = open(target, encoding="utf-8").read()
    assert "case-study" in html
    assert "REOSSP-RHP" in html
    assert "<h1>Storm run</h1>" in html

def test_unknownTemplate(tmp_path):
    with pytest.raises(ReportError):
        ComparisonReport(caseStudyRuns()).renderHtml(str(tmp_path), template="fancy")
    with pytest.raises(ReportError):
        ComparisonReport(caseStudyRuns()).renderHtml(str(tmp_path),
            description=str(tmp_path / "notes.txt"))

def test_aggregate():
    rows = [{"a": 1.0, "b": None}, {"a": 3.0, "b": None}, {"a": 2.0, "b": None}]
    stats = aggregate(rows, ["a", "b"])
    assert stats["min"]["a"] == 1 and stats["max"]["a"] == 3
    assert stats["mean"]["a"] == 2
    assert stats["std"]["a"] == pytest.approx(np.sqrt(2 / 3))
    assert stats["mean"]["b"] is None

def test_experimentColumns():
    assert experimentColumns(["eossp", "reossp"]) == ["eossp.z", "eossp.Z", "eossp.time",
        "eossp.dv", "reossp.z", "reossp.Z", "reossp.time", "reossp.dv",
        "gamma.reossp/eossp"]

def test_formatExperiment():
    rows = [{"instance": 1, "S": 2, "K": 1, "J": 3, "eossp.z": 4.0},
        {"instance": 2, "S": 2, "K": 1, "J": 3, "eossp.z": None}]
    lines = formatExperiment(rows, ["eossp.z"]).splitlines()
    assert len(lines) == 7
    assert lines[2].split()[-1] == "-"
    assert lines[3].split() == ["min", "4.00"]
