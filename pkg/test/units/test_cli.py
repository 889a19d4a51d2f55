import json
import pytest
from click.testing import CliRunner
from reconsched.ui import cli

@pytest.fixture
def scenario(tmp_path):
    path = tmp_path / "toy.json"
    result = CliRunner().invoke(cli, ["generate", str(path), "-p", ":toy"])
    assert result.exit_code == 0, result.output
    return path

def invoke(*args):
    return CliRunner().invoke(cli, [str(a) for a in args])

def test_version():
    result = invoke("--version")
    assert result.exit_code == 0
    assert "0.1.0" in result.output

def test_generate(scenario):
    config = json.loads(scenario.read_text())
    assert config["name"] == "random-s2-k2-j3-seed0"
    assert config["grid"]["totalSteps"] == 200
    assert len(config["satellites"]) == 2

def test_generateOverrides(tmp_path):
    path = tmp_path / "s.json"
    dump = tmp_path / "preset.json"
    result = invoke("generate", path, "-p", ":toy", "--seed", 5, "-J", 4,
        "--random", "stations: 2", "--dump", dump)
    assert result.exit_code == 0, result.output
    assert "J=4" in result.output and "G=2" in result.output
    assert json.loads(path.read_text())["seed"] == 5
    assert json.loads(dump.read_text())["random"]["stations"] == 2

def test_generateFailure(tmp_path):
    result = invoke("generate", tmp_path / "s.json", "-p", ":toy", "--random", "targets: 7")
    assert result.exit_code == 1
    assert "An error occurred" in result.output
    assert "Traceback" not in result.output
    result = invoke("generate", tmp_path / "s.json", "-p", ":toy", "--random",
        "targets: 7", "--trace")
    assert "Traceback" in result.output

def test_unknownPresetKey(tmp_path):
    result = invoke("generate", tmp_path / "s.json", "--random", "colour: red")
    assert result.exit_code == 1
    assert "colour" in result.output

def test_caseStudy(tmp_path):
    result = invoke("case-study", tmp_path / "storm.json")
    assert result.exit_code == 0, result.output
    assert "T=6264" in result.output and "P=29" in result.output
    assert "J=135" in result.output

def test_solveValidateReport(scenario, tmp_path):
    run = tmp_path / "eossp.json"
    schedule = tmp_path / "schedule.json"
    result = invoke("solve", scenario, run, "-f", "eossp", "--backend", "highs",
        "--schedule", schedule)
    assert result.exit_code == 0, result.output
    assert result.output.startswith("eossp: optimal")
    record = json.loads(run.read_text())
    assert record["formulation"] == "eossp"

    result = invoke("validate", run, scenario)
    assert result.exit_code == 0, result.output
    assert "Schedule is feasible" in result.output
    assert invoke("validate", schedule, scenario).exit_code == 0

    record["schedule"]["satellites"][0]["battery"][1] = 1e9
    tampered = tmp_path / "tampered.json"
    tampered.write_text(json.dumps(record))
    result = invoke("validate", tampered, scenario)
    assert result.exit_code == 5
    assert "violation(s)" in result.output

    html = tmp_path / "html"
    result = invoke("report", run, "--json", tmp_path / "report.json", "--html", html)
    assert result.exit_code == 0, result.output
    assert result.output.splitlines()[1].startswith("EOSSP")
    assert (html / "index.html").exists()

def test_infeasibleExitCode(tmp_path):
    path = tmp_path / "drained.json"
    result = invoke("generate", path, "-p", ":toy", "--constants", "bTime: 100kJ")
    assert result.exit_code == 0, result.output
    result = invoke("solve", path, tmp_path / "run.json", "-f", "eossp",
        "--backend", "highs")
    assert result.exit_code == 3
    assert "An error occurred" in result.output

def test_exportLp(scenario, tmp_path):
    lp = tmp_path / "model.lp"
    solution = tmp_path / "model.sol"
    result = invoke("export-lp", scenario, lp, "-f", "reossp", "--solution", solution,
        "--backend", "highs", "--arrivals", "aggregated")
    assert result.exit_code == 0, result.output
    text = lp.read_text()
    assert text.startswith("\\ ")
    assert "Binaries" in text and text.rstrip().endswith("End")
    assert solution.read_text().startswith("# status")

def test_experimentBadList(tmp_path):
    result = invoke("experiment", tmp_path / "out.json", "-S", "8,x")
    assert result.exit_code == 2
