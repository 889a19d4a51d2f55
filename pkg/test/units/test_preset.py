import json
import pytest
from reconsched.presets import *
from reconsched.sections import PresetError, WalkerPattern

def test_presetLayout():
    validatePresetLayout({"grid": {"stages": 8}})
    with pytest.raises(PresetError, match="object of sections"):
        validatePresetLayout(["grid"])
    with pytest.raises(PresetError, match="'grid'"):
        validatePresetLayout({"grid": "14d"})

def test_mergeOverridesKeys():
    preset = {"grid": {"horizon": "14d", "stages": 8}}
    mergePresets(preset, {"grid": {"stages": 9}, "solver": {"backend": "highs"}})
    assert preset == {"grid": {"horizon": "14d", "stages": 9},
        "solver": {"backend": "highs"}}

def test_chainKeepsEarlierKeys(tmp_path):
    path = tmp_path / "longer.json"
    path.write_text('{"grid": {"horizon": "28d"}}')
    preset = loadPresetChain([":default", str(path)])
    assert preset["grid"]["horizon"] == "28d"
    assert preset["grid"]["dt"] == "100s"
    with pytest.raises(PresetError):
        loadPresetChain([])

def test_sectionSet():
    preset = loadPresetChain([":default"])
    validateSections(preset)
    del preset["rhp"]
    preset["plotting"] = {}
    with pytest.raises(PresetError, match="unknown sections plotting and missing sections rhp"):
        validateSections(preset)

def test_unreadablePreset(tmp_path):
    with pytest.raises(PresetError, match="Cannot read"):
        loadPreset(str(tmp_path / "missing.json"))
    broken = tmp_path / "broken.json"
    broken.write_text('{"grid": ')
    with pytest.raises(PresetError, match="not valid JSON"):
        loadPreset(str(broken))

def test_builtinPresets():
    assert {":default", ":caseStudy", ":toy"} <= set(builtinPresets())
    with pytest.raises(PresetError):
        loadPreset(":nonexistent")

def test_defaultTable():
    preset = obtainPreset([])
    grid, c = preset["grid"], preset["constants"]
    assert grid["dt"] == 100
    assert grid["horizon"] / grid["dt"] == pytest.approx(12096)
    assert c["dObs"] == pytest.approx(102.5)
    assert c["dComm"] == 100
    assert c["dMax"] == 128000
    assert c["bMax"] == 1647
    assert c["bObs"] == pytest.approx(16.26)
    assert c["bComm"] == pytest.approx(1.2)
    assert c["bRecon"] == pytest.approx(0.5)
    assert c["bCharge"] == pytest.approx(41.48)
    assert c["bTime"] == 2
    assert c["cMax"] == 750
    assert c["C"] == 2
    assert preset["rhp"]["lookahead"] == 1
    assert preset["random"]["altitude"] == (600, 1200)
    assert preset["random"]["latitude"] == (-80, 80)
    assert preset["propagation"]["gmstAtEpoch"] == 0

def test_caseStudyPreset():
    preset = obtainPreset([":caseStudy"])
    assert preset["grid"]["horizon"] == pytest.approx(7.25 * 86400)
    assert preset["grid"]["stages"] == 8
    walker = preset["caseStudy"]["walker"]
    assert isinstance(walker, WalkerPattern)
    assert walker.inclination == pytest.approx(98.18)
    assert (walker.total, walker.planes, walker.phasing) == (4, 4, 0)
    assert preset["caseStudy"]["altitude"] == 709
    names = [name for name, _, _ in preset["caseStudy"]["stations"]]
    assert names == ["Svalbard", "Boecillo"]
    assert preset["caseStudy"]["stations"][1][1:] == (41.54, -4.70)
    assert preset["maneuver"]["slots"] == "plane_and_phase"
    assert preset["maneuver"]["budgetScale"] == pytest.approx(0.75)
    # Unspecified keys come from :default
    assert preset["constants"]["cMax"] == 750

def test_gigabyteFactor():
    preset = obtainPreset([], constants={"gigabyte": "1024", "dMax": "128GB"})
    assert preset["constants"]["dMax"] == 128 * 1024

def test_overrides():
    preset = obtainPreset([], solver={"backend": "highs", "nodeLimit": "100"},
        propagation={"gmstAtEpoch": "auto"})
    assert preset["solver"]["backend"] == "highs"
    assert preset["solver"]["nodeLimit"] == 100
    assert preset["propagation"]["gmstAtEpoch"] is None

@pytest.mark.parametrize("section, values", [
    ("grid", {"dt": "100 parsecs"}),
    ("solver", {"backend": "gurobi"}),
    ("rhp", {"lookahead": 0}),
    ("random", {"altitude": "1200km..600km"}),
    ("caseStudy", {"walker": "98deg:4/4"}),
    ("caseStudy", {"stations": "Nowhere 95 0"}),
    ("maneuver", {"budgetScale": "150%"}),
    ("visibility", {"nonsense": 1}),
])
def test_invalidValues(section, values):
    with pytest.raises(PresetError, match=f"section {section}"):
        obtainPreset([], **{section: values})

def test_unknownSection(tmp_path):
    path = tmp_path / "extra.json"
    path.write_text(json.dumps({"plotting": {"style": "dark"}}))
    with pytest.raises(PresetError):
        obtainPreset([str(path)])

def test_commentsAllowed(tmp_path):
    path = tmp_path / "commented.json"
    path.write_text('{\n // a longer horizon\n "grid": {"horizon": "28d"}\n}\n')
    preset = obtainPreset([str(path)])
    assert preset["grid"]["horizon"] == 28 * 86400

def test_dumpIsLoadable(tmp_path):
    preset = obtainPreset([":caseStudy"])
    path = tmp_path / "dump.json"
    path.write_text(dumpPreset(preset))
    again = obtainPreset([str(path)])
    assert again["constants"]["dObs"] == pytest.approx(102.5)
    assert again["caseStudy"]["walker"].total == 4
    assert again["caseStudy"]["stations"] == preset["caseStudy"]["stations"]
    assert again["random"]["inclination"] == (40, 80)
    assert again["grid"]["epoch"] == preset["grid"]["epoch"]
    assert again["solver"]["nodeLimit"] is None
