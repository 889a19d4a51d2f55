from datetime import datetime
import json
import logging
import os
import commentjson

from reconsched.common import RESOURCES, resolveBuiltin, writeEpoch
from reconsched.sections import PresetError, SECTIONS, SECTION_NAMES
from reconsched.units import BaseValue

logger = logging.getLogger(__name__)

PRESET_LIB = os.path.join(RESOURCES, "presets")

def builtinPresets():
    return sorted(":" + os.path.splitext(x)[0]
        for x in os.listdir(PRESET_LIB) if x.endswith(".json"))

def encodePreset(value):
    """
    Turn a processed preset back into the strings it was written with.
    """
    if hasattr(value, "__preset_repr"):
        return getattr(value, "__preset_repr")
    if value is None:
        return "none"
    if isinstance(value, BaseValue):
        return str(value)
    if isinstance(value, datetime):
        return writeEpoch(value)
    if isinstance(value, (bool, int, float, str)):
        return value
    if isinstance(value, tuple) and len(value) == 2:
        return f"{encodePreset(value[0])}..{encodePreset(value[1])}"
    if isinstance(value, list):
        return ",".join(str(encodePreset(x)) for x in value)
    if isinstance(value, dict):
        return {key: encodePreset(item) for key, item in value.items()}
    raise PresetError(f"Cannot write {value!r} ({type(value).__name__}) into a preset")

def dumpPreset(preset):
    """
    JSON text of a processed preset; loading it back gives the same preset.
    """
    # BaseValue subclasses float, so json.dumps would drop the units
    return json.dumps(encodePreset(preset), indent=4)

def validatePresetLayout(preset):
    """
    A preset is an object of sections, every section an object of keys.
    """
    if not isinstance(preset, dict):
        raise PresetError("Preset has to be an object of sections")
    for name, section in preset.items():
        if not isinstance(section, dict):
            raise PresetError(f"Section '{name}' has to be an object of keys")

def postProcessPreset(preset):
    for name, section in preset.items():
        if name not in SECTIONS:
            raise PresetError(f"Unknown section '{name}'")
        SECTIONS[name][1](section)

def loadPreset(path):
    """
    Read a single preset file; `:name` addresses the built-in ones.
    """
    resolved = resolveBuiltin(path, PRESET_LIB, ".json")
    if resolved is None:
        raise PresetError(f"Unknown built-in preset '{path}', "
            f"choose one of {', '.join(builtinPresets())}")
    try:
        with open(resolved, "r", encoding="utf-8") as f:
            preset = commentjson.load(f)
    except OSError as e:
        raise PresetError(f"Cannot read preset '{path}': {e.strerror}") from None
    except (ValueError, commentjson.JSONLibraryException) as e:
        raise PresetError(f"{path}: not valid JSON ({e})") from None
    try:
        validatePresetLayout(preset)
    except PresetError as e:
        raise PresetError(f"{path}: {e}") from None
    return preset

def mergePresets(a, b):
    """
    Merge b into a key by key; b wins.
    """
    for name, section in b.items():
        a.setdefault(name, {}).update(section)

def loadPresetChain(chain):
    if not chain:
        raise PresetError("Empty preset chain")
    preset = {}
    for path in chain:
        logger.debug("Applying preset %s", path)
        mergePresets(preset, loadPreset(path))
    return preset

def validateSections(preset):
    extra = sorted(set(preset).difference(SECTION_NAMES))
    missing = sorted(set(SECTION_NAMES).difference(preset))
    problems = []
    if extra:
        problems.append(f"unknown sections {', '.join(extra)}")
    if missing:
        problems.append(f"missing sections {', '.join(missing)}")
    if problems:
        raise PresetError("Preset has " + " and ".join(problems))

def obtainPreset(presetPaths, validate=True, **overrides):
    """
    Build the final preset: `:default`, then the given presets, then the
    section overrides from the command line (None means not given).
    """
    preset = loadPresetChain([":default", *presetPaths])
    mergePresets(preset, {name: section
        for name, section in overrides.items() if section is not None})
    if validate:
        validateSections(preset)
    postProcessPreset(preset)
    return preset
