from typing import Any, Dict
from reconsched.common import ConfigurationError, readEpoch
from reconsched.units import (readDuration, readLength, readAngle, readData,
    readEnergy, readVelocity, readPercents, BaseValue, UnitError)

class PresetError(RuntimeError):
    pass

SECTION_NAMES = ["grid", "constants", "propagation", "visibility", "maneuver",
    "solver", "rhp", "random", "caseStudy"]

class SectionBase:
    def __init__(self, description):
        self.description = description

    def validate(self, x: Any) -> Any:
        raise NotImplementedError("Validate was not overridden for SectionBase")

class SDuration(SectionBase):
    def validate(self, x):
        return readDuration(x)

class SLength(SectionBase):
    def validate(self, x):
        return readLength(x)

class SAngle(SectionBase):
    def validate(self, x):
        return readAngle(x)

class SEnergy(SectionBase):
    def validate(self, x):
        return readEnergy(x)

class SVelocity(SectionBase):
    def validate(self, x):
        return readVelocity(x)

class SData(SectionBase):
    def __init__(self, description, gigabyte=1000):
        super().__init__(description)
        self.gigabyte = gigabyte

    def validate(self, x):
        if isinstance(x, BaseValue):
            x = str(x)
        return readData(x, self.gigabyte)

class SGigabyte(SectionBase):
    def validate(self, x):
        try:
            val = int(x)
        except (TypeError, ValueError):
            raise PresetError(f"'{x}' is not a number of megabytes") from None
        if val not in (1000, 1024):
            raise PresetError(f"A gigabyte has 1000 or 1024 megabytes, not {val}")
        return val

class SEpoch(SectionBase):
    def validate(self, x):
        return readEpoch(x)

class SNum(SectionBase):
    def validate(self, x):
        if isinstance(x, float) and not x.is_integer():
            raise PresetError(f"An integer expected, got '{x}'")
        return int(x)

class SNaturalNum(SNum):
    def validate(self, x):
        val = super().validate(x)
        if val < 0:
            raise PresetError(f"A non-negative number expected, got '{x}'")
        return val

class SPositiveNum(SNum):
    def validate(self, x):
        val = super().validate(x)
        if val < 1:
            raise PresetError(f"A positive number expected, got '{x}'")
        return val

class SFloat(SectionBase):
    def validate(self, x):
        try:
            return float(x)
        except ValueError:
            raise PresetError(f"A number expected, got '{x}'") from None

class SFraction(SectionBase):
    """
    Number in (0, 1]; percentages are accepted.
    """
    def validate(self, x):
        if isinstance(x, str) and x.strip().endswith("%"):
            val = float(readPercents(x))
        else:
            val = float(x)
        if not 0 < val <= 1:
            raise PresetError(f"A fraction in (0, 1] expected, got '{x}'")
        return val

class SStr(SectionBase):
    def validate(self, x):
        return str(x)

class SChoiceBase(SectionBase):
    def __init__(self, vals, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.vals = vals

    def validate(self, s):
        if s not in self.vals:
            c = ", ".join(str(v) for v in self.vals)
            raise PresetError(f"'{s}' is not allowed. Use one of {c}.")
        return s

class SChoice(SChoiceBase):
    pass

class SBool(SChoiceBase):
    def __init__(self, *args, **kwargs):
        super().__init__(["True", "False"], *args, **kwargs)

    def validate(self, s):
        if isinstance(s, bool):
            return s
        if isinstance(s, str):
            sl = str(s).lower()
            if sl in ["1", "true", "yes"]:
                return True
            if sl in ["0", "false", "no"]:
                return False
            raise PresetError(f"Unknown boolean value '{s}'")
        raise PresetError(f"Got {s}, expected boolean value")

class SOptional(SectionBase):
    """
    Wraps another validator; "none" stands for no value.
    """
    def __init__(self, inner, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.inner = inner

    def validate(self, x):
        if x is None or (isinstance(x, str) and x.strip().lower() in ("none", "auto")):
            return None
        return self.inner.validate(x)

class SRange(SectionBase):
    """
    Closed interval written as `low..high`, both ends with units.
    """
    def __init__(self, reader, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.reader = reader

    def validate(self, x):
        if isinstance(x, (list, tuple)) and len(x) == 2:
            low, high = x
        else:
            pieces = str(x).split("..")
            if len(pieces) != 2:
                raise PresetError(f"'{x}' is not a range in the form 'low..high'")
            low, high = pieces
        low = self.reader(low.strip() if isinstance(low, str) else low)
        high = self.reader(high.strip() if isinstance(high, str) else high)
        if low > high:
            raise PresetError(f"Range '{x}' is empty")
        return (low, high)

class WalkerPattern:
    def __init__(self, inclination, total, planes, phasing, text):
        self.inclination = inclination
        self.total = total
        self.planes = planes
        self.phasing = phasing
        setattr(self, "__preset_repr", text)

    def __repr__(self):
        return f"<WalkerPattern {getattr(self, '__preset_repr')}>"

class StationList(list):
    """Named ground stations (name, lat, lon)"""
    def __init__(self, stations, text):
        super().__init__(stations)
        setattr(self, "__preset_repr", text)

class SWalker(SectionBase):
    """
    Walker-delta notation `inclination:total/planes/phasing`.
    """
    def validate(self, x):
        if isinstance(x, WalkerPattern):
            return x
        try:
            inclination, pattern = str(x).split(":")
            total, planes, phasing = (int(v) for v in pattern.split("/"))
        except ValueError:
            raise PresetError(f"'{x}' is not a Walker pattern 'i:T/P/F'") from None
        return WalkerPattern(readAngle(inclination.strip()), total, planes, phasing, str(x))

class SStations(SectionBase):
    """
    Comma separated ground stations `name lat lon`, angles in degrees.
    """
    def validate(self, x):
        if isinstance(x, StationList):
            return x
        stations = []
        for item in str(x).split(","):
            pieces = item.split()
            if not pieces:
                continue
            if len(pieces) != 3:
                raise PresetError(f"'{item.strip()}' is not a station 'name lat lon'")
            try:
                lat, lon = float(pieces[1]), float(pieces[2])
            except ValueError:
                raise PresetError(f"'{item.strip()}' has a non-numeric coordinate") from None
            if not -90 <= lat <= 90 or not -180 <= lon <= 180:
                raise PresetError(f"Station '{pieces[0]}' lies outside the globe")
            stations.append((pieces[0], lat, lon))
        return StationList(stations, str(x))


def validateSection(name, sectionDefinition, section):
    try:
        for key in section:
            if key not in sectionDefinition:
                raise PresetError(f"Unknown key '{key}'")
        for key, validator in sectionDefinition.items():
            if key not in section:
                continue
            section[key] = validator.validate(section[key])
    except (PresetError, UnitError, ConfigurationError, ValueError, TypeError) as e:
        raise PresetError(f"Error in section {name}: {e}")
    return section

def requireKeys(name, section, keys):
    missing = [k for k in keys if k not in section]
    if missing:
        raise PresetError(f"Missing parameter(s) {', '.join(missing)} in section '{name}'")


GRID_SECTION = {
    "epoch": SEpoch("Start of the horizon (ISO-8601, UTC)"),
    "dt": SDuration("Time step"),
    "horizon": SDuration("Length of the scheduling horizon"),
    "stages": SPositiveNum("Number of reconfiguration stages")
}

def ppGrid(section):
    validateSection("grid", GRID_SECTION, section)
    requireKeys("grid", section, GRID_SECTION.keys())

CONSTANTS_SECTION = {
    "gigabyte": SGigabyte("Megabytes per gigabyte"),
    "dMin": SData("Minimum data storage"),
    "dMax": SData("Data storage capacity"),
    "dObs": SData("Data gained by one observation step"),
    "dComm": SData("Data sent by one downlink step"),
    "bMin": SEnergy("Minimum battery charge"),
    "bMax": SEnergy("Battery capacity"),
    "bObs": SEnergy("Energy of one observation step"),
    "bComm": SEnergy("Energy of one downlink step"),
    "bRecon": SEnergy("Energy of one reconfiguration"),
    "bCharge": SEnergy("Energy gained by one charging step"),
    "bTime": SEnergy("Energy used by every time step"),
    "cMax": SVelocity("Propellant budget per satellite"),
    "C": SFloat("Weight of a downlink in the objective")
}

DATA_KEYS = ["dMin", "dMax", "dObs", "dComm"]

def ppConstants(section):
    definition = dict(CONSTANTS_SECTION)
    validateSection("constants", {"gigabyte": definition["gigabyte"]},
        {"gigabyte": section.get("gigabyte", 1000)})
    gigabyte = definition["gigabyte"].validate(section.get("gigabyte", 1000))
    for key in DATA_KEYS:
        definition[key] = SData(CONSTANTS_SECTION[key].description, gigabyte)
    validateSection("constants", definition, section)
    requireKeys("constants", section, CONSTANTS_SECTION.keys())

PROPAGATION_SECTION = {
    "perturbation": SChoice(["two_body", "j2_secular"], "Propagation model"),
    "gmstAtEpoch": SOptional(SAngle(""),
        "Greenwich sidereal angle at epoch; 'auto' computes it from the epoch")
}

def ppPropagation(section):
    validateSection("propagation", PROPAGATION_SECTION, section)

VISIBILITY_SECTION = {
    "targetCone": SAngle("Sensor cone towards targets"),
    "stationCone": SAngle("Antenna cone towards ground stations"),
    "interpretation": SChoice(["full_apex", "half_angle"],
        "Whether cone angles are full apex angles or half angles"),
    "sunThreshold": SFraction("Visible solar disk fraction needed to charge"),
    "masking": SBool("Restrict every target to its chronological window")
}

def ppVisibility(section):
    validateSection("visibility", VISIBILITY_SECTION, section)

MANEUVER_SECTION = {
    "slots": SChoice(["phase_only", "plane_and_phase"], "Slot grid kind"),
    "phases": SPositiveNum("Phase slots per plane (J for phase-only grids)"),
    "planeLevels": SPositiveNum("Plane offset levels per element (m)"),
    "budgetScale": SFraction("Share of the budget the furthest plane offset may use"),
    "maxRevolutions": SPositiveNum("Most phasing revolutions considered"),
    "maxDuration": SOptional(SDuration(""),
        "Longest phasing maneuver; 'auto' uses one stage"),
    "minAltitude": SLength("Lowest perigee allowed during phasing")
}

def ppManeuver(section):
    validateSection("maneuver", MANEUVER_SECTION, section)

SOLVER_SECTION = {
    "backend": SChoice(["bnb", "highs"], "MILP backend"),
    "timeLimit": SDuration("Wall time limit per solve"),
    "gap": SFraction("Relative optimality gap to stop at"),
    "integrality": SFraction("Integrality tolerance"),
    "nodeLimit": SOptional(SPositiveNum(""), "Branch and bound node limit"),
    "arrivalRows": SChoice(["direct", "aggregated"],
        "Couple visibility to transfers directly or through occupancy columns")
}

def ppSolver(section):
    validateSection("solver", SOLVER_SECTION, section)

RHP_SECTION = {
    "lookahead": SPositiveNum("Lookahead stages (L)"),
    "splitTime": SBool("Share the time limit among subproblems")
}

def ppRhp(section):
    validateSection("rhp", RHP_SECTION, section)

RANDOM_SECTION = {
    "seed": SNaturalNum("Seed of the instance generator"),
    "satellites": SPositiveNum("Number of satellites"),
    "targets": SPositiveNum("Number of targets"),
    "stations": SPositiveNum("Number of ground stations"),
    "altitude": SRange(readLength, "Altitude range"),
    "inclination": SRange(readAngle, "Inclination range"),
    "raan": SRange(readAngle, "RAAN range"),
    "argLatitude": SRange(readAngle, "Argument of latitude range"),
    "latitude": SRange(readAngle, "Latitude range of targets and stations"),
    "longitude": SRange(readAngle, "Longitude range of targets and stations"),
    "stationsOnLand": SBool("Resample stations until they are on land")
}

def ppRandom(section):
    validateSection("random", RANDOM_SECTION, section)

CASE_STUDY_SECTION = {
    "track": SStr("Storm track CSV; ':example' is the bundled synthetic track"),
    "trackInterval": SDuration("Spacing of the track fixes"),
    "walker": SWalker("Walker-delta constellation i:T/P/F"),
    "altitude": SLength("Constellation altitude"),
    "stations": SStations("Ground stations 'name lat lon', comma separated")
}

def ppCaseStudy(section):
    validateSection("caseStudy", CASE_STUDY_SECTION, section)

SECTIONS: Dict[str, Any] = {
    "grid": (GRID_SECTION, ppGrid),
    "constants": (CONSTANTS_SECTION, ppConstants),
    "propagation": (PROPAGATION_SECTION, ppPropagation),
    "visibility": (VISIBILITY_SECTION, ppVisibility),
    "maneuver": (MANEUVER_SECTION, ppManeuver),
    "solver": (SOLVER_SECTION, ppSolver),
    "rhp": (RHP_SECTION, ppRhp),
    "random": (RANDOM_SECTION, ppRandom),
    "caseStudy": (CASE_STUDY_SECTION, ppCaseStudy)
}
