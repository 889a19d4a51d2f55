import re
from copy import deepcopy

class UnitError(RuntimeError):
    pass

# Base units: seconds, kilometers, megabytes, kilojoules, meters per second
# and degrees. Every reader below returns a value in its base unit.
s = 1.0
minute = 60 * s
hour = 60 * minute
day = 24 * hour

km = 1.0
m = km / 1000

MB = 1.0
kJ = 1.0
J = kJ / 1000
mps = 1.0
kmps = 1000 * mps

deg = 1.0
rad = 180.0 / 3.141592653589793

UNIT_SPLIT = re.compile(
    r"\s*(-?\s*\d+(\.\d*)?([eE][-+]?\d+)?)\s*([A-Za-z/°]+|\%)$")

class BaseValue(float):
    """
    Value in base units that remembers its original string representation.
    """
    def __deepcopy__(self, memo):
        cls = self.__class__
        result = cls.__new__(cls, float(self), self.str)
        memo[id(self)] = result
        for k, v in self.__dict__.items():
            setattr(result, k, deepcopy(v, memo))
        return result

    def __reduce__(self):
        return (self.__class__, (float(self), self.str))

    def __new__(cls, value, strRepr):
        x = super().__new__(cls, value)
        x.str = strRepr
        return x

    def __str__(self):
        return self.str

    def __repr__(self):
        return f"<BaseValue: {float(self)}, {self.str} >"

class PercentageValue(BaseValue):
    """
    Value in percents that remembers its original string representation.

    Value is stored as floating point number where 1 corresponds to 100 %.
    """
    def __repr__(self):
        return f"<PercentageValue: {float(self)}, {self.str} >"


def readUnit(unitDir, unitStr):
    match = UNIT_SPLIT.match(unitStr)
    if not match:
        raise UnitError(f"Cannot read quantity '{unitStr}'")
    try:
        amount = float(match.group(1).replace(" ", ""))
        return amount * unitDir[match.group(4)]
    except KeyError:
        raise UnitError(f"Unknown unit in '{unitStr}'")

def _readQuantity(unitDir, unitStr, kind, baseName):
    if isinstance(unitStr, BaseValue):
        return unitStr
    if isinstance(unitStr, (int, float)) and not isinstance(unitStr, bool):
        return BaseValue(unitStr, f"{unitStr}{baseName}")
    if not isinstance(unitStr, str):
        raise UnitError(f"Got '{unitStr}', {kind} with units was expected")
    return BaseValue(readUnit(unitDir, unitStr), unitStr)

def readDuration(unitStr):
    unitDir = {
        "s": s,
        "sec": s,
        "min": minute,
        "h": hour,
        "d": day,
        "day": day,
        "days": day
    }
    return _readQuantity(unitDir, unitStr, "a duration", "s")

def readLength(unitStr):
    unitDir = {
        "m": m,
        "km": km
    }
    return _readQuantity(unitDir, unitStr, "a length", "km")

def readData(unitStr, gigabyte=1000):
    """
    Read a data volume into megabytes. The number of megabytes in a gigabyte
    differs between conventions, hence the parameter.
    """
    unitDir = {
        "kB": MB / gigabyte,
        "MB": MB,
        "GB": gigabyte * MB,
        "TB": gigabyte * gigabyte * MB
    }
    return _readQuantity(unitDir, unitStr, "a data volume", "MB")

def readEnergy(unitStr):
    unitDir = {
        "J": J,
        "kJ": kJ,
        "MJ": 1000 * kJ
    }
    return _readQuantity(unitDir, unitStr, "an energy", "kJ")

def readVelocity(unitStr):
    unitDir = {
        "m/s": mps,
        "km/s": kmps
    }
    return _readQuantity(unitDir, unitStr, "a velocity", "m/s")

def readAngle(unitStr):
    unitDir = {
        "deg": deg,
        "°": deg,
        "rad": rad
    }
    return _readQuantity(unitDir, unitStr, "an angle", "deg")

def readPercents(unitStr):
    unitDir = { "%": 0.01 }
    if isinstance(unitStr, (int, float)) and not isinstance(unitStr, bool):
        return PercentageValue(unitStr, f"{100 * unitStr}%")
    if not isinstance(unitStr, str):
        raise UnitError(f"Got '{unitStr}', a percentage was expected")
    return PercentageValue(readUnit(unitDir, unitStr), unitStr)
