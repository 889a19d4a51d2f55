from __future__ import annotations
from datetime import datetime, timezone
from typing import Optional, Union
import os
import numpy as np

PKG_BASE = os.path.dirname(__file__)
RESOURCES = os.path.join(PKG_BASE, "resources")

# Physical constants shared across the package; lengths in km, time in s
MU_EARTH = 398600.4418          # km^3 / s^2
R_EARTH = 6378.14               # km, spherical Earth
J2 = 1.08262668e-3
OMEGA_EARTH = 7.2921159e-5      # rad / s, sidereal rotation rate
AU = 149597870.7                # km
R_SUN = 696000.0                # km
MIN_ALTITUDE = 100.0            # km

# Solver tolerances
FEASIBILITY_TOL = 1e-6
INTEGRALITY_TOL = 1e-5

def resolveBuiltin(path: str, directory: str, suffix: str) -> Optional[str]:
    """
    Resources shipped with the package are addressed as `:name`. Returns the
    file path, or None for an unknown name. Other paths pass through.
    """
    if not path.startswith(":"):
        return path
    resolved = os.path.join(directory, path[1:] + suffix)
    return resolved if os.path.exists(resolved) else None

class ConfigurationError(RuntimeError):
    pass

class DimensionError(RuntimeError):
    pass

class SchemaError(RuntimeError):
    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}")
        self.location = location

def readEpoch(value: Union[str, datetime]) -> datetime:
    """
    Parse an ISO-8601 instant; naive values are treated as UTC.
    """
    if isinstance(value, datetime):
        epoch = value
    else:
        try:
            epoch = datetime.fromisoformat(str(value).strip().replace("Z", "+00:00"))
        except ValueError:
            raise ConfigurationError(f"'{value}' is not an ISO-8601 instant")
    if epoch.tzinfo is None:
        epoch = epoch.replace(tzinfo=timezone.utc)
    return epoch.astimezone(timezone.utc)

def writeEpoch(epoch: datetime) -> str:
    return epoch.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")

def wrapDegrees(angle):
    """Normalize angle(s) in degrees to [0, 360)"""
    wrapped = np.mod(angle, 360.0)
    # np.mod may return 360.0 for tiny negative inputs
    return np.where(wrapped >= 360.0, 0.0, wrapped) if isinstance(wrapped, np.ndarray) \
        else (0.0 if wrapped >= 360.0 else float(wrapped))

def circularVelocity(radius: float) -> float:
    """Circular orbit speed in km/s"""
    return float(np.sqrt(MU_EARTH / radius))

def orbitalPeriod(semiMajorAxis: float) -> float:
    return float(2 * np.pi * np.sqrt(semiMajorAxis ** 3 / MU_EARTH))

def gamma(a: float, b: float):
    """
    Percent improvement of a over b; None when b is zero.
    """
    if b == 0:
        return None
    return 100.0 * (a - b) / b
