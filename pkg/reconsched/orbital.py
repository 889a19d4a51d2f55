"""
Orbit propagation on the discrete time grid.

Positions are Earth-centered inertial, in km, sampled at the start of each
time step (step t maps to epoch + t * dt with t counted from 0).
"""
from __future__ import annotations
from dataclasses import dataclass, field
from datetime import datetime
from typing import List, Union
import numpy as np

from reconsched.common import (ConfigurationError, MU_EARTH, R_EARTH, J2,
    OMEGA_EARTH, AU, MIN_ALTITUDE, wrapDegrees, orbitalPeriod)

PERTURBATIONS = ["two_body", "j2_secular"]

class OrbitError(RuntimeError):
    pass

@dataclass(frozen=True)
class TimeGrid:
    epoch: datetime
    dt: float
    totalSteps: int
    stages: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigurationError(f"Time step has to be positive, got {self.dt}")
        if self.totalSteps < 1 or self.stages < 1:
            raise ConfigurationError("Time grid needs at least one step and one stage")
        if self.totalSteps % self.stages != 0:
            raise ConfigurationError(
                f"{self.totalSteps} steps cannot be split into {self.stages} equal stages")

    @staticmethod
    def fromHorizon(epoch: datetime, dt: float, horizon: float, stages: int = 1) -> TimeGrid:
        steps = horizon / dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ConfigurationError(
                f"Horizon {horizon} s is not a whole number of {dt} s steps")
        return TimeGrid(epoch, float(dt), int(round(steps)), stages)

    @property
    def horizon(self) -> float:
        return self.totalSteps * self.dt

    @property
    def stepsPerStage(self) -> int:
        return self.totalSteps // self.stages

    def times(self) -> np.ndarray:
        """Seconds since epoch of every step"""
        return np.arange(self.totalSteps, dtype=float) * self.dt

    def stageSteps(self, stage: int) -> np.ndarray:
        """Global 0-based step indices of a 1-based stage"""
        if not 1 <= stage <= self.stages:
            raise ConfigurationError(f"Stage {stage} out of range 1..{self.stages}")
        start = (stage - 1) * self.stepsPerStage
        return np.arange(start, start + self.stepsPerStage)

    def stageTimes(self, stage: int) -> np.ndarray:
        return self.stageSteps(stage).astype(float) * self.dt

    def globalStep(self, stage: int, t: int) -> int:
        return (stage - 1) * self.stepsPerStage + t

    def withStages(self, stages: int) -> TimeGrid:
        return TimeGrid(self.epoch, self.dt, self.totalSteps, stages)


@dataclass(frozen=True)
class OrbitalElements:
    """
    Circular orbit; angles in degrees, semi-major axis in km. The phase is
    the argument of latitude.
    """
    semiMajorAxis: float
    inclination: float
    raan: float
    argLatitude: float
    eccentricity: float = 0.0

    def __post_init__(self):
        if self.eccentricity != 0:
            raise OrbitError("Only circular orbits are supported")
        if self.semiMajorAxis - R_EARTH < MIN_ALTITUDE:
            raise OrbitError(
                f"Altitude {self.semiMajorAxis - R_EARTH:.2f} km is below {MIN_ALTITUDE} km")
        object.__setattr__(self, "inclination", float(self.inclination))
        object.__setattr__(self, "raan", wrapDegrees(self.raan))
        object.__setattr__(self, "argLatitude", wrapDegrees(self.argLatitude))

    @staticmethod
    def fromAltitude(altitude, inclination, raan, argLatitude) -> OrbitalElements:
        return OrbitalElements(R_EARTH + altitude, inclination, raan, argLatitude)

    @property
    def altitude(self) -> float:
        return self.semiMajorAxis - R_EARTH

    @property
    def period(self) -> float:
        return orbitalPeriod(self.semiMajorAxis)

    @property
    def meanMotion(self) -> float:
        return float(np.sqrt(MU_EARTH / self.semiMajorAxis ** 3))

    def normal(self) -> np.ndarray:
        i, o = np.radians(self.inclination), np.radians(self.raan)
        return np.array([np.sin(i) * np.sin(o), -np.sin(i) * np.cos(o), np.cos(i)])

    def samePlane(self, other: OrbitalElements, tol=1e-9) -> bool:
        return abs(self.semiMajorAxis - other.semiMajorAxis) < tol and \
            float(np.dot(self.normal(), other.normal())) > 1 - tol

    def sameOrbit(self, other: OrbitalElements, tol=1e-9) -> bool:
        du = abs((self.argLatitude - other.argLatitude + 180) % 360 - 180)
        return self.samePlane(other, tol) and du < tol

    def replace(self, **kwargs) -> OrbitalElements:
        values = self.toDict()
        values.update(kwargs)
        return OrbitalElements.fromDict(values)

    def toDict(self) -> dict:
        return {
            "semiMajorAxis": self.semiMajorAxis,
            "inclination": self.inclination,
            "raan": self.raan,
            "argLatitude": self.argLatitude
        }

    @staticmethod
    def fromDict(d: dict) -> OrbitalElements:
        return OrbitalElements(float(d["semiMajorAxis"]), float(d["inclination"]),
            float(d["raan"]), float(d["argLatitude"]))


@dataclass
class Ephemeris:
    positions: np.ndarray
    sourceId: str = ""

    def __len__(self):
        return len(self.positions)


def secularRates(elements: OrbitalElements, perturbation: str):
    """
    Return (raan rate, argument of latitude rate) in rad/s.
    """
    if perturbation not in PERTURBATIONS:
        raise ConfigurationError(f"Unknown perturbation model '{perturbation}'")
    n = elements.meanMotion
    if perturbation == "two_body":
        return 0.0, n
    k = J2 * (R_EARTH / elements.semiMajorAxis) ** 2
    cosI = np.cos(np.radians(elements.inclination))
    raanRate = -1.5 * n * k * cosI
    # argument of perigee plus mean anomaly rates for e = 0
    uRate = n * (1 + 0.75 * k * (8 * cosI ** 2 - 2))
    return float(raanRate), float(uRate)

def positionsAt(elements: OrbitalElements, times: np.ndarray,
                perturbation: str = "two_body") -> np.ndarray:
    """
    Inertial positions (N x 3, km) at given seconds since epoch.
    """
    raanRate, uRate = secularRates(elements, perturbation)
    times = np.asarray(times, dtype=float)
    u = np.radians(elements.argLatitude) + uRate * times
    o = np.radians(elements.raan) + raanRate * times
    i = np.radians(elements.inclination)
    cu, su, co, so = np.cos(u), np.sin(u), np.cos(o), np.sin(o)
    a = elements.semiMajorAxis
    return a * np.stack([
        cu * co - su * np.cos(i) * so,
        cu * so + su * np.cos(i) * co,
        su * np.sin(i)], axis=-1)

def propagate(elements: OrbitalElements, grid: TimeGrid,
              perturbation: str = "two_body", sourceId: str = "") -> Ephemeris:
    return Ephemeris(positionsAt(elements, grid.times(), perturbation), sourceId)

def gmstFromEpoch(epoch: datetime) -> float:
    """
    Greenwich mean sidereal time in degrees (IAU-82 polynomial).
    """
    jd = 2440587.5 + epoch.timestamp() / 86400.0
    t = (jd - 2451545.0) / 36525.0
    seconds = 67310.54841 + (876600 * 3600 + 8640184.812866) * t \
        + 0.093104 * t ** 2 - 6.2e-6 * t ** 3
    return float(np.mod(seconds, 86400.0) / 240.0)

def groundPointsAt(lat: float, lon: float, times: np.ndarray,
                   gmstAtEpoch: float = 0.0) -> np.ndarray:
    if not -90 <= lat <= 90 or not -180 <= lon <= 180:
        raise ConfigurationError(f"Invalid ground point ({lat}, {lon})")
    phi = np.radians(lat)
    theta = np.radians(gmstAtEpoch + lon) + OMEGA_EARTH * np.asarray(times, dtype=float)
    return R_EARTH * np.stack([
        np.cos(phi) * np.cos(theta),
        np.cos(phi) * np.sin(theta),
        np.full_like(theta, np.sin(phi))], axis=-1)

def groundPointPositions(lat: float, lon: float, grid: TimeGrid,
                         gmstAtEpoch: float = 0.0, sourceId: str = "") -> Ephemeris:
    return Ephemeris(groundPointsAt(lat, lon, grid.times(), gmstAtEpoch), sourceId)

def sunAt(epoch: datetime, times: np.ndarray) -> np.ndarray:
    """
    Low-precision solar ephemeris from mean elements, ECI, km.
    """
    jd = 2440587.5 + (epoch.timestamp() + np.asarray(times, dtype=float)) / 86400.0
    t = (jd - 2451545.0) / 36525.0
    meanLon = 280.460 + 36000.771 * t
    meanAnomaly = np.radians(357.5291092 + 35999.05034 * t)
    eclLon = np.radians(meanLon + 1.914666471 * np.sin(meanAnomaly)
        + 0.019994643 * np.sin(2 * meanAnomaly))
    distance = AU * (1.000140612 - 0.016708617 * np.cos(meanAnomaly)
        - 0.000139589 * np.cos(2 * meanAnomaly))
    obliquity = np.radians(23.439291 - 0.0130042 * t)
    return np.stack([
        distance * np.cos(eclLon),
        distance * np.cos(obliquity) * np.sin(eclLon),
        distance * np.sin(obliquity) * np.sin(eclLon)], axis=-1)

def sunPositions(grid: TimeGrid) -> Ephemeris:
    return Ephemeris(sunAt(grid.epoch, grid.times()), "sun")

def walkerDelta(total: int, planes: int, phasingFactor: int,
                inclination: float, altitude: float) -> List[OrbitalElements]:
    """
    Walker-delta pattern i:total/planes/phasingFactor. Satellites are listed
    plane by plane.
    """
    if planes < 1 or total < 1 or total % planes != 0:
        raise ConfigurationError(
            f"Walker pattern needs total ({total}) divisible by planes ({planes})")
    if not 0 <= phasingFactor < max(planes, 1):
        raise ConfigurationError(f"Phasing factor has to be in [0, {planes - 1}]")
    perPlane = total // planes
    constellation = []
    for p in range(planes):
        for n in range(perPlane):
            constellation.append(OrbitalElements.fromAltitude(
                altitude, inclination,
                360.0 * p / planes,
                360.0 * n / perPlane + 360.0 * phasingFactor * p / total))
    return constellation
