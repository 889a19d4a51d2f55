"""
Storm track ingestion. Each row of a track is one target: the storm eye at
the time of the fix.
"""
from collections import namedtuple
from datetime import timedelta
from typing import List, Optional
import csv
import logging
import os

from reconsched.common import RESOURCES, ConfigurationError, readEpoch, resolveBuiltin

logger = logging.getLogger(__name__)

TRACK_LIB = os.path.join(RESOURCES, "tracks")
TRACK_HEADER = ["time_utc", "lat_deg", "lon_deg"]

TrackPoint = namedtuple("TrackPoint", ["time", "lat", "lon"])

class IngestionError(RuntimeError):
    pass

def resolveTrack(path: str) -> str:
    """
    Built-in tracks are addressed as `:name`.
    """
    resolved = resolveBuiltin(path, TRACK_LIB, ".csv")
    if resolved is None:
        raise IngestionError(f"Unknown built-in track '{path}'")
    return resolved

def readTrack(path: str, interval: Optional[float] = None) -> List[TrackPoint]:
    """
    Read a `time_utc,lat_deg,lon_deg` CSV. Lines starting with # are comments.
    Times have to increase strictly at a fixed interval; when `interval`
    (seconds) is given the spacing has to match it.
    """
    path = resolveTrack(path)
    try:
        with open(path, encoding="utf-8", newline="") as csvfile:
            lines = [l for l in csvfile if l.strip() and not l.lstrip().startswith("#")]
    except OSError as e:
        raise IngestionError(f"Cannot read track {path}: {e}") from None
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None:
        raise IngestionError(f"Track {path} is empty")
    if [h.strip() for h in header] != TRACK_HEADER:
        raise IngestionError(f"Track {path} has to start with header "
            f"'{','.join(TRACK_HEADER)}', got '{','.join(header)}'")
    points = []
    for rowNo, row in enumerate(reader, 2):
        if len(row) != 3:
            raise IngestionError(f"{path}, row {rowNo}: expected 3 fields, got {len(row)}")
        try:
            time = readEpoch(row[0])
            lat, lon = float(row[1]), float(row[2])
        except (ConfigurationError, ValueError) as e:
            raise IngestionError(f"{path}, row {rowNo}: {e}") from None
        if not -90 <= lat <= 90 or not -180 <= lon <= 180:
            raise IngestionError(f"{path}, row {rowNo}: position ({lat}, {lon}) is off the globe")
        points.append(TrackPoint(time, lat, lon))
    if not points:
        raise IngestionError(f"Track {path} has no fixes")
    checkSpacing(points, interval)
    logger.info("Read %d track fixes from %s", len(points), path)
    return points

def checkSpacing(points: List[TrackPoint], interval: Optional[float] = None) -> None:
    if len(points) < 2:
        return
    step = points[1].time - points[0].time
    if interval is not None and step != timedelta(seconds=interval):
        raise IngestionError(f"Track fixes are {step.total_seconds()} s apart, "
            f"expected {interval} s")
    for prev, curr in zip(points, points[1:]):
        if curr.time <= prev.time:
            raise IngestionError(f"Track time {curr.time.isoformat()} does not increase")
        if curr.time - prev.time != step:
            raise IngestionError(f"Track interval changes at {curr.time.isoformat()}")
