from datetime import timedelta
import pytest
from reconsched.track import *

HEADER = "time_utc,lat_deg,lon_deg\n"

def writeTrack(tmp_path, body, header=HEADER):
    path = tmp_path / "track.csv"
    path.write_text(header + body)
    return str(path)

def test_builtinTrack():
    points = readTrack(":example", 6 * 3600)
    assert len(points) == 29
    assert points[0] == TrackPoint(points[0].time, 13.0, -78.0)
    assert points[-1].time - points[0].time == timedelta(days=7)

def test_unknownBuiltin():
    with pytest.raises(IngestionError):
        readTrack(":nope")

def test_commentsAndSpacing(tmp_path):
    path = writeTrack(tmp_path, "# leading comment\n"
        "2020-01-01T00:00:00Z,10,20\n\n"
        "2020-01-01T06:00:00Z,11,21.5\n")
    points = readTrack(path)
    assert [(p.lat, p.lon) for p in points] == [(10, 20), (11, 21.5)]
    assert points[1].time - points[0].time == timedelta(hours=6)

@pytest.mark.parametrize("body, header", [
    ("2020-01-01T00:00:00Z,10,20\n", "time,lat,lon\n"),
    ("", HEADER),
    ("2020-01-01T00:00:00Z,10\n", HEADER),
    ("yesterday,10,20\n", HEADER),
    ("2020-01-01T00:00:00Z,95,20\n", HEADER),
    ("2020-01-01T00:00:00Z,10,20\n2020-01-01T00:00:00Z,11,20\n", HEADER),
    ("2020-01-01T00:00:00Z,10,20\n2020-01-01T06:00:00Z,11,20\n"
     "2020-01-01T09:00:00Z,12,20\n", HEADER),
])
def test_malformedTrack(tmp_path, body, header):
    with pytest.raises(IngestionError):
        readTrack(writeTrack(tmp_path, body, header))

def test_expectedInterval(tmp_path):
    path = writeTrack(tmp_path, "2020-01-01T00:00:00Z,10,20\n2020-01-01T03:00:00Z,11,20\n")
    assert len(readTrack(path, 3 * 3600)) == 2
    with pytest.raises(IngestionError, match="expected"):
        readTrack(path, 6 * 3600)

def test_missingFile(tmp_path):
    with pytest.raises(IngestionError):
        readTrack(str(tmp_path / "none.csv"))
