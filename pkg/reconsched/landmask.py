"""
Coarse 1°×1° land grid used to keep sampled ground stations on land.
"""
from typing import Optional
import json
import math
import os
import numpy as np
import shapely
from shapely.geometry import Polygon
from shapely.ops import unary_union

from reconsched.common import RESOURCES, ConfigurationError

LANDMASK_FILE = os.path.join(RESOURCES, "landmask.json")

_cachedGrid: Optional[np.ndarray] = None

def readLandPolygons(path: str = LANDMASK_FILE):
    try:
        with open(path, encoding="utf-8") as f:
            outlines = json.load(f)["polygons"]
    except (OSError, ValueError, KeyError) as e:
        raise ConfigurationError(f"Cannot read land mask {path}: {e}") from None
    polygons = []
    for name, ring in outlines.items():
        polygon = Polygon(ring)
        if not polygon.is_valid:
            polygon = polygon.buffer(0)
        if polygon.is_empty:
            raise ConfigurationError(f"Land outline '{name}' is degenerate")
        polygons.append(polygon)
    return unary_union(polygons)

def rasterize(land, resolution: float = 1.0) -> np.ndarray:
    """
    Boolean grid indexed [lat, lon]; a cell is land when its center is.
    Rows start at -90°, columns at -180°.
    """
    lats = -90 + resolution * (np.arange(round(180 / resolution)) + 0.5)
    lons = -180 + resolution * (np.arange(round(360 / resolution)) + 0.5)
    lonGrid, latGrid = np.meshgrid(lons, lats)
    return shapely.contains_xy(land, lonGrid, latGrid)

def landGrid() -> np.ndarray:
    global _cachedGrid
    if _cachedGrid is None:
        _cachedGrid = rasterize(readLandPolygons())
    return _cachedGrid

def isLand(lat: float, lon: float) -> bool:
    grid = landGrid()
    row = min(int(math.floor(lat + 90)), grid.shape[0] - 1)
    col = int(math.floor((lon + 180) % 360)) % grid.shape[1]
    return bool(grid[max(row, 0), col])

def landFraction() -> float:
    """Share of grid cells marked as land, weighted by cell area"""
    grid = landGrid()
    lats = np.radians(-89.5 + np.arange(grid.shape[0]))
    weights = np.cos(lats)[:, None] * np.ones(grid.shape[1])
    return float((grid * weights).sum() / weights.sum())
