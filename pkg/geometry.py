"""Planar containment and spherical distance over lon/lat coordinates.

Containment is planar in degrees (even-odd ray casting, boundary inclusive);
distance is great-circle (haversine, mean Earth radius).
"""
from __future__ import annotations
import math
import numbers
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np
from shapely.geometry import LinearRing

from utils import DescriptorError

EARTH_RADIUS_KM = 6371.0

# upper bound on (points x edges) cells materialized per containment chunk
_MAX_CELLS = 2_000_000


@dataclass(frozen=True)
class GeoPoint:
    lon: float
    lat: float

    def __post_init__(self):
        if not (math.isfinite(self.lon) and math.isfinite(self.lat)):
            raise ValueError(f"non-finite coordinate ({self.lon}, {self.lat})")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")


@dataclass(frozen=True)
class BoundingBox:
    min_lon: float
    min_lat: float
    max_lon: float
    max_lat: float

    def __post_init__(self):
        if self.min_lon > self.max_lon or self.min_lat > self.max_lat:
            raise ValueError(f"inverted bounding box {self.as_list()}")

    @property
    def lon_extent(self) -> float:
        return self.max_lon - self.min_lon

    @property
    def lat_extent(self) -> float:
        return self.max_lat - self.min_lat

    def as_list(self) -> List[float]:
        return [self.min_lon, self.min_lat, self.max_lon, self.max_lat]


@dataclass(frozen=True)
class SimplePolygon:
    vertices: Tuple[GeoPoint, ...]

    @cached_property
    def coords(self) -> np.ndarray:
        return np.array([(v.lon, v.lat) for v in self.vertices], dtype="float64")

    @cached_property
    def edges(self) -> np.ndarray:
        # x1, y1, x2, y2 with the lower endpoint first
        a = self.coords
        b = np.roll(a, -1, axis=0)
        swap = (a[:, 1] > b[:, 1]) | ((a[:, 1] == b[:, 1]) & (a[:, 0] > b[:, 0]))
        return np.hstack([np.where(swap[:, None], b, a), np.where(swap[:, None], a, b)])

    def __len__(self) -> int:
        return len(self.vertices)

    @classmethod
    def from_coords(cls, coords: Iterable[Sequence[float]]) -> "SimplePolygon":
        out = validate_polygon(list(coords))
        if isinstance(out, Rejection):
            raise InvalidGeometry(out)
        return out


class Rejection(str, Enum):
    TOO_FEW_VERTICES = "TooFewVertices"
    SELF_INTERSECTING = "SelfIntersecting"
    NON_FINITE = "NonFinite"
    OUT_OF_RANGE = "OutOfRange"


class InvalidGeometry(DescriptorError):
    def __init__(self, reason: Rejection):
        super().__init__(f"InvalidGeometry({reason.value})")
        self.reason = reason


# ---------- distance ----------

def haversine_km_many(lon: float, lat: float, lons, lats) -> np.ndarray:
    lon1, lat1 = np.radians(lon), np.radians(lat)
    lon2 = np.radians(np.asarray(lons, dtype="float64"))
    lat2 = np.radians(np.asarray(lats, dtype="float64"))
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    a = np.sin(dlat / 2.0) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin(dlon / 2.0) ** 2
    a = np.clip(a, 0.0, 1.0)
    return EARTH_RADIUS_KM * 2.0 * np.arctan2(np.sqrt(a), np.sqrt(1.0 - a))


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    return float(haversine_km_many(a.lon, a.lat, [b.lon], [b.lat])[0])


# ---------- containment ----------

def _edge_table(polygons: Sequence[SimplePolygon]):
    sizes = np.array([len(p) for p in polygons])
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    edges = np.vstack([p.edges for p in polygons])
    return edges[:, 0], edges[:, 1], edges[:, 2], edges[:, 3], starts


def containment_matrix(lons, lats, polygons: Sequence[SimplePolygon]) -> np.ndarray:
    # even-odd ray towards +lon; an edge owns its lower endpoint, on-edge points count as inside
    px_all = np.asarray(lons, dtype="float64").reshape(-1)
    py_all = np.asarray(lats, dtype="float64").reshape(-1)
    out = np.zeros((len(px_all), len(polygons)), dtype=bool)
    if len(px_all) == 0 or not polygons:
        return out

    x1, y1, x2, y2, starts = _edge_table(polygons)
    step = max(1, _MAX_CELLS // len(x1))
    for s in range(0, len(px_all), step):
        px = px_all[s:s + step, None]
        py = py_all[s:s + step, None]

        cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        on_edge = (
            (cross == 0.0)
            & (px >= np.minimum(x1, x2)) & (px <= np.maximum(x1, x2))
            & (py >= y1) & (py <= y2)
        )
        straddle = (y1 <= py) & (py < y2)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_int = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        crossing = straddle & (px < x_int)

        odd = (np.add.reduceat(crossing.astype(np.int64), starts, axis=1) % 2) == 1
        boundary = np.logical_or.reduceat(on_edge, starts, axis=1)
        out[s:s + step] = odd | boundary
    return out


def points_in_polygon(lons, lats, poly: SimplePolygon) -> np.ndarray:
    return containment_matrix(lons, lats, [poly])[:, 0]


def point_in_polygon(pt: GeoPoint, poly: SimplePolygon) -> bool:
    return bool(points_in_polygon([pt.lon], [pt.lat], poly)[0])


def bounding_box(poly: SimplePolygon) -> BoundingBox:
    xy = poly.coords
    return BoundingBox(
        min_lon=float(xy[:, 0].min()),
        min_lat=float(xy[:, 1].min()),
        max_lon=float(xy[:, 0].max()),
        max_lat=float(xy[:, 1].max()),
    )


# ---------- validation ----------

def validate_polygon(raw: Sequence) -> Union[SimplePolygon, Rejection]:
    """Normalized ring, or the reason it is rejected."""
    coords: List[Tuple[float, float]] = []
    try:
        for v in raw:
            if isinstance(v, GeoPoint):
                coords.append((v.lon, v.lat))
            elif all(isinstance(c, numbers.Real) and not isinstance(c, bool) for c in v[:2]):
                coords.append((float(v[0]), float(v[1])))
            else:
                return Rejection.NON_FINITE
    except (TypeError, ValueError, IndexError):
        return Rejection.NON_FINITE

    if not all(math.isfinite(x) and math.isfinite(y) for x, y in coords):
        return Rejection.NON_FINITE
    if not all(-180.0 <= x <= 180.0 and -90.0 <= y <= 90.0 for x, y in coords):
        return Rejection.OUT_OF_RANGE

    if len(coords) > 1 and coords[0] == coords[-1]:
        coords.pop()
    ring = [c for i, c in enumerate(coords) if i == 0 or c != coords[i - 1]]
    while len(ring) > 1 and ring[0] == ring[-1]:
        ring.pop()

    if len(set(ring)) < 3:
        return Rejection.TOO_FEW_VERTICES
    lr = LinearRing(ring)
    # collinear rings fold back on themselves
    if not lr.is_simple or _shoelace(ring) == 0.0:
        return Rejection.SELF_INTERSECTING
    return SimplePolygon(tuple(GeoPoint(x, y) for x, y in ring))


def _shoelace(ring: Sequence[Tuple[float, float]]) -> float:
    xy = np.asarray(ring, dtype="float64")
    x, y = xy[:, 0], xy[:, 1]
    return float(0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
