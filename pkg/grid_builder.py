"""Fuzzy grid construction: lattice points, containment counts, normalization."""
from __future__ import annotations
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from geometry import BoundingBox, SimplePolygon, containment_matrix, points_in_polygon
from membership import EvalParams, Targets, evaluate_many, target_arrays
from schemas import GridSummary
from utils import DescriptorError

if TYPE_CHECKING:
    from dataset import RegionBoundary, ResponseSet

GRID_COLUMNS = ["lon", "lat", "md"]
STRATIFIED_MAX_LEVELS = 10


class EmptyGrid(DescriptorError):
    pass


class NoCoverage(DescriptorError):
    pass


class DuplicateTarget(DescriptorError):
    pass


@dataclass(frozen=True)
class GranularitySpec:
    percent: float

    def __post_init__(self):
        p = float(self.percent)
        if not math.isfinite(p) or not 0.0 < p <= 100.0:
            raise ValueError(f"granularity {self.percent} outside (0, 100]")
        object.__setattr__(self, "percent", p)

    @property
    def steps(self) -> int:
        # tolerance keeps 100/p from landing just below an integer
        return int(math.floor(100.0 / self.percent + 1e-9))


@dataclass(frozen=True, eq=False)
class FuzzyGrid:
    # points: lon, lat, md sorted by (lat, lon); row position is the grid index
    label: str
    granularity: GranularitySpec
    bbox: BoundingBox
    points: pd.DataFrame
    response_count: int = 0

    def __post_init__(self):
        if list(self.points.columns) != GRID_COLUMNS:
            raise ValueError(f"grid columns must be {GRID_COLUMNS}, got {list(self.points.columns)}")
        if self.response_count < 0:
            raise ValueError("response_count must be >= 0")
        pts = self.points.reset_index(drop=True).astype("float64")
        md = pts["md"].to_numpy()
        if not np.all(np.isfinite(pts.to_numpy())):
            raise ValueError("grid holds non-finite values")
        if md.size and (md.min() < 0.0 or md.max() > 1.0):
            raise ValueError("membership degree outside [0, 1]")
        lat, lon = pts["lat"].to_numpy(), pts["lon"].to_numpy()
        ordered = (lat[1:] > lat[:-1]) | ((lat[1:] == lat[:-1]) & (lon[1:] > lon[:-1]))
        if not np.all(ordered):
            raise ValueError("grid points must be strictly sorted by (lat, lon)")
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_arrays(cls, label: str, granularity: GranularitySpec, bbox: BoundingBox,
                    lons, lats, md, response_count: int = 0) -> "FuzzyGrid":
        frame = pd.DataFrame({"lon": lons, "lat": lats, "md": md}, dtype="float64")
        frame = frame.sort_values(["lat", "lon"], kind="mergesort").reset_index(drop=True)
        return cls(label, granularity, bbox, frame, response_count)

    @property
    def lon(self) -> np.ndarray:
        return self.points["lon"].to_numpy()

    @property
    def lat(self) -> np.ndarray:
        return self.points["lat"].to_numpy()

    @property
    def md(self) -> np.ndarray:
        return self.points["md"].to_numpy()

    def __len__(self) -> int:
        return len(self.points)

    def equals(self, other: "FuzzyGrid") -> bool:
        return (
            self.label == other.label
            and self.granularity == other.granularity
            and self.bbox == other.bbox
            and self.response_count == other.response_count
            and self.points.equals(other.points)
        )


def make_grid_points(region: "RegionBoundary", granularity: GranularitySpec) -> pd.DataFrame:
    bb = region.bbox
    n = granularity.steps
    frac = granularity.percent / 100.0
    idx = np.arange(n + 1, dtype="float64")
    # clamp so the far edge survives floating-point overshoot
    lons = np.minimum(bb.min_lon + idx * (frac * bb.lon_extent), bb.max_lon)
    lats = np.minimum(bb.min_lat + idx * (frac * bb.lat_extent), bb.max_lat)

    lat_m, lon_m = np.meshgrid(lats, lons, indexing="ij")
    lon_c, lat_c = lon_m.ravel(), lat_m.ravel()
    inside = points_in_polygon(lon_c, lat_c, region.shape)
    if not inside.any():
        raise EmptyGrid(f"EmptyGrid: no lattice point at {granularity.percent}% falls inside the region")

    frame = pd.DataFrame({"lon": lon_c[inside], "lat": lat_c[inside]})
    frame = frame.drop_duplicates().reset_index(drop=True)
    logger.debug("Grid points @ {}% | candidates={} | inside={}", granularity.percent, lon_c.size, len(frame))
    return frame


def count_containment(points: pd.DataFrame, polygons: Sequence[SimplePolygon]) -> np.ndarray:
    hits = containment_matrix(points["lon"].to_numpy(), points["lat"].to_numpy(), list(polygons))
    return hits.sum(axis=1).astype(np.int64)


def grid_from_counts(label: str, granularity: GranularitySpec, bbox: BoundingBox,
                     points: pd.DataFrame, counts: np.ndarray, response_count: int) -> FuzzyGrid:
    max_count = int(counts.max()) if len(counts) else 0
    if max_count == 0:
        raise NoCoverage(f"NoCoverage: no grid point of '{label}' lies in any response polygon")
    md = counts.astype("float64") / float(max_count)
    frame = pd.DataFrame({"lon": points["lon"].to_numpy(), "lat": points["lat"].to_numpy(), "md": md})
    return FuzzyGrid(label, granularity, bbox, frame, response_count)


def build_fuzzy_grid(region: "RegionBoundary", responses: "ResponseSet",
                     granularity: GranularitySpec) -> FuzzyGrid:
    points = make_grid_points(region, granularity)
    counts = count_containment(points, responses.polygons)
    grid = grid_from_counts(responses.label, granularity, region.bbox, points, counts, len(responses.polygons))
    logger.info("Built grid '{}' @ {}% | points={} | responses={} | max_count={}",
                grid.label, granularity.percent, len(grid), grid.response_count, int(counts.max()))
    return grid


def interpolate_grid(source: FuzzyGrid, targets: Targets, params: EvalParams,
                     granularity: Optional[GranularitySpec] = None) -> FuzzyGrid:
    lons, lats = target_arrays(targets)
    frame = pd.DataFrame({"lon": lons, "lat": lats})
    dup = frame.duplicated().to_numpy()
    if dup.any():
        i = int(np.flatnonzero(dup)[0])
        raise DuplicateTarget(f"DuplicateTarget: ({lons[i]}, {lats[i]}) appears more than once")
    md = evaluate_many(source, frame, params)
    return FuzzyGrid.from_arrays(
        source.label,
        granularity or source.granularity,
        source.bbox,
        lons,
        lats,
        md,
        source.response_count,
    )


def alpha_cut(grid: FuzzyGrid, alpha: float) -> pd.DataFrame:
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha {alpha} outside (0, 1]")
    return grid.points[grid.points["md"] >= alpha].reset_index(drop=True)


def describe_grid(grid: FuzzyGrid) -> GridSummary:
    md = grid.md
    levels = int(np.unique(md).size)
    return GridSummary(
        descriptor=grid.label,
        granularity_pct=grid.granularity.percent,
        point_count=len(grid),
        response_count=grid.response_count,
        support_size=int((md > 0).sum()),
        core_size=int((md == 1.0).sum()),
        mean_md=float(md.mean()) if md.size else 0.0,
        level_count=levels,
        stratified=levels <= STRATIFIED_MAX_LEVELS,
    )
