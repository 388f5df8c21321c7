"""Membership evaluation at arbitrary locations and argmax classification.

The degree at a location combines the four nearest grid points with
reversed distance weights: the nearest point takes d4/T, the farthest d1/T.
Inside ``epsilon_km`` of a grid point its stored degree is returned as is.
"""
from __future__ import annotations
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from geometry import GeoPoint, haversine_km_many
from utils import DescriptorError

if TYPE_CHECKING:
    from grid_builder import FuzzyGrid

NEIGHBOR_COUNT = 4
DEFAULT_EPSILON_KM = 1e-5


class InsufficientGrid(DescriptorError):
    pass


class DuplicateLabel(DescriptorError):
    pass


@dataclass(frozen=True)
class EvalParams:
    epsilon_km: float = DEFAULT_EPSILON_KM
    neighbor_count: int = NEIGHBOR_COUNT

    def __post_init__(self):
        if not (math.isfinite(self.epsilon_km) and self.epsilon_km > 0):
            raise ValueError(f"epsilon_km must be > 0, got {self.epsilon_km}")
        if self.neighbor_count != NEIGHBOR_COUNT:
            raise ValueError(f"neighbor_count is fixed at {NEIGHBOR_COUNT}")


@dataclass(frozen=True)
class Classification:
    winner: str
    winning_md: float
    per_descriptor: Dict[str, float] = field(default_factory=dict)
    tied: bool = False


Targets = Union[pd.DataFrame, Sequence[GeoPoint]]


def target_arrays(targets: Targets) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(targets, pd.DataFrame):
        return targets["lon"].to_numpy(dtype="float64"), targets["lat"].to_numpy(dtype="float64")
    pts = list(targets)
    return (np.array([p.lon for p in pts], dtype="float64"),
            np.array([p.lat for p in pts], dtype="float64"))


def nearest_neighbors(grid: "FuzzyGrid", lon: float, lat: float, k: int = NEIGHBOR_COUNT):
    # stable sort: equal distances go to the lower grid index
    d = haversine_km_many(lon, lat, grid.lon, grid.lat)
    order = np.argsort(d, kind="stable")[:k]
    return d[order], order


def combine_neighbors(distances: Sequence[float], degrees: Sequence[float], epsilon_km: float) -> float:
    d = [float(x) for x in distances]
    m = [float(x) for x in degrees]
    if d[0] < epsilon_km:
        return m[0]
    total = d[0] + d[1] + d[2] + d[3]
    # 1 - (T - d_i)/T reduces to d_i/T
    w = [d[3] / total, d[2] / total, d[1] / total, d[0] / total]
    value = w[0] * m[0] + w[1] * m[1] + w[2] * m[2] + w[3] * m[3]
    return min(max(value, min(m)), max(m))


def evaluate(grid: "FuzzyGrid", ep: GeoPoint, params: EvalParams = EvalParams()) -> float:
    return float(evaluate_many(grid, [ep], params)[0])


def evaluate_many(grid: "FuzzyGrid", targets: Targets, params: EvalParams = EvalParams()) -> np.ndarray:
    if len(grid) < NEIGHBOR_COUNT:
        raise InsufficientGrid(f"InsufficientGrid: '{grid.label}' has {len(grid)} points, needs {NEIGHBOR_COUNT}")
    lons, lats = target_arrays(targets)
    md = grid.md
    out = np.empty(lons.size, dtype="float64")
    for i in range(lons.size):
        d, idx = nearest_neighbors(grid, lons[i], lats[i])
        out[i] = combine_neighbors(d, md[idx], params.epsilon_km)
    return out


def _check_labels(grids: Sequence["FuzzyGrid"]) -> List[str]:
    if not grids:
        raise ValueError("at least one grid is required")
    labels = [g.label for g in grids]
    if len(set(labels)) != len(labels):
        raise DuplicateLabel(f"DuplicateLabel: {sorted(labels)}")
    return labels


def pick_winner(per_descriptor: Dict[str, float]) -> Classification:
    best = max(per_descriptor.values())
    winners = sorted(label for label, v in per_descriptor.items() if v == best)
    return Classification(winners[0], best, dict(per_descriptor), len(winners) > 1)


def classify(grids: Sequence["FuzzyGrid"], ep: GeoPoint, params: EvalParams = EvalParams()) -> Classification:
    return classify_many(grids, [ep], params)[0]


def classify_many(grids: Sequence["FuzzyGrid"], targets: Targets,
                  params: EvalParams = EvalParams()) -> List[Classification]:
    labels = _check_labels(grids)
    scores = np.vstack([evaluate_many(g, targets, params) for g in grids])
    return [
        pick_winner({label: float(scores[j, i]) for j, label in enumerate(labels)})
        for i in range(scores.shape[1])
    ]
