from __future__ import annotations
import math
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from utils import InvariantViolation

REPORT_FORMAT_VERSION = 1
_TOL = 1e-9


class GridDocument(BaseModel):
    model_config = ConfigDict(allow_inf_nan=False)

    format_version: int
    descriptor: str = Field(min_length=1)
    granularity_pct: float = Field(gt=0, le=100)
    bbox: Tuple[float, float, float, float]
    response_count: int = Field(ge=0)
    points: List[Tuple[float, float, float]]

    @field_validator("points")
    @classmethod
    def _md_in_unit_interval(cls, v):
        for lon, lat, md in v:
            if not 0.0 <= md <= 1.0:
                raise ValueError(f"membership {md} at ({lon}, {lat}) outside [0, 1]")
        return v


# ---------- granularity ----------

class GranularityRow(BaseModel):
    granularity_pct: float
    point_count: int = Field(ge=0)
    build_seconds: float = Field(ge=0)
    reduction_factor: Optional[float] = None
    point_reduction_factor: Optional[float] = None
    mean_abs_diff: float = Field(ge=0)
    std_abs_diff: float = Field(ge=0)


class GranularityStudyReport(BaseModel):
    format_version: int = REPORT_FORMAT_VERSION
    descriptor: str
    baseline_pct: float
    baseline_point_count: int
    baseline_seconds: float
    rows: List[GranularityRow] = Field(default_factory=list)

    def check(self) -> None:
        for r in self.rows:
            if r.granularity_pct < self.baseline_pct:
                raise InvariantViolation(f"row {r.granularity_pct}% is finer than baseline {self.baseline_pct}%")
            if r.reduction_factor is not None and r.build_seconds > 0:
                want = self.baseline_seconds / r.build_seconds
                if not math.isclose(r.reduction_factor, want, rel_tol=1e-9):
                    raise InvariantViolation(f"reduction factor {r.reduction_factor} != {want}")


# ---------- cross-validation ----------

class HitMatrix(BaseModel):
    """fractions[w][t]: share of samples from label t classified as w."""
    labels: List[str]
    fractions: List[List[float]]

    def check(self) -> None:
        n = len(self.labels)
        if len(self.fractions) != n or any(len(row) != n for row in self.fractions):
            raise InvariantViolation(f"hit matrix is not {n}x{n}")
        for t in range(n):
            col = [self.fractions[w][t] for w in range(n)]
            if any(x < -_TOL or x > 1 + _TOL for x in col):
                raise InvariantViolation(f"entry outside [0, 1] in column '{self.labels[t]}'")
            if abs(sum(col) - 1.0) > _TOL:
                raise InvariantViolation(f"column '{self.labels[t]}' sums to {sum(col)}")

    def hit(self, winner: str, truth: str) -> float:
        return self.fractions[self.labels.index(winner)][self.labels.index(truth)]


class LabelMetrics(BaseModel):
    precision: Optional[float] = None
    pair_recall: Optional[float] = None
    standard_recall: Optional[float] = None


class PRMetrics(BaseModel):
    class_weights: Dict[str, float]
    per_label: Dict[str, LabelMetrics]

    def check(self) -> None:
        for label, m in self.per_label.items():
            for name in ("precision", "pair_recall", "standard_recall"):
                v = getattr(m, name)
                if v is not None and not (-_TOL <= v <= 1 + _TOL):
                    raise InvariantViolation(f"{name}({label}) = {v} outside [0, 1]")
        recalls = [m.pair_recall for m in self.per_label.values()]
        if len(recalls) == 2 and None not in recalls and abs(sum(recalls) - 1.0) > _TOL:
            raise InvariantViolation(f"pair recalls sum to {sum(recalls)}")


class CrossValReport(BaseModel):
    format_version: int = REPORT_FORMAT_VERSION
    folds: int
    model_granularity_pct: float
    sample_granularity_pct: float
    samples_per_polygon: int
    seed: int
    per_fold: List[HitMatrix]
    mean_matrix: HitMatrix
    metrics: PRMetrics
    sample_count: int
    tie_count: int

    def check(self) -> None:
        if len(self.per_fold) != self.folds:
            raise InvariantViolation(f"{len(self.per_fold)} fold matrices for {self.folds} folds")
        self.mean_matrix.check()
        for m in self.per_fold:
            m.check()
        n = len(self.mean_matrix.labels)
        for w in range(n):
            for t in range(n):
                mean = sum(m.fractions[w][t] for m in self.per_fold) / self.folds
                if abs(mean - self.mean_matrix.fractions[w][t]) > 1e-12:
                    raise InvariantViolation(f"mean matrix entry ({w}, {t}) is not the fold mean")
        self.metrics.check()
        if not 0 <= self.tie_count <= self.sample_count:
            raise InvariantViolation(f"tie_count {self.tie_count} exceeds sample_count {self.sample_count}")


# ---------- antonymy / monotonicity ----------

class DiffPoint(BaseModel):
    lon: float
    lat: float
    diff: float


class AntonymyReport(BaseModel):
    format_version: int = REPORT_FORMAT_VERSION
    descriptor_a: str
    descriptor_b: str
    mean_abs_diff: float
    max_abs_diff: float
    diff_points: List[DiffPoint] = Field(default_factory=list)

    def check(self) -> None:
        if self.mean_abs_diff < 0 or self.max_abs_diff + _TOL < self.mean_abs_diff:
            raise InvariantViolation("mean |diff| must lie in [0, max |diff|]")


class Violation(BaseModel):
    point_a: Tuple[float, float]
    point_b: Tuple[float, float]
    md_a: float
    md_b: float


class MonotonicityReport(BaseModel):
    format_version: int = REPORT_FORMAT_VERSION
    descriptor: str
    axis: Literal["lat", "lon"]
    direction: Literal["increasing", "decreasing"]
    violations: List[Violation] = Field(default_factory=list)

    def check(self) -> None:
        for v in self.violations:
            if not v.md_a > v.md_b:
                raise InvariantViolation(f"recorded violation {v.point_a}->{v.point_b} is not a decrease")


class GridSummary(BaseModel):
    descriptor: str
    granularity_pct: float
    point_count: int
    response_count: int
    support_size: int
    core_size: int
    mean_md: float
    level_count: int
    stratified: bool
