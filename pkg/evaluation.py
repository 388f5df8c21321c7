from __future__ import annotations
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from sklearn.model_selection import KFold

from geometry import points_in_polygon
from grid_builder import (
    FuzzyGrid,
    GranularitySpec,
    count_containment,
    grid_from_counts,
    interpolate_grid,
    make_grid_points,
)
from membership import DuplicateLabel, EvalParams, Targets, classify_many, evaluate_many, target_arrays
from schemas import (
    AntonymyReport,
    CrossValReport,
    DiffPoint,
    GranularityRow,
    GranularityStudyReport,
    HitMatrix,
    LabelMetrics,
    MonotonicityReport,
    PRMetrics,
    Violation,
)
from utils import DescriptorError, abs_diff_stats, safe_ratio


class InsufficientPolygons(DescriptorError):
    pass


class PairRecallUndefined(DescriptorError):
    pass


# ---------- granularity ----------

def _timed_build(region, responses, spec: GranularitySpec) -> Tuple[FuzzyGrid, float]:
    points = make_grid_points(region, spec)
    t0 = time.perf_counter()
    counts = count_containment(points, responses.polygons)
    secs = time.perf_counter() - t0
    grid = grid_from_counts(responses.label, spec, region.bbox, points, counts, len(responses.polygons))
    return grid, secs


def granularity_study(region, responses, baseline_pct: float, others: Sequence[float],
                      params: EvalParams = EvalParams()) -> GranularityStudyReport:
    if not others:
        raise ValueError("others must name at least one granularity")
    if min(others) < baseline_pct:
        raise ValueError(f"baseline {baseline_pct}% must not be coarser than {min(others)}%")

    base_spec = GranularitySpec(baseline_pct)
    base, base_secs = _timed_build(region, responses, base_spec)
    targets = base.points[["lon", "lat"]]
    logger.info("Baseline @ {}% | points={} | count={:.4f}s", baseline_pct, len(base), base_secs)

    rows: List[GranularityRow] = []
    for pct in others:
        grid, secs = _timed_build(region, responses, GranularitySpec(pct))
        interp = interpolate_grid(grid, targets, params, granularity=base_spec)
        mean, std = abs_diff_stats(interp.md, base.md)
        rows.append(GranularityRow(
            granularity_pct=float(pct),
            point_count=len(grid),
            build_seconds=secs,
            reduction_factor=safe_ratio(base_secs, secs),
            point_reduction_factor=safe_ratio(len(base), len(grid)),
            mean_abs_diff=mean,
            std_abs_diff=std,
        ))
        logger.info("Granularity {}% | points={} | count={:.4f}s | mean diff={:.4f}", pct, len(grid), secs, mean)

    return GranularityStudyReport(
        descriptor=responses.label,
        baseline_pct=float(baseline_pct),
        baseline_point_count=len(base),
        baseline_seconds=base_secs,
        rows=rows,
    )


# ---------- cross-validation ----------

def fold_partition(n: int, folds: int, seed: int) -> List[np.ndarray]:
    kf = KFold(n_splits=folds, shuffle=True, random_state=seed)
    return [np.sort(test) for _, test in kf.split(np.arange(n))]


def _run_fold(k: int, region, response_sets, partitions: Dict[str, List[np.ndarray]],
              model_spec: GranularitySpec, model_points: pd.DataFrame, sample_points: pd.DataFrame,
              samples_per_polygon: int, seed: int, params: EvalParams) -> Tuple[HitMatrix, int, int]:
    rng = np.random.default_rng([int(seed), k])
    labels = [rs.label for rs in response_sets]

    grids = []
    for rs in response_sets:
        held = set(partitions[rs.label][k].tolist())
        train = [p for i, p in enumerate(rs.polygons) if i not in held]
        counts = count_containment(model_points, train)
        grids.append(grid_from_counts(rs.label, model_spec, region.bbox, model_points, counts, len(train)))

    s_lon, s_lat = sample_points["lon"].to_numpy(), sample_points["lat"].to_numpy()
    columns: Dict[str, np.ndarray] = {}
    ties = samples = 0
    for rs in response_sets:
        scores = []
        for i in partitions[rs.label][k]:
            cand = np.flatnonzero(points_in_polygon(s_lon, s_lat, rs.polygons[i]))
            if cand.size == 0:
                logger.warning("Fold {} | '{}' polygon {} holds no sample point; skipped", k, rs.label, int(i))
                continue
            chosen = rng.choice(cand, size=min(samples_per_polygon, cand.size), replace=False)
            results = classify_many(grids, sample_points.iloc[chosen], params)
            winners = [c.winner for c in results]
            scores.append([winners.count(w) / len(winners) for w in labels])
            ties += sum(c.tied for c in results)
            samples += len(results)
        if not scores:
            raise InsufficientPolygons(f"InsufficientPolygons: fold {k} has no scorable '{rs.label}' polygon")
        columns[rs.label] = np.mean(np.asarray(scores), axis=0)

    fractions = [[float(columns[t][w]) for t in labels] for w in range(len(labels))]
    logger.debug("Fold {} | diagonal={}", k, [round(fractions[j][j], 4) for j in range(len(labels))])
    return HitMatrix(labels=labels, fractions=fractions), ties, samples


def cross_validate(region, response_sets: Sequence, folds: int = 10, samples_per_polygon: int = 30,
                   sample_grid_pct: float = 1.0, model_grid_pct: float = 2.0, seed: int = 11,
                   params: EvalParams = EvalParams(), workers: int = 1) -> CrossValReport:
    labels = [rs.label for rs in response_sets]
    if len(labels) < 2:
        raise ValueError("cross-validation needs at least two descriptors")
    if len(set(labels)) != len(labels):
        raise DuplicateLabel(f"DuplicateLabel: {sorted(labels)}")
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if samples_per_polygon < 1:
        raise ValueError("samples_per_polygon must be >= 1")
    for rs in response_sets:
        if len(rs.polygons) < folds:
            raise InsufficientPolygons(
                f"InsufficientPolygons: '{rs.label}' has {len(rs.polygons)} polygons for {folds} folds")

    partitions = {rs.label: fold_partition(len(rs.polygons), folds, seed) for rs in response_sets}
    model_spec = GranularitySpec(model_grid_pct)
    model_points = make_grid_points(region, model_spec)
    sample_points = make_grid_points(region, GranularitySpec(sample_grid_pct))

    def job(k: int):
        return _run_fold(k, region, response_sets, partitions, model_spec, model_points,
                         sample_points, samples_per_polygon, seed, params)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(folds)))
    else:
        results = [job(k) for k in range(folds)]

    per_fold = [r[0] for r in results]
    mean = np.mean(np.asarray([m.fractions for m in per_fold]), axis=0)
    mean_matrix = HitMatrix(labels=labels, fractions=mean.tolist())
    report = CrossValReport(
        folds=folds,
        model_granularity_pct=model_spec.percent,
        sample_granularity_pct=float(sample_grid_pct),
        samples_per_polygon=samples_per_polygon,
        seed=int(seed),
        per_fold=per_fold,
        mean_matrix=mean_matrix,
        metrics=precision_recall(mean_matrix, pair_recall=len(labels) == 2),
        sample_count=sum(r[2] for r in results),
        tie_count=sum(r[1] for r in results),
    )
    logger.success("Cross-validation done | folds={} | samples={} | ties={} | diagonal={}",
                   folds, report.sample_count, report.tie_count,
                   [round(mean[j, j], 4) for j in range(len(labels))])
    return report


# ---------- metrics ----------

def precision_recall(matrix: HitMatrix, class_weights: Optional[Dict[str, float]] = None,
                     pair_recall: bool = True) -> PRMetrics:
    """Precision, the two-class pair recall and standard recall per label.

    pair_recall(A) = h[A][A] / (h[A][A] + h[B][B]); it only exists for two
    labels. Undefined ratios (0/0) come back as None.
    """
    labels = list(matrix.labels)
    h = np.asarray(matrix.fractions, dtype="float64")
    weights = class_weights or {label: 1.0 / len(labels) for label in labels}
    if set(weights) != set(labels):
        raise ValueError("class weights must name exactly the matrix labels")
    if any(w <= 0 for w in weights.values()) or abs(sum(weights.values()) - 1.0) > 1e-9:
        raise ValueError("class weights must be positive and sum to 1")
    if pair_recall and len(labels) != 2:
        raise PairRecallUndefined(f"PairRecallUndefined: {len(labels)} labels")

    w = np.array([weights[label] for label in labels])
    per_label: Dict[str, LabelMetrics] = {}
    for i, label in enumerate(labels):
        per_label[label] = LabelMetrics(
            precision=safe_ratio(h[i, i] * w[i], float(np.dot(h[i, :], w))),
            standard_recall=float(h[i, i]),
        )
    if pair_recall:
        a, b = labels
        first = safe_ratio(h[0, 0], h[0, 0] + h[1, 1])
        per_label[a].pair_recall = first
        per_label[b].pair_recall = None if first is None else 1.0 - first
    return PRMetrics(class_weights={label: float(weights[label]) for label in labels}, per_label=per_label)


# ---------- antonymy / monotonicity ----------

def antonymy_check(grid_a: FuzzyGrid, grid_b: FuzzyGrid, targets: Targets,
                   params: EvalParams = EvalParams()) -> AntonymyReport:
    """Signed diff md_b - (1 - md_a) at every target."""
    lons, lats = target_arrays(targets)
    if lons.size == 0:
        raise ValueError("antonymy check needs at least one target")
    frame = pd.DataFrame({"lon": lons, "lat": lats})
    md_a = evaluate_many(grid_a, frame, params)
    md_b = evaluate_many(grid_b, frame, params)
    diff = md_b - (1.0 - md_a)
    report = AntonymyReport(
        descriptor_a=grid_a.label,
        descriptor_b=grid_b.label,
        mean_abs_diff=float(np.abs(diff).mean()),
        max_abs_diff=float(np.abs(diff).max()),
        diff_points=[DiffPoint(lon=float(x), lat=float(y), diff=float(v)) for x, y, v in zip(lons, lats, diff)],
    )
    logger.info("Antonymy {} vs 1-{} | mean |diff|={:.3g} | max={:.3g}",
                grid_b.label, grid_a.label, report.mean_abs_diff, report.max_abs_diff)
    return report


def monotonicity_check(grid: FuzzyGrid, axis: Literal["lat", "lon"] = "lat",
                       direction: Literal["increasing", "decreasing"] = "increasing") -> MonotonicityReport:
    if axis not in ("lat", "lon") or direction not in ("increasing", "decreasing"):
        raise ValueError(f"bad axis/direction {axis!r}/{direction!r}")
    other = "lon" if axis == "lat" else "lat"
    violations: List[Violation] = []
    for _, line in grid.points.groupby(other, sort=True):
        line = line.sort_values(axis, ascending=direction == "increasing", kind="mergesort")
        xy = line[["lon", "lat"]].to_numpy()
        md = line["md"].to_numpy()
        for i in np.flatnonzero(md[:-1] > md[1:]):
            violations.append(Violation(
                point_a=(float(xy[i, 0]), float(xy[i, 1])),
                point_b=(float(xy[i + 1, 0]), float(xy[i + 1, 1])),
                md_a=float(md[i]),
                md_b=float(md[i + 1]),
            ))
    if violations:
        logger.warning("'{}' is not monotone ({} {}): {} violations", grid.label, axis, direction, len(violations))
    return MonotonicityReport(descriptor=grid.label, axis=axis, direction=direction, violations=violations)
