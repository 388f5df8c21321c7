"""Human-readable renderings of the report models: console tables laid out
like the published granularity / hit / precision-recall tables, and the
Markdown run report."""
from __future__ import annotations
from typing import Any, Dict, List, Optional

import pandas as pd

from schemas import (
    AntonymyReport,
    CrossValReport,
    GranularityStudyReport,
    GridSummary,
    HitMatrix,
    MonotonicityReport,
    PRMetrics,
)


def _num(x: Optional[float], nd: int = 3) -> str:
    try:
        return f"{float(x):.{nd}f}"
    except (TypeError, ValueError):
        return "-"


def _factor(x: Optional[float]) -> str:
    return "-" if x is None else f"{x:.1f}x"


def granularity_frame(report: GranularityStudyReport) -> pd.DataFrame:
    rows = [{
        "Grid granularity": f"{report.baseline_pct:g}%",
        "Points": report.baseline_point_count,
        "Time (sec.)": _num(report.baseline_seconds, 4),
        "Reduction": "-",
        "Point reduction": "-",
        "Avg. diff.": "-",
        "Std. diff.": "-",
    }]
    for r in report.rows:
        rows.append({
            "Grid granularity": f"{r.granularity_pct:g}%",
            "Points": r.point_count,
            "Time (sec.)": _num(r.build_seconds, 4),
            "Reduction": _factor(r.reduction_factor),
            "Point reduction": _factor(r.point_reduction_factor),
            "Avg. diff.": _num(r.mean_abs_diff),
            "Std. diff.": _num(r.std_abs_diff),
        })
    return pd.DataFrame(rows)


def hit_frame(matrix: HitMatrix) -> pd.DataFrame:
    return pd.DataFrame(
        [[_num(v) for v in row] for row in matrix.fractions],
        index=[f"% Hits {w}" for w in matrix.labels],
        columns=matrix.labels,
    )


def metrics_frame(metrics: PRMetrics) -> pd.DataFrame:
    return pd.DataFrame({
        label: {
            "Precision": _num(m.precision),
            "Recall": _num(m.pair_recall),
            "Standard recall": _num(m.standard_recall),
        }
        for label, m in metrics.per_label.items()
    })


def granularity_table(report: GranularityStudyReport) -> str:
    return granularity_frame(report).to_string(index=False)


def crossval_tables(report: CrossValReport) -> str:
    return "\n\n".join([
        hit_frame(report.mean_matrix).to_string(),
        metrics_frame(report.metrics).to_string(),
        f"samples={report.sample_count} ties={report.tie_count}",
    ])


def summary_table(summary: GridSummary) -> str:
    return pd.Series(summary.model_dump()).to_string()


def _markdown_table(frame: pd.DataFrame, index_name: str = "") -> List[str]:
    cols = list(frame.columns)
    lines = [f"| {index_name} | " + " | ".join(str(c) for c in cols) + " |",
             "|---|" + "---:|" * len(cols)]
    for idx, row in frame.iterrows():
        lines.append(f"| {idx} | " + " | ".join(str(row[c]) for c in cols) + " |")
    return lines


def markdown_report(summary: Dict[str, Any], xval: CrossValReport, antonymy: AntonymyReport,
                    monotonicity: List[MonotonicityReport]) -> str:
    lines = [
        "# Fuzzy Descriptor Run (synthetic survey)",
        f"**Seed:** {summary['seed']}  ",
        f"**Responses per descriptor:** {summary['responses']}  ",
        f"**Model granularity:** {xval.model_granularity_pct:g}%  ",
        f"**Sample granularity:** {xval.sample_granularity_pct:g}%",
        "",
        "## Grids",
        "| Descriptor | Points | Support | Core | Levels | Stratified |",
        "|---|---:|---:|---:|---:|---:|",
    ]
    for g in summary["grids"]:
        lines.append(
            f"| {g['descriptor']} | {g['point_count']} | {g['support_size']} | {g['core_size']} | "
            f"{g['level_count']} | {'yes' if g['stratified'] else 'no'} |"
        )

    lines += ["", f"## Cross-validation ({xval.folds} folds, {xval.samples_per_polygon} samples/polygon)"]
    lines += _markdown_table(hit_frame(xval.mean_matrix))
    lines += [""]
    lines += _markdown_table(metrics_frame(xval.metrics))
    lines += ["", f"Tied classifications: **{xval.tie_count}** of {xval.sample_count} samples."]

    lines += [
        "", "## Antonymy",
        f"- {antonymy.descriptor_b} vs 1 - {antonymy.descriptor_a}: mean |diff| {_num(antonymy.mean_abs_diff, 6)}, "
        f"max |diff| {_num(antonymy.max_abs_diff, 6)} over {len(antonymy.diff_points)} points",
        "", "## Monotonicity",
    ]
    for m in monotonicity:
        lines.append(f"- {m.descriptor} ({m.axis}, {m.direction}): {len(m.violations)} violations")
    return "\n".join(lines)
