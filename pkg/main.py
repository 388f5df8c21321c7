"""Command-line surface: ``python main.py <command> --help``.

Exit codes: 0 success, 1 input or validation error, 2 a report that fails
its own invariants. Command output goes to stdout, diagnostics to stderr.
"""
from __future__ import annotations
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

import click
import geojson
from loguru import logger

from dataset import (
    COORD_PRECISION,
    SynthKind,
    SynthModel,
    Side,
    demo_region,
    load_grid,
    load_region,
    load_responses,
    region_to_geojson,
    responses_to_geojson,
    save_grid,
    synth_responses,
)
from evaluation import antonymy_check, cross_validate, granularity_study, monotonicity_check
from geometry import GeoPoint
from grid_builder import GranularitySpec, alpha_cut, build_fuzzy_grid, describe_grid, make_grid_points
from membership import EvalParams, classify, evaluate
from runner.config import Config
from runner.logging import setup_logging
from runner.pipeline import run_once
from runner.reports import crossval_tables, granularity_table, summary_table
from utils import InvariantViolation

_FILE = click.Path(exists=True, dir_okay=False, path_type=Path)
_OUT = click.Path(dir_okay=False, path_type=Path)


class FuzzyGeoGroup(click.Group):
    """Maps domain failures onto the documented exit codes."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.show()
            ctx.exit(1)
        except InvariantViolation as e:
            click.echo(f"InvariantViolation: {e}", err=True)
            ctx.exit(2)
        except (ValueError, OSError) as e:
            msg = str(e)
            name = type(e).__name__
            click.echo(msg if msg.startswith(name) else f"{name}: {msg}", err=True)
            ctx.exit(1)


def _cfg() -> Config:
    return click.get_current_context().find_root().obj


def _params(epsilon_km: Optional[float]) -> EvalParams:
    return EvalParams(epsilon_km=_cfg().epsilon_km if epsilon_km is None else epsilon_km)


def _read_region(path: Optional[Path]):
    return demo_region() if path is None else load_region(path.read_text(encoding="utf-8"))


def _read_responses(path: Path, label: str):
    rs, report = load_responses(path.read_text(encoding="utf-8"), label)
    for idx, reason in report.rejected:
        click.echo(f"rejected feature {idx}: {reason.value}", err=True)
    return rs


def _write(path: Optional[Path], text: str) -> None:
    if path is None:
        click.echo(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    logger.info("Wrote {}", path)


@click.group(cls=FuzzyGeoGroup)
@click.option("--log-level", default=None, help="Console log level (default from FUZZYGEO_LOG_LEVEL).")
@click.pass_context
def cli(ctx: click.Context, log_level: Optional[str]):
    """Fuzzy geographical descriptors built from survey polygons."""
    cfg = Config()
    setup_logging(log_level or cfg.log_level)
    ctx.obj = cfg


@cli.command()
@click.option("--region", type=_FILE, required=True)
@click.option("--responses", type=_FILE, required=True)
@click.option("--descriptor", required=True)
@click.option("--granularity", type=float, default=None, help="Grid spacing in % of the bbox extent.")
@click.option("--out", type=_OUT, required=True)
def build(region: Path, responses: Path, descriptor: str, granularity: Optional[float], out: Path):
    """Build a fuzzy grid from a response corpus."""
    spec = GranularitySpec(_cfg().granularity if granularity is None else granularity)
    reg = _read_region(region)
    rs = _read_responses(responses, descriptor)
    t0 = time.perf_counter()
    grid = build_fuzzy_grid(reg, rs, spec)
    secs = time.perf_counter() - t0
    _write(out, save_grid(grid))
    click.echo(f"points={len(grid)} seconds={secs:.4f}")


@cli.command(name="eval")
@click.option("--grid", type=_FILE, required=True)
@click.option("--lon", type=float, required=True)
@click.option("--lat", type=float, required=True)
@click.option("--epsilon-km", type=float, default=None)
def eval_cmd(grid: Path, lon: float, lat: float, epsilon_km: Optional[float]):
    """Membership degree of one location."""
    g = load_grid(grid.read_text(encoding="utf-8"))
    click.echo(f"{evaluate(g, GeoPoint(lon, lat), _params(epsilon_km)):.10f}")


@cli.command(name="classify")
@click.option("--grid", "grids", type=_FILE, multiple=True, required=True)
@click.option("--lon", type=float, required=True)
@click.option("--lat", type=float, required=True)
@click.option("--epsilon-km", type=float, default=None)
def classify_cmd(grids: Sequence[Path], lon: float, lat: float, epsilon_km: Optional[float]):
    """Winning descriptor at one location across several grids."""
    loaded = [load_grid(p.read_text(encoding="utf-8")) for p in grids]
    c = classify(loaded, GeoPoint(lon, lat), _params(epsilon_km))
    click.echo(f"winner={c.winner} md={c.winning_md:.10f} tied={str(c.tied).lower()}")
    for label in sorted(c.per_descriptor):
        click.echo(f"  {label}: {c.per_descriptor[label]:.10f}")


@cli.command()
@click.option("--region", type=_FILE, default=None, help="Region file (default: built-in demo region).")
@click.option("--descriptor", required=True)
@click.option("--kind", type=click.Choice([k.value for k in SynthKind]), default=SynthKind.LATITUDE.value)
@click.option("--side", type=click.Choice([s.value for s in Side]), default=Side.HIGH.value)
@click.option("--center", type=float, default=0.5)
@click.option("--jitter", type=float, default=0.05)
@click.option("--count", type=int, default=98)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=_OUT, required=True)
@click.option("--region-out", type=_OUT, default=None, help="Also write the region used.")
def synth(region, descriptor, kind, side, center, jitter, count, seed, out, region_out):
    """Write a synthetic jittered half-plane corpus."""
    reg = _read_region(region)
    model = SynthModel(kind, center, jitter, side, _cfg().seed if seed is None else seed)
    rs = synth_responses(reg, descriptor, model, count)
    _write(out, responses_to_geojson(rs))
    if region_out is not None:
        _write(region_out, region_to_geojson(reg))
    click.echo(f"polygons={len(rs)} descriptor={rs.label}")


@cli.command()
@click.option("--region", type=_FILE, required=True)
@click.option("--responses", type=_FILE, required=True)
@click.option("--descriptor", required=True)
@click.option("--baseline", type=float, default=None)
@click.option("--others", type=float, multiple=True, default=(2.0, 5.0, 10.0), show_default=True)
@click.option("--epsilon-km", type=float, default=None)
@click.option("--out", type=_OUT, default=None)
def granularity(region, responses, descriptor, baseline, others, epsilon_km, out):
    """Accuracy/efficiency tradeoff of coarser grids."""
    report = granularity_study(
        _read_region(region), _read_responses(responses, descriptor),
        _cfg().granularity if baseline is None else baseline, list(others), _params(epsilon_km),
    )
    report.check()
    if out is not None:
        _write(out, report.model_dump_json(indent=2))
    click.echo(granularity_table(report))


@cli.command()
@click.option("--region", type=_FILE, required=True)
@click.option("--responses", "responses", type=_FILE, multiple=True, required=True,
              help="One file per descriptor, or one file tagged with every descriptor.")
@click.option("--descriptor", "descriptors", multiple=True, required=True)
@click.option("--folds", type=int, default=None)
@click.option("--samples", type=int, default=None)
@click.option("--sample-granularity", type=float, default=None)
@click.option("--model-granularity", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--epsilon-km", type=float, default=None)
@click.option("--workers", type=int, default=None)
@click.option("--out", type=_OUT, default=None)
def xval(region, responses, descriptors, folds, samples, sample_granularity, model_granularity,
         seed, epsilon_km, workers, out):
    """k-fold cross-validation of competing descriptors."""
    cfg = _cfg()
    if len(responses) not in (1, len(descriptors)):
        raise click.UsageError("give one --responses file, or one per --descriptor")
    files = list(responses) if len(responses) == len(descriptors) else list(responses) * len(descriptors)
    sets = [_read_responses(p, d) for p, d in zip(files, descriptors)]
    report = cross_validate(
        _read_region(region), sets,
        folds=cfg.folds if folds is None else folds,
        samples_per_polygon=cfg.samples if samples is None else samples,
        sample_grid_pct=cfg.sample_granularity if sample_granularity is None else sample_granularity,
        model_grid_pct=cfg.model_granularity if model_granularity is None else model_granularity,
        seed=cfg.seed if seed is None else seed,
        params=_params(epsilon_km),
        workers=cfg.workers if workers is None else workers,
    )
    report.check()
    if out is not None:
        _write(out, report.model_dump_json(indent=2))
    click.echo(crossval_tables(report))


@cli.command()
@click.option("--grid", "grids", type=_FILE, multiple=True, required=True, help="Exactly two: A then B.")
@click.option("--region", type=_FILE, default=None, help="Evaluate on this region's lattice.")
@click.option("--granularity", type=float, default=None)
@click.option("--epsilon-km", type=float, default=None)
@click.option("--out", type=_OUT, default=None)
def antonymy(grids, region, granularity, epsilon_km, out):
    """Compare B with 1 - A."""
    if len(grids) != 2:
        raise click.UsageError("antonymy needs exactly two --grid files")
    grid_a, grid_b = (load_grid(p.read_text(encoding="utf-8")) for p in grids)
    if region is None:
        targets = grid_a.points[["lon", "lat"]]
    else:
        spec = GranularitySpec(_cfg().granularity if granularity is None else granularity)
        targets = make_grid_points(_read_region(region), spec)
    report = antonymy_check(grid_a, grid_b, targets, _params(epsilon_km))
    report.check()
    if out is not None:
        _write(out, report.model_dump_json(indent=2))
    click.echo(f"mean_abs_diff={report.mean_abs_diff:.10f} max_abs_diff={report.max_abs_diff:.10f} "
               f"points={len(report.diff_points)}")


@cli.command()
@click.option("--grid", type=_FILE, required=True)
@click.option("--axis", type=click.Choice(["lat", "lon"]), default="lat")
@click.option("--direction", type=click.Choice(["increasing", "decreasing"]), default="increasing")
@click.option("--out", type=_OUT, default=None)
def monotonicity(grid, axis, direction, out):
    """Audit md along lattice lines."""
    report = monotonicity_check(load_grid(grid.read_text(encoding="utf-8")), axis, direction)
    report.check()
    if out is not None:
        _write(out, report.model_dump_json(indent=2))
    click.echo(f"violations={len(report.violations)}")


@cli.command()
@click.option("--grid", type=_FILE, required=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "geojson"]), default="csv")
@click.option("--out", type=_OUT, default=None)
def export(grid, fmt, out):
    """Grid as CSV (lon,lat,md) or as a GeoJSON point collection."""
    g = load_grid(grid.read_text(encoding="utf-8"))
    if fmt == "csv":
        text = g.points.to_csv(index=False, lineterminator="\n")
    else:
        text = geojson.dumps(geojson.FeatureCollection([
            geojson.Feature(geometry=geojson.Point((lon, lat), precision=COORD_PRECISION), properties={"md": md})
            for lon, lat, md in g.points.itertuples(index=False)
        ]), sort_keys=True)
    _write(out, text)


@cli.command()
@click.option("--grid", type=_FILE, required=True)
@click.option("--alpha", type=float, default=None, help="Also report the size of the alpha-cut.")
def describe(grid, alpha):
    """Summary of a grid: support, core, membership levels."""
    g = load_grid(grid.read_text(encoding="utf-8"))
    click.echo(summary_table(describe_grid(g)))
    if alpha is not None:
        click.echo(f"alpha_cut({alpha:g})={len(alpha_cut(g, alpha))}")


@cli.command()
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--count", type=int, default=98)
@click.option("--jitter", type=float, default=0.05)
@click.option("--workers", type=int, default=None)
def run(seed, out_dir, count, jitter, workers):
    """Synthetic north/south pipeline: synth, build, xval, antonymy, monotonicity."""
    summary = run_once(seed=seed, out_dir=out_dir, config=_cfg(), responses=count, jitter=jitter, workers=workers)
    diag = " ".join(f"{k}={v:.4f}" for k, v in summary["diagonal"].items())
    click.echo(f"diagonal {diag} ties={summary['tie_count']} out={summary['out_dir']}")


def main(argv: Optional[List[str]] = None) -> int:
    try:
        cli.main(args=argv, prog_name="fuzzygeo", standalone_mode=True)
    except SystemExit as e:
        return int(e.code or 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
