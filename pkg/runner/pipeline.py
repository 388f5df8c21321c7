# runner/pipeline.py
from __future__ import annotations
import json
from pathlib import Path
from typing import Any, Dict, Optional, Union

from loguru import logger

from dataset import (
    RegionBoundary,
    SynthKind,
    SynthModel,
    Side,
    demo_region,
    region_to_geojson,
    responses_to_geojson,
    save_grid,
    synth_responses,
)
from evaluation import antonymy_check, cross_validate, monotonicity_check
from grid_builder import GranularitySpec, build_fuzzy_grid, describe_grid, make_grid_points
from membership import EvalParams

from .artifacts import ArtifactStore
from .config import Config
from .logging import setup_logging
from .reports import markdown_report

DEFAULT_RESPONSES = 98
DEFAULT_JITTER = 0.05


def run_once(seed: Optional[int] = None, out_dir: Optional[Union[str, Path]] = None,
             config: Optional[Config] = None, responses: int = DEFAULT_RESPONSES,
             jitter: float = DEFAULT_JITTER, region: Optional[RegionBoundary] = None,
             workers: Optional[int] = None) -> Dict[str, Any]:
    """Synthetic north/south survey end to end; every artifact lands in one directory.

    All report files are a pure function of the arguments and config, so two
    runs with the same seed write byte-identical files (run.log aside).
    """
    config = config or Config()
    seed = config.seed if seed is None else int(seed)
    store = ArtifactStore(base_dir=config.reports_dir if out_dir is None else Path(out_dir).parent)
    dpath = Path(out_dir) if out_dir is not None else store.path_for_run(seed=seed)
    dpath.mkdir(parents=True, exist_ok=True)

    file_sink = setup_logging(config.log_level, dpath / "run.log")
    try:
        return _run_steps(store, dpath, config, seed, responses, jitter, region or demo_region(), workers)
    finally:
        logger.remove(file_sink)


def _run_steps(store: ArtifactStore, dpath: Path, config: Config, seed: int, responses: int,
               jitter: float, region: RegionBoundary, workers: Optional[int]) -> Dict[str, Any]:
    logger.info("Run started | seed={} | responses={} | jitter={}", seed, responses, jitter)
    params = EvalParams(epsilon_km=config.epsilon_km)
    north_model = SynthModel(SynthKind.LATITUDE, 0.5, jitter, Side.HIGH, seed)
    north = synth_responses(region, "north", north_model, responses)
    south = synth_responses(region, "south", north_model.complement(), responses)

    store.write_text(dpath, "region.geojson", region_to_geojson(region))
    store.write_text(dpath, "responses_north.geojson", responses_to_geojson(north))
    store.write_text(dpath, "responses_south.geojson", responses_to_geojson(south))

    model_spec = GranularitySpec(config.model_granularity)
    grid_n = build_fuzzy_grid(region, north, model_spec)
    grid_s = build_fuzzy_grid(region, south, model_spec)
    store.write_text(dpath, "grid_north.json", save_grid(grid_n))
    store.write_text(dpath, "grid_south.json", save_grid(grid_s))

    xval = cross_validate(
        region, [north, south],
        folds=config.folds,
        samples_per_polygon=config.samples,
        sample_grid_pct=config.sample_granularity,
        model_grid_pct=config.model_granularity,
        seed=seed,
        params=params,
        workers=workers if workers is not None else config.workers,
    )
    targets = make_grid_points(region, GranularitySpec(config.sample_granularity))
    antonymy = antonymy_check(grid_n, grid_s, targets, params)
    mono = [
        monotonicity_check(grid_n, "lat", "increasing"),
        monotonicity_check(grid_s, "lat", "decreasing"),
    ]
    for rep in [xval, antonymy, *mono]:
        rep.check()

    store.write_model(dpath, "xval.json", xval)
    store.write_model(dpath, "antonymy.json", antonymy)
    store.write_model(dpath, "monotonicity_north.json", mono[0])
    store.write_model(dpath, "monotonicity_south.json", mono[1])

    labels = xval.mean_matrix.labels
    summary = {
        "format_version": 1,
        "seed": seed,
        "responses": responses,
        "jitter": jitter,
        "grids": [describe_grid(g).model_dump() for g in (grid_n, grid_s)],
        "diagonal": {label: xval.mean_matrix.fractions[i][i] for i, label in enumerate(labels)},
        "metrics": xval.metrics.model_dump(),
        "tie_count": xval.tie_count,
        "antonymy_mean_abs_diff": antonymy.mean_abs_diff,
        "monotonicity_violations": {m.descriptor: len(m.violations) for m in mono},
    }
    store.write_text(dpath, "run.json", json.dumps(summary, indent=2))
    store.write_text(dpath, "report.md", markdown_report(summary, xval, antonymy, mono))
    logger.success("Run finished | out={} | diagonal={}", dpath, summary["diagonal"])
    summary["out_dir"] = str(dpath)
    return summary
