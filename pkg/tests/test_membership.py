import numpy as np
import pytest

from geometry import BoundingBox, GeoPoint
from grid_builder import FuzzyGrid, GranularitySpec, build_fuzzy_grid
from membership import (
    DuplicateLabel,
    EvalParams,
    InsufficientGrid,
    classify,
    combine_neighbors,
    evaluate,
    evaluate_many,
    nearest_neighbors,
    pick_winner,
)

SPEC = GranularitySpec(10)
BOX = BoundingBox(-1, -1, 1, 1)


def _grid(lons, lats, md, label="g"):
    return FuzzyGrid.from_arrays(label, SPEC, BOX, lons, lats, md)


def test_reversed_weights_hand_case():
    assert combine_neighbors([1, 2, 3, 4], [1.0, 0.0, 0.0, 0.0], 1e-5) == pytest.approx(0.4, abs=1e-12)


def test_equidistant_neighbours_average_exactly():
    d = 0.1
    grid = _grid([0, -d, d, 0], [-d, 0, 0, d], [1.0, 0.0, 0.5, 0.5])
    assert evaluate(grid, GeoPoint(0, 0)) == 0.5


def test_distances_one_to_four_along_equator():
    d = 0.01
    grid = _grid([d, 2 * d, 3 * d, 4 * d], [0, 0, 0, 0], [1.0, 0.0, 0.0, 0.0])
    assert evaluate(grid, GeoPoint(0, 0)) == pytest.approx(0.4, abs=1e-12)


def test_epsilon_snap_is_bit_exact(region, north_south):
    north, _ = north_south
    grid = build_fuzzy_grid(region, north, GranularitySpec(5))
    for lon, lat, md in grid.points.itertuples(index=False):
        assert evaluate(grid, GeoPoint(lon, lat)) == md


def test_insufficient_grid():
    grid = _grid([0, 0.1, 0.2], [0, 0, 0], [1.0, 0.5, 0.0])
    with pytest.raises(InsufficientGrid):
        evaluate(grid, GeoPoint(0, 0))


def test_eval_params():
    with pytest.raises(ValueError):
        EvalParams(epsilon_km=0)
    with pytest.raises(ValueError):
        EvalParams(neighbor_count=5)


def test_fuzz_range_and_local_bounds():
    rng = np.random.default_rng(2024)
    params = EvalParams()
    for _ in range(100):
        n = int(rng.integers(4, 40))
        lons = np.round(rng.uniform(-1, 1, n), 3)
        lats = np.round(rng.uniform(-1, 1, n), 3)
        keep = ~np.array([(x, y) in set(zip(lons[:i], lats[:i])) for i, (x, y) in enumerate(zip(lons, lats))])
        if keep.sum() < 4:
            continue
        grid = _grid(lons[keep], lats[keep], rng.uniform(0, 1, keep.sum()))
        targets = [GeoPoint(x, y) for x, y in zip(rng.uniform(-1.5, 1.5, 10), rng.uniform(-1.5, 1.5, 10))]
        values = evaluate_many(grid, targets, params)
        for t, v in zip(targets, values):
            _, idx = nearest_neighbors(grid, t.lon, t.lat)
            near = grid.md[idx]
            assert 0.0 <= v <= 1.0
            assert near.min() <= v <= near.max()


def test_batch_matches_single(region, north_south):
    north, _ = north_south
    grid = build_fuzzy_grid(region, north, GranularitySpec(10))
    rng = np.random.default_rng(7)
    pts = [GeoPoint(x, y) for x, y in zip(rng.uniform(-9.3, -6.7, 50), rng.uniform(41.8, 43.8, 50))]
    batch = evaluate_many(grid, pts)
    assert batch.tolist() == [evaluate(grid, p) for p in pts]


def test_pick_winner_and_ties():
    c = pick_winner({"north": 0.9, "south": 0.1})
    assert c.winner == "north" and not c.tied
    t = pick_winner({"south": 0.5, "north": 0.5})
    assert t.winner == "north" and t.tied and t.winning_md == 0.5


def test_argmax_scale_invariance():
    rng = np.random.default_rng(1)
    for _ in range(50):
        scores = dict(zip(["east", "north", "south", "west"], rng.uniform(0, 1, 4)))
        k = float(rng.uniform(0.1, 0.9))
        assert pick_winner({l: v * k for l, v in scores.items()}).winner == pick_winner(scores).winner


def test_classify_deep_north(region, north_south):
    north, south = north_south
    grids = [build_fuzzy_grid(region, rs, GranularitySpec(5)) for rs in (north, south)]
    c = classify(grids, GeoPoint(-8.0, 43.6))
    assert c.winner == "north" and not c.tied
    assert set(c.per_descriptor) == {"north", "south"}
    with pytest.raises(DuplicateLabel):
        classify([grids[0], grids[0]], GeoPoint(-8.0, 43.6))
