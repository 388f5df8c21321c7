import json

import pytest
from click.testing import CliRunner

import main
from dataset import save_grid
from geometry import BoundingBox
from grid_builder import FuzzyGrid, GranularitySpec
from schemas import MonotonicityReport, Violation


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def synth_files(runner, tmp_path):
    region = tmp_path / "region.geojson"
    north, south = tmp_path / "north.geojson", tmp_path / "south.geojson"
    r = runner.invoke(main.cli, ["synth", "--descriptor", "north", "--seed", "11",
                                 "--out", str(north), "--region-out", str(region)])
    assert r.exit_code == 0, r.output
    r = runner.invoke(main.cli, ["synth", "--descriptor", "south", "--side", "low", "--seed", "11",
                                 "--out", str(south)])
    assert r.exit_code == 0, r.output
    return region, north, south


def _build(runner, region, responses, label, out, granularity="5"):
    return runner.invoke(main.cli, ["build", "--region", str(region), "--responses", str(responses),
                                    "--descriptor", label, "--granularity", granularity, "--out", str(out)])


def test_build_eval_export(runner, synth_files, tmp_path):
    region, north, _ = synth_files
    grid_path = tmp_path / "north.json"
    r = _build(runner, region, north, "north", grid_path)
    assert r.exit_code == 0, r.output
    assert "points=" in r.stdout

    doc = json.loads(grid_path.read_text())
    lon, lat, md = doc["points"][len(doc["points"]) // 2]
    args = ["eval", "--grid", str(grid_path), "--lon", repr(lon), "--lat", repr(lat)]
    first, second = runner.invoke(main.cli, args), runner.invoke(main.cli, args)
    assert first.exit_code == 0
    assert first.stdout == second.stdout
    assert float(first.stdout) == pytest.approx(md, abs=1e-10)

    csv = runner.invoke(main.cli, ["export", "--grid", str(grid_path), "--format", "csv"])
    lines = csv.stdout.strip().splitlines()
    assert lines[0] == "lon,lat,md"
    assert len(lines) == len(doc["points"]) + 1

    gj = tmp_path / "north_points.geojson"
    runner.invoke(main.cli, ["export", "--grid", str(grid_path), "--format", "geojson", "--out", str(gj)])
    feats = json.loads(gj.read_text())["features"]
    assert len(feats) == len(doc["points"]) and "md" in feats[0]["properties"]
    assert [f["geometry"]["coordinates"] for f in feats] == [p[:2] for p in doc["points"]]


def test_build_errors_exit_one(runner, synth_files, tmp_path):
    region, north, _ = synth_files
    bad = tmp_path / "bad.geojson"
    bad.write_text(json.dumps({"type": "FeatureCollection", "features": [{
        "type": "Feature", "properties": {"descriptor": "north"},
        "geometry": {"type": "Polygon", "coordinates": [[[0, 0], [1, 1], [1, 0], [0, 1], [0, 0]]]},
    }]}))
    r = _build(runner, region, bad, "north", tmp_path / "g.json")
    assert r.exit_code == 1
    assert "EmptyCorpus" in r.output

    r = _build(runner, region, north, "north", tmp_path / "g.json", granularity="0")
    assert r.exit_code == 1

    r = runner.invoke(main.cli, ["build", "--region", str(region)])
    assert r.exit_code == 1


def test_eval_on_three_point_grid(runner, tmp_path):
    grid = FuzzyGrid.from_arrays("tiny", GranularitySpec(50), BoundingBox(0, 0, 1, 1),
                                 [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.5, 0.0], response_count=1)
    path = tmp_path / "tiny.json"
    path.write_text(save_grid(grid))
    r = runner.invoke(main.cli, ["eval", "--grid", str(path), "--lon", "0.2", "--lat", "0.2"])
    assert r.exit_code == 1
    assert "InsufficientGrid" in r.output


def test_granularity_self_row_is_zero(runner, synth_files, tmp_path):
    region, north, _ = synth_files
    out = tmp_path / "gran.json"
    r = runner.invoke(main.cli, ["granularity", "--region", str(region), "--responses", str(north),
                                 "--descriptor", "north", "--baseline", "10", "--others", "10", "--out", str(out)])
    assert r.exit_code == 0, r.output
    row = json.loads(out.read_text())["rows"][0]
    assert row["mean_abs_diff"] == 0.0 and row["std_abs_diff"] == 0.0
    assert "Grid granularity" in r.stdout


def test_synth_build_xval_pipeline(runner, synth_files, tmp_path):
    region, north, south = synth_files
    out = tmp_path / "xval.json"
    r = runner.invoke(main.cli, ["xval", "--region", str(region),
                                 "--responses", str(north), "--responses", str(south),
                                 "--descriptor", "north", "--descriptor", "south",
                                 "--seed", "11", "--out", str(out)])
    assert r.exit_code == 0, r.output
    report = json.loads(out.read_text())
    fractions = report["mean_matrix"]["fractions"]
    assert fractions[0][0] >= 0.95 and fractions[1][1] >= 0.95
    assert "% Hits north" in r.stdout


def test_antonymy_monotonicity_classify_describe(runner, synth_files, tmp_path):
    region, north, south = synth_files
    gn, gs = tmp_path / "n.json", tmp_path / "s.json"
    assert _build(runner, region, north, "north", gn).exit_code == 0
    assert _build(runner, region, south, "south", gs).exit_code == 0

    r = runner.invoke(main.cli, ["antonymy", "--grid", str(gn), "--grid", str(gs)])
    assert r.exit_code == 0, r.output
    assert float(r.stdout.split()[0].split("=")[1]) <= 1e-9

    r = runner.invoke(main.cli, ["monotonicity", "--grid", str(gs), "--direction", "decreasing"])
    assert r.exit_code == 0 and r.stdout.strip() == "violations=0"

    r = runner.invoke(main.cli, ["classify", "--grid", str(gn), "--grid", str(gs),
                                 "--lon", "-8.0", "--lat", "43.6"])
    assert r.exit_code == 0 and r.stdout.startswith("winner=north")

    r = runner.invoke(main.cli, ["describe", "--grid", str(gn), "--alpha", "1.0"])
    assert r.exit_code == 0 and "core_size" in r.stdout and "alpha_cut(1)=" in r.stdout


def test_invariant_violation_exits_two(runner, synth_files, tmp_path, monkeypatch):
    region, north, _ = synth_files
    gn = tmp_path / "n.json"
    assert _build(runner, region, north, "north", gn).exit_code == 0
    broken = MonotonicityReport(descriptor="north", axis="lat", direction="increasing", violations=[
        Violation(point_a=(0.0, 0.0), point_b=(0.0, 1.0), md_a=0.1, md_b=0.9)])
    monkeypatch.setattr(main, "monotonicity_check", lambda grid, axis, direction: broken)
    r = runner.invoke(main.cli, ["monotonicity", "--grid", str(gn)])
    assert r.exit_code == 2
    assert "InvariantViolation" in r.output


def test_main_returns_exit_code(tmp_path):
    assert main.main(["eval", "--grid", str(tmp_path / "missing.json"), "--lon", "0", "--lat", "0"]) == 1
