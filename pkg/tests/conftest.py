from __future__ import annotations
import pytest
from loguru import logger

from dataset import RegionBoundary, SynthModel, demo_region, synth_responses
from geometry import SimplePolygon


@pytest.fixture(autouse=True)
def _quiet_env(monkeypatch, tmp_path):
    monkeypatch.setenv("FUZZYGEO_LOG_LEVEL", "WARNING")
    monkeypatch.setenv("FUZZYGEO_REPORTS_DIR", str(tmp_path / "reports"))
    logger.remove()
    yield
    logger.remove()


def rect(x0, y0, x1, y1) -> SimplePolygon:
    return SimplePolygon.from_coords([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


@pytest.fixture
def unit_square() -> RegionBoundary:
    return RegionBoundary(rect(0, 0, 1, 1))


@pytest.fixture
def l_region() -> RegionBoundary:
    # 100x100 box without its upper-right quadrant; lattice spacings are whole numbers
    return RegionBoundary(SimplePolygon.from_coords([
        (-50, -50), (50, -50), (50, -0.5), (-0.5, -0.5), (-0.5, 50), (-50, 50),
    ]))


@pytest.fixture
def region() -> RegionBoundary:
    return demo_region()


@pytest.fixture
def north_south(region):
    model = SynthModel(seed=11)
    return (synth_responses(region, "north", model, 98),
            synth_responses(region, "south", model.complement(), 98))
