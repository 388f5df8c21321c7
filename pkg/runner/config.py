from __future__ import annotations
from dataclasses import dataclass, field
import os
from pathlib import Path
from dotenv import load_dotenv

PROJECT_ROOT = Path(__file__).resolve().parents[1]
load_dotenv(PROJECT_ROOT / ".env", override=False)


def _env(name: str, default: str, cast=str):
    # read at instantiation so tests can monkeypatch the environment
    return field(default_factory=lambda: cast(os.getenv(name, default)))


@dataclass
class Config:
    # Output
    reports_dir: str = _env("FUZZYGEO_REPORTS_DIR", "reports")
    log_level: str = _env("FUZZYGEO_LOG_LEVEL", "INFO")

    # Membership evaluation
    epsilon_km: float = _env("FUZZYGEO_EPSILON_KM", "1e-5", float)

    # Grids
    granularity: float = _env("FUZZYGEO_GRANULARITY", "1.0", float)
    model_granularity: float = _env("FUZZYGEO_MODEL_GRANULARITY", "2.0", float)
    sample_granularity: float = _env("FUZZYGEO_SAMPLE_GRANULARITY", "1.0", float)

    # Cross-validation
    folds: int = _env("FUZZYGEO_FOLDS", "10", int)
    samples: int = _env("FUZZYGEO_SAMPLES", "30", int)
    seed: int = _env("FUZZYGEO_SEED", "11", int)
    workers: int = _env("FUZZYGEO_WORKERS", "1", int)
