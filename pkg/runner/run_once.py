from __future__ import annotations
from .config import Config
from .pipeline import run_once

if __name__ == "__main__":
    summary = run_once(config=Config())
    print("Diagonal hits:", summary.get("diagonal"))
    print("Artifacts saved under", summary.get("out_dir"))
