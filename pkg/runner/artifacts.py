from __future__ import annotations
import os
from pathlib import Path
from typing import Optional, Union

from loguru import logger
from pydantic import BaseModel


class ArtifactStore:
    """Output directories and writers for run artifacts under ``base_dir``."""

    def __init__(self, base_dir: Union[str, Path] = "reports"):
        self.base_dir = Path(base_dir)
        os.makedirs(self.base_dir, exist_ok=True)

    def path_for_run(self, name: Optional[str] = None, seed: Optional[int] = None) -> Path:
        d = self.base_dir / (name or f"seed-{seed if seed is not None else 'default'}")
        os.makedirs(d, exist_ok=True)
        return d

    def write_text(self, dpath: Union[str, Path], name: str, text: str) -> Path:
        path = Path(dpath) / name
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text if text.endswith("\n") else text + "\n")
        logger.success("Wrote {}", path)
        return path

    def write_model(self, dpath: Union[str, Path], name: str, model: BaseModel) -> Path:
        return self.write_text(dpath, name, model.model_dump_json(indent=2))
