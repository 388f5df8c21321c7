from __future__ import annotations
from typing import Optional, Tuple
import numpy as np
import pandas as pd


class DescriptorError(ValueError):
    """Base class for every input/validation failure of the toolkit."""


class InvariantViolation(RuntimeError):
    """A computed report contradicts its own invariants."""


def abs_diff_stats(a, b) -> Tuple[float, float]:
    """Mean and population std of |a - b| over aligned values."""
    d = (pd.Series(a, dtype="float64") - pd.Series(b, dtype="float64")).abs()
    d = d.replace([np.inf, -np.inf], np.nan).dropna()
    if d.empty:
        return 0.0, 0.0
    return float(d.mean()), float(d.std(ddof=0))


def safe_ratio(num: float, den: float) -> Optional[float]:
    # None marks an undefined metric; never a silent zero
    if den == 0:
        return None
    return float(num / den)
