"""Rank-based complementary cumulative distributions of absolute returns.

No histogram binning anywhere: the CCDF is built directly from the sorted
sample with the closed exceedance convention P(|r| >= x), so the largest
observation keeps probability 1/n and log-probabilities stay finite over any
fit region.  Tied values pool into a single (x, P) point for fitting.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._validation import DataWarning, check_sample, freeze

__all__ = ["EmpiricalCCDF", "build_ccdf", "tail_points"]


@dataclass(frozen=True)
class EmpiricalCCDF:
    """Sorted absolute values with rank-based exceedance probabilities."""

    sorted_values: np.ndarray
    n: int

    def __post_init__(self):
        v = np.asarray(self.sorted_values, np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("need a non-empty 1-D sample")
        if v.size != self.n:
            raise ValueError("n must equal the sample size")
        if v[0] < 0:
            raise ValueError("values must be non-negative")
        if np.any(np.diff(v) < 0):
            raise ValueError("values must be sorted ascending")
        object.__setattr__(self, "sorted_values", freeze(v))
        object.__setattr__(self, "n", int(self.n))

    def exceedance(self, x):
        """P(|r| >= x), vectorized; 1 at or below the minimum, 0 past the maximum."""
        x = np.asarray(x, np.float64)
        counts = self.n - np.searchsorted(self.sorted_values, x, side="left")
        return counts / self.n

    def distinct_points(self):
        """Pooled (x, P, exceedance_count) arrays over the distinct values."""
        v = self.sorted_values
        first = np.ones(v.size, bool)
        first[1:] = v[1:] != v[:-1]
        idx = np.flatnonzero(first)
        counts = self.n - idx
        return v[idx], counts / self.n, counts

    def merge(self, other: "EmpiricalCCDF") -> "EmpiricalCCDF":
        """CCDF of the pooled samples; equals rebuilding from concatenation."""
        pooled = np.concatenate([self.sorted_values, other.sorted_values])
        pooled.sort(kind="stable")
        return EmpiricalCCDF(pooled, self.n + other.n)

    def write_text(self, path):
        """Two-column (x, P) dump of the distinct points, largest first."""
        x, p, _ = self.distinct_points()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# x\texceedance_probability\n")
            for xi, pi in zip(x[::-1], p[::-1]):
                fh.write(f"{float(xi)!r}\t{float(pi)!r}\n")


def build_ccdf(returns) -> EmpiricalCCDF:
    """CCDF of absolute values from a ReturnSeries or a raw sample.

    Below 100 observations tail fitting is not meaningful, so a soft warning
    is emitted; empty input is an error.
    """
    values = getattr(returns, "values", returns)
    arr = check_sample(values, "returns")
    if arr.size < 100:
        warnings.warn(f"only {arr.size} returns; tail fits will be unreliable",
                      DataWarning, stacklevel=2)
    sample = np.abs(arr)
    sample.sort(kind="stable")
    return EmpiricalCCDF(sample, sample.size)


def tail_points(ccdf: EmpiricalCCDF, tail_fraction: float):
    """Top ``ceil(tail_fraction * n)`` sample values as pooled distinct points.

    Returns ``(x, p)`` arrays ascending in x.  Fewer than 20 selected values
    draw a soft warning; fewer than 2 distinct points is an error.
    """
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must be in (0, 1]")
    m = math.ceil(tail_fraction * ccdf.n)
    if m < 20:
        warnings.warn(f"tail region holds only {m} values", DataWarning,
                      stacklevel=2)
    x, p, _ = _tail_points_counted(ccdf, m)
    return x, p


def _tail_points_counted(ccdf: EmpiricalCCDF, m: int):
    x, p, counts = ccdf.distinct_points()
    threshold = ccdf.sorted_values[ccdf.n - m]
    keep = x >= threshold  # values tied across the cut pool at their global P
    return x[keep], p[keep], counts[keep]
