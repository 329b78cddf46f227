"""Cross-correlation analysis: pairwise Pearson coefficients, matrices,
largest eigenvalue, Epps curves, and rolling-window mean correlation.

Series are aligned by slot time, not positional index, since different assets
have different defined slots.  The zero-return filter drops a time slot when
either member of a pair (or, with mode 'both', only when both members) has a
raw return of exactly zero, targeting stale-price slots.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._validation import DataWarning, freeze
from .sampling import ReturnSeries, log_returns, normalize, sample_prices

__all__ = [
    "CorrelationMatrix",
    "EppsCurve",
    "PowerIterationResult",
    "InsufficientOverlapError",
    "pearson",
    "correlation_matrix",
    "mean_offdiag",
    "largest_eigenvalue",
    "epps_curve",
    "rolling_mean_correlation",
]

MIN_OVERLAP = 30


class InsufficientOverlapError(ValueError):
    """Two series share too few time slots to correlate."""


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric Pearson matrix over an ordered asset set at one dt."""

    asset_ids: tuple
    dt: int
    entries: np.ndarray
    n_missing_pairs: int = 0

    def __post_init__(self):
        m = np.asarray(self.entries, np.float64)
        n = len(self.asset_ids)
        if m.shape != (n, n):
            raise ValueError("entries must be N x N for N asset ids")
        if not np.allclose(m, m.T, atol=1e-12, rtol=0.0):
            raise ValueError("entries must be symmetric to 1e-12")
        if np.any(np.abs(m) > 1.0 + 1e-12):
            raise ValueError("correlations must lie in [-1, 1]")
        if np.any(np.diag(m) != 1.0):
            raise ValueError("diagonal must be exactly 1")
        object.__setattr__(self, "asset_ids", tuple(self.asset_ids))
        object.__setattr__(self, "entries", freeze(m))

    def write_text(self, path):
        """Square grid with a header row of asset ids."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\t".join(("asset",) + self.asset_ids) + "\n")
            for aid, row in zip(self.asset_ids, self.entries):
                fh.write(aid + "\t" + "\t".join(repr(float(v)) for v in row) + "\n")


@dataclass(frozen=True)
class EppsCurve:
    """Mean pairwise correlation (and largest eigenvalue) per sampling interval."""

    dt_grid: tuple
    mean_coeff: tuple
    zero_filtered: bool
    largest_eigenvalues: tuple = ()

    def write_text(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# dt_seconds\tmean_coeff"
                     + ("\tlambda_max" if self.largest_eigenvalues else "") + "\n")
            for i, (dt, c) in enumerate(zip(self.dt_grid, self.mean_coeff)):
                extra = (f"\t{self.largest_eigenvalues[i]!r}"
                         if self.largest_eigenvalues else "")
                fh.write(f"{dt}\t{c!r}{extra}\n")


@dataclass(frozen=True)
class PowerIterationResult:
    value: float
    converged: bool
    n_iter: int
    seed: int


def _aligned_pairs(a: ReturnSeries, b: ReturnSeries, zero_filter, zero_mode):
    if a.dt != b.dt:
        raise ValueError(f"series have different dt: {a.dt} vs {b.dt}")
    if a.slot_times is b.slot_times or np.array_equal(a.slot_times, b.slot_times):
        va, vb = a.values, b.values
        za, zb = a.zero_mask, b.zero_mask
    else:
        _, ia, ib = np.intersect1d(a.slot_times, b.slot_times, assume_unique=True,
                                   return_indices=True)
        va, vb = a.values[ia], b.values[ib]
        za, zb = a.zero_mask[ia], b.zero_mask[ib]
    if zero_filter:
        drop = (za & zb) if zero_mode == "both" else (za | zb)
        va, vb = va[~drop], vb[~drop]
    return va, vb


def pearson(a: ReturnSeries, b: ReturnSeries, zero_filter: bool = False,
            zero_mode: str = "either") -> float:
    """Pearson coefficient over the time-aligned slots of two return series.

    With ``zero_filter`` the slots where either raw return is exactly zero are
    removed first (``zero_mode='both'`` removes only slots where both are
    zero).  Fewer than 30 surviving pairs or zero variance is an error.
    """
    if zero_mode not in ("either", "both"):
        raise ValueError(f"unknown zero_mode {zero_mode!r}")
    va, vb = _aligned_pairs(a, b, zero_filter, zero_mode)
    if va.size < MIN_OVERLAP:
        raise InsufficientOverlapError(
            f"only {va.size} aligned pairs (need {MIN_OVERLAP})")
    va = va - va.mean()
    vb = vb - vb.mean()
    denom = math.sqrt(float(va @ va) * float(vb @ vb))
    if denom == 0.0:
        raise ValueError("zero variance after alignment")
    return float(va @ vb) / denom


def correlation_matrix(series, dt: int | None = None, zero_filter: bool = False,
                       zero_mode: str = "either",
                       max_missing_fraction: float = 0.2) -> CorrelationMatrix:
    """Pairwise Pearson matrix; failed pairs are imputed with 0 and counted.

    More than ``max_missing_fraction`` of the off-diagonal pairs missing is a
    hard failure (the matrix would say more about gaps than correlation).
    """
    series = list(series)
    if len(series) < 2:
        raise ValueError("need at least 2 series")
    if dt is None:
        dt = series[0].dt
    for s in series:
        if s.dt != dt:
            raise ValueError("all series must share dt")
    n = len(series)
    m = np.eye(n)
    missing = 0
    for i in range(n):
        for j in range(i + 1, n):
            try:
                c = pearson(series[i], series[j], zero_filter, zero_mode)
            except (InsufficientOverlapError, ValueError):
                c = 0.0
                missing += 1
            m[i, j] = m[j, i] = c
    total_pairs = n * (n - 1) // 2
    if missing > max_missing_fraction * total_pairs:
        raise ValueError(f"{missing}/{total_pairs} pairs missing; data too sparse")
    return CorrelationMatrix(tuple(s.asset_id for s in series), dt, m, missing)


def mean_offdiag(matrix) -> float:
    """Arithmetic mean of the strictly-lower-triangle entries."""
    m = matrix.entries if isinstance(matrix, CorrelationMatrix) else np.asarray(matrix)
    n = m.shape[0]
    if n < 2:
        raise ValueError("need at least a 2 x 2 matrix")
    idx = np.tril_indices(n, k=-1)
    return float(m[idx].mean())


def largest_eigenvalue(matrix, tol_scale: float = 1e-12, max_iter: int = 100_000,
                       seed: int = 0) -> PowerIterationResult:
    """Dominant (algebraic-largest) eigenvalue by power iteration.

    The iteration runs on a diagonally shifted copy so it cannot lock onto a
    large negative eigenvalue; convergence is declared when successive
    Rayleigh quotients differ by less than ``tol_scale * N``.  The start
    vector is randomized from the recorded ``seed``; non-convergence returns
    the best estimate with ``converged=False``.
    """
    m = matrix.entries if isinstance(matrix, CorrelationMatrix) else np.asarray(
        matrix, np.float64)
    n = m.shape[0]
    if m.shape != (n, n) or not np.allclose(m, m.T, atol=1e-10, rtol=0.0):
        raise ValueError("matrix must be symmetric")
    shift = float(np.abs(m).sum(axis=1).max())  # Gershgorin bound keeps it PSD
    rng = np.random.Generator(np.random.Philox(key=seed))
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam_prev = math.inf
    tol = tol_scale * n
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        w = m @ v + shift * v
        norm = np.linalg.norm(w)
        if norm == 0.0:  # v is in the kernel of the shifted matrix
            return PowerIterationResult(-shift, True, it, seed)
        v = w / norm
        lam = float(v @ (m @ v))
        if abs(lam - lam_prev) < tol:
            converged = True
            lam_prev = lam
            break
        lam_prev = lam
    return PowerIterationResult(float(lam_prev), converged, it, seed)


def epps_curve(tick_series, dt_grid, cal, zero_filter: bool = False,
               zero_mode: str = "either", with_eigenvalues: bool = True,
               seed: int = 0) -> EppsCurve:
    """Mean pairwise correlation as a function of the sampling interval.

    For each dt: resample every asset, compute normalized returns, build the
    correlation matrix, and average the lower triangle.  A dt whose pipeline
    fails is omitted with a warning.
    """
    dt_grid = [int(d) for d in dt_grid]
    if any(b <= a for a, b in zip(dt_grid, dt_grid[1:])):
        raise ValueError("dt_grid must be ascending")
    kept, coeffs, lams = [], [], []
    for dt in dt_grid:
        try:
            rets = [normalize(log_returns(sample_prices(ts, dt, cal)))
                    for ts in tick_series]
            mat = correlation_matrix(rets, dt, zero_filter, zero_mode)
        except (ValueError, InsufficientOverlapError) as exc:
            warnings.warn(f"dt={dt}s omitted from Epps curve: {exc}", DataWarning,
                          stacklevel=2)
            continue
        kept.append(dt)
        coeffs.append(mean_offdiag(mat))
        if with_eigenvalues:
            lams.append(largest_eigenvalue(mat, seed=seed).value)
    return EppsCurve(tuple(kept), tuple(coeffs), bool(zero_filter),
                     tuple(lams) if with_eigenvalues else ())


def rolling_mean_correlation(series, window_seconds: int = 30 * 86400,
                             step_seconds: int = 86400, zero_filter: bool = False,
                             zero_mode: str = "either"):
    """Mean pairwise correlation in a moving window.

    Returns ``(window_end_times_ms, values, n_skipped)``; windows without
    enough overlapping data are skipped and counted.
    """
    series = list(series)
    if len(series) < 2:
        raise ValueError("need at least 2 series")
    t0 = min(int(s.slot_times[0]) for s in series if len(s))
    t1 = max(int(s.slot_times[-1]) for s in series if len(s))
    win = int(window_seconds) * 1000
    step = int(step_seconds) * 1000
    if t1 - t0 < win:
        raise ValueError("total span is shorter than the window")
    win_ends = list(range(t0 + win, t1 + 1, step))
    if win_ends[-1] < t1:  # residual tail gets one final window ending at t1
        win_ends.append(t1)
    ends, values, skipped = [], [], 0
    for end in win_ends:
        try:
            windowed = [_slice_returns(s, end - win, end) for s in series]
            mat = correlation_matrix(windowed, series[0].dt, zero_filter, zero_mode)
            values.append(mean_offdiag(mat))
            ends.append(end)
        except (ValueError, InsufficientOverlapError):
            skipped += 1
    return np.asarray(ends, np.int64), np.asarray(values), skipped


def _slice_returns(s: ReturnSeries, start_ms, end_ms) -> ReturnSeries:
    """Slots with start_ms <= t <= end_ms (window edges are inclusive)."""
    lo = np.searchsorted(s.slot_times, start_ms, side="left")
    hi = np.searchsorted(s.slot_times, end_ms, side="right")
    return ReturnSeries(s.asset_id, s.dt, s.raw_mean, s.raw_std,
                        s.values[lo:hi], s.slot_times[lo:hi], s.zero_mask[lo:hi])
