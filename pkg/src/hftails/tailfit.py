"""Tail-model fitting: power law, stretched exponential, and q-Gaussian.

All fits are least squares in log-CCDF space over unbinned rank points.  The
power law fits ``log P = log_c - alpha * log x`` over the far tail; the
stretched exponential fits ``P = exp(-(x/x0)**beta)`` via the linearizing
``log(-log P)`` transform over the distribution body; the q-Gaussian fits the
two-sided exceedance of the density

    g(x) = C(q, b) * [1 + (q-1) * b * x**2] ** (1 / (1 - q)),   1 < q < 3,

by derivative-free simplex descent from a multistart grid.  The CCDF tail
exponent alpha and the q parameter are tied by q = (3 + alpha) / (1 + alpha).

Rank points with fewer than five exceedances are down-weighted by their
exceedance count to damp extreme-order-statistic noise.

Fitters are pure functions of the CCDF; concurrent fits over assets, scales,
and families are safe.  The sklearn-style estimator classes at the bottom
wrap the same functions for pipeline/grid-search composability.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import DataWarning, check_sample
from .ccdf import EmpiricalCCDF, _tail_points_counted, build_ccdf

__all__ = [
    "TailFitResult",
    "TailFitError",
    "FitFailure",
    "FitConfig",
    "HillEstimate",
    "fit_power_law",
    "fit_stretched_exp",
    "fit_q_gaussian",
    "fit_all",
    "hill_estimator",
    "q_gaussian_pdf",
    "alpha_to_q",
    "q_to_alpha",
    "evaluate_log_ccdf",
    "PowerLawTail",
    "StretchedExponentialTail",
    "QGaussianTail",
    "HillTail",
]

FAMILIES = ("power_law", "stretched_exp", "q_gaussian")


class TailFitError(ValueError):
    """A fit region is degenerate or a fitter cannot run at all."""


@dataclass(frozen=True)
class TailFitResult:
    """One fitted model: family, parameters, region, and goodness of fit.

    ``sse`` and ``r_squared`` are computed on the unweighted log-CCDF
    residuals over the fit region.  ``flag`` is None for a clean fit,
    'nonphysical' when the fitted exponent has the wrong sign, 'beta_ge_1'
    for stretched-exponential fits outside the sub-exponential range, and
    'max_evals' when the optimizer hit its evaluation budget.
    """

    family: str
    params: dict
    fit_range: tuple
    n_points: int
    sse: float
    r_squared: float
    flag: str | None = None

    def to_record(self):
        """Flat dict for machine-readable serialization."""
        rec = {"family": self.family}
        rec.update({k: float(v) for k, v in sorted(self.params.items())})
        rec.update(x_min=self.fit_range[0], x_max=self.fit_range[1],
                   n_points=self.n_points, sse=self.sse,
                   r_squared=self.r_squared, flag=self.flag or "")
        return rec


@dataclass(frozen=True)
class FitFailure:
    """Recorded per-family failure inside :func:`fit_all`."""

    family: str
    error: str


@dataclass(frozen=True)
class FitConfig:
    """Fit regions and optimizer controls, all exposed rather than hidden."""

    tail_fraction: float = 0.01
    body_fraction: float = 0.5
    body_floor: float = 1e-4
    weight_cap: int = 5
    q_bounds: tuple = (1.0 + 1e-6, 3.0 - 1e-6)
    q_starts: tuple = (1.2, 1.4, 1.6)
    b_starts: tuple = (0.5, 1.0, 2.0)
    q_max_points: int = 2000
    max_evals: int = 10_000
    xatol: float = 1e-6


@dataclass(frozen=True)
class HillEstimate:
    alpha: float
    stderr: float
    k: int


def _point_weights(counts, cap):
    return np.minimum(counts, cap).astype(np.float64)


def _wls_line(x, y, w):
    """Weighted least-squares line fit; returns (slope, intercept)."""
    sw = w.sum()
    xm = (w * x).sum() / sw
    ym = (w * y).sum() / sw
    dx = x - xm
    sxx = (w * dx * dx).sum()
    if sxx == 0.0:
        raise TailFitError("degenerate fit region: all x equal")
    slope = (w * dx * (y - ym)).sum() / sxx
    return slope, ym - slope * xm


def _gof(y, y_hat):
    resid = y - y_hat
    sse = float(resid @ resid)
    sst = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - sse / sst if sst > 0 else (1.0 if sse == 0 else -math.inf)
    return sse, r2


def fit_power_law(ccdf: EmpiricalCCDF, tail_fraction: float = 0.01,
                  weight_cap: int = 5) -> TailFitResult:
    """OLS of log P against log x over the top ``tail_fraction`` of the sample.

    The CCDF slope is -alpha.  A non-positive fitted alpha is returned with
    the 'nonphysical' flag rather than raised.
    """
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must be in (0, 1]")
    m = math.ceil(tail_fraction * ccdf.n)
    if m < 20:
        warnings.warn(f"power-law region holds only {m} values", DataWarning,
                      stacklevel=2)
    x, p, counts = _tail_points_counted(ccdf, m)
    pos = x > 0
    x, p, counts = x[pos], p[pos], counts[pos]
    if x.size < 2:
        raise TailFitError("degenerate tail region: fewer than 2 positive points")
    lx, lp = np.log(x), np.log(p)
    slope, intercept = _wls_line(lx, lp, _point_weights(counts, weight_cap))
    alpha = -slope
    sse, r2 = _gof(lp, intercept + slope * lx)
    return TailFitResult(
        family="power_law",
        params={"alpha": alpha, "log_c": intercept},
        fit_range=(float(x[0]), float(x[-1])),
        n_points=int(x.size),
        sse=sse,
        r_squared=r2,
        flag=None if alpha > 0 else "nonphysical",
    )


def fit_stretched_exp(ccdf: EmpiricalCCDF, body_fraction: float = 0.5,
                      body_floor: float = 1e-4, weight_cap: int = 5) -> TailFitResult:
    """Least squares of log(-log P) against log x over the distribution body.

    The region keeps the distinct points with ``body_floor <= P <=
    body_fraction`` (P = 1 points cannot enter the transform).  The slope is
    beta and x0 comes from the intercept; beta >= 1 is flagged, not rejected.
    """
    if not 0 < body_fraction < 1:
        raise ValueError("body_fraction must be in (0, 1)")
    x, p, counts = ccdf.distinct_points()
    keep = (p >= body_floor) & (p <= body_fraction) & (x > 0)
    x, p, counts = x[keep], p[keep], counts[keep]
    if x.size < 2:
        raise TailFitError("body region has fewer than 2 usable (P < 1) points")
    if x.size < 20:
        warnings.warn(f"body region holds only {x.size} points", DataWarning,
                      stacklevel=2)
    lx = np.log(x)
    y = np.log(-np.log(p))
    slope, intercept = _wls_line(lx, y, _point_weights(counts, weight_cap))
    beta = slope
    sse, r2 = _gof(y, intercept + slope * lx)
    flag = None
    if beta <= 0:
        flag = "nonphysical"
        x0 = math.nan
    else:
        x0 = math.exp(-intercept / beta)
        if beta >= 1:
            flag = "beta_ge_1"
    return TailFitResult(
        family="stretched_exp",
        params={"beta": beta, "x0": x0},
        fit_range=(float(x[0]), float(x[-1])),
        n_points=int(x.size),
        sse=sse,
        r_squared=r2,
        flag=flag,
    )


def hill_estimator(ccdf: EmpiricalCCDF, k: int) -> HillEstimate:
    """Hill tail-index estimate from the top-k order statistics.

    alpha_hat = k / sum_{i=1..k} log(x_(n-i+1) / x_(n-k)) with ascending order
    statistics; the standard error is alpha_hat / sqrt(k).
    """
    k = int(k)
    n = ccdf.n
    if not 2 <= k < n:
        raise ValueError(f"need 2 <= k < n, got k={k}, n={n}")
    threshold = ccdf.sorted_values[n - k - 1]
    if threshold <= 0:
        raise ValueError("top-k window reaches non-positive values")
    top = ccdf.sorted_values[n - k:]
    denom = float(np.log(top / threshold).sum())
    if denom <= 0:
        raise ValueError("degenerate top-k window (all values equal)")
    alpha = k / denom
    return HillEstimate(alpha=alpha, stderr=alpha / math.sqrt(k), k=k)


# ---------------------------------------------------------------------------
# q-Gaussian density and fitting
# ---------------------------------------------------------------------------

def _log_norm_const(q, b):
    """log of the normalization constant of the q-Gaussian density."""
    if abs(q - 1.0) < 1e-12:
        return 0.5 * (math.log(b) - math.log(math.pi))
    if q > 1:
        m = 1.0 / (q - 1.0)
        return (0.5 * (math.log(q - 1.0) + math.log(b) - math.log(math.pi))
                + gammaln(m) - gammaln(m - 0.5))
    m = 1.0 / (1.0 - q)
    return (0.5 * (math.log(1.0 - q) + math.log(b) - math.log(math.pi))
            + gammaln(m + 1.5) - gammaln(m + 1.0))


def _q_pdf(x, q, b):
    """q-Gaussian density on the internal 0 < q < 3 domain (vectorized)."""
    x = np.asarray(x, np.float64)
    c = math.exp(_log_norm_const(q, b))
    if abs(q - 1.0) < 1e-12:
        return c * np.exp(-b * x * x)
    if q > 1:
        return c * np.exp(np.log1p((q - 1.0) * b * x * x) / (1.0 - q))
    base = 1.0 + (q - 1.0) * b * x * x  # can go negative outside the support
    out = np.zeros_like(base)
    inside = base > 0
    out[inside] = c * base[inside] ** (1.0 / (1.0 - q))
    return out


def q_gaussian_pdf(x, q, b_q):
    """Density of the zero-mean q-Gaussian family for 1 < q < 3, b_q > 0."""
    if not 1 < q < 3:
        raise ValueError(f"q must lie in (1, 3), got {q}")
    if not b_q > 0:
        raise ValueError(f"b_q must be positive, got {b_q}")
    return _q_pdf(x, q, b_q)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _q_abs_ccdf(xs, q, b):
    """Model two-sided exceedance P(|X| >= x) on an ascending grid ``xs``.

    Panel Gauss-Legendre quadrature between consecutive grid points plus an
    adaptive tail integral beyond the last point.
    """
    xs = np.asarray(xs, np.float64)
    if q < 1:
        support = 1.0 / math.sqrt((1.0 - q) * b)
    else:
        support = math.inf
    upper = min(float(xs[-1]), support)
    tail = 0.0
    if upper < support:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            tail, _ = integrate.quad(lambda t: float(_q_pdf(t, q, b)), upper,
                                     support, limit=200)
    if xs.size == 1:
        return np.asarray([min(2.0 * tail, 1.0)])
    a = np.minimum(xs[:-1], support)
    c = np.minimum(xs[1:], support)
    half = 0.5 * (c - a)
    mid = 0.5 * (c + a)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    panel = (half[:, None] * _GL_WEIGHTS[None, :] * _q_pdf(nodes, q, b)).sum(axis=1)
    cum = np.concatenate([np.cumsum(panel[::-1])[::-1], [0.0]])
    return np.minimum(2.0 * (cum + tail), 1.0)


def fit_q_gaussian(ccdf: EmpiricalCCDF, config: FitConfig | None = None) -> TailFitResult:
    """Fit (q, b_q) by simplex descent on squared log-CCDF residuals.

    The model CCDF comes from quadrature of the density; starts cover the
    ``q_starts`` x ``b_starts`` grid and the best multistart wins.  Exhausting
    the evaluation budget returns the best-so-far parameters flagged
    'max_evals' instead of failing.
    """
    cfg = config or FitConfig()
    x, p, counts = ccdf.distinct_points()
    if x.size < 5:
        raise TailFitError("q-Gaussian fit needs at least 5 distinct points")
    if x.size < 50:
        warnings.warn(f"q-Gaussian fit on only {x.size} distinct points",
                      DataWarning, stacklevel=2)
    if x.size > cfg.q_max_points:
        idx = np.unique(np.linspace(0, x.size - 1, cfg.q_max_points).round().astype(int))
        x, p, counts = x[idx], p[idx], counts[idx]
    lp = np.log(p)
    w = _point_weights(counts, cfg.weight_cap)
    q_lo, q_hi = cfg.q_bounds

    def objective(theta):
        q, log_b = theta
        if not (q_lo <= q <= q_hi):
            return math.inf
        b = math.exp(log_b)
        model = _q_abs_ccdf(x, q, b)
        if np.any(model <= 0.0):
            return math.inf
        resid = lp - np.log(model)
        return float((w * resid * resid).sum())

    best = None
    evals_left = cfg.max_evals
    for q0 in cfg.q_starts:
        for b0 in cfg.b_starts:
            if evals_left <= 10:
                break
            res = optimize.minimize(
                objective, np.asarray([min(max(q0, q_lo), q_hi), math.log(b0)]),
                method="Nelder-Mead",
                options={"xatol": cfg.xatol, "fatol": math.inf,
                         "maxfev": evals_left, "disp": False})
            evals_left -= res.nfev
            if math.isfinite(res.fun) and (best is None or res.fun < best.fun):
                best = res
    if best is None or not math.isfinite(best.fun):
        raise TailFitError("q-Gaussian optimizer found no admissible parameters")
    q_hat = float(best.x[0])
    b_hat = float(math.exp(best.x[1]))
    model = _q_abs_ccdf(x, q_hat, b_hat)
    sse, r2 = _gof(lp, np.log(model))
    return TailFitResult(
        family="q_gaussian",
        params={"q": q_hat, "b_q": b_hat},
        fit_range=(float(x[0]), float(x[-1])),
        n_points=int(x.size),
        sse=sse,
        r_squared=r2,
        flag=None if best.success else "max_evals",
    )


def alpha_to_q(alpha: float) -> float:
    """q = (3 + alpha) / (1 + alpha); maps alpha > 0 into (1, 3)."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return (3.0 + alpha) / (1.0 + alpha)


def q_to_alpha(q: float) -> float:
    """alpha = (3 - q) / (q - 1); exact inverse of :func:`alpha_to_q`."""
    if not 1 < q < 3:
        raise ValueError(f"q must lie in (1, 3), got {q}")
    return (3.0 - q) / (q - 1.0)


def fit_all(ccdf: EmpiricalCCDF | None, config: FitConfig | None = None) -> dict:
    """Run the three family fits; per-family failures are recorded, not raised."""
    cfg = config or FitConfig()
    out = {}
    for family, runner in (
        ("power_law", lambda c: fit_power_law(c, cfg.tail_fraction, cfg.weight_cap)),
        ("stretched_exp", lambda c: fit_stretched_exp(c, cfg.body_fraction,
                                                      cfg.body_floor, cfg.weight_cap)),
        ("q_gaussian", lambda c: fit_q_gaussian(c, cfg)),
    ):
        if ccdf is None:
            out[family] = FitFailure(family, "no distribution to fit")
            continue
        try:
            out[family] = runner(ccdf)
        except (TailFitError, ValueError) as exc:
            out[family] = FitFailure(family, str(exc))
    return out


def evaluate_log_ccdf(result: TailFitResult, x) -> np.ndarray:
    """log of the fitted model CCDF at ``x`` (for residuals and plot overlays)."""
    x = np.asarray(x, np.float64)
    if result.family == "power_law":
        return result.params["log_c"] - result.params["alpha"] * np.log(x)
    if result.family == "stretched_exp":
        return -((x / result.params["x0"]) ** result.params["beta"])
    if result.family == "q_gaussian":
        order = np.argsort(x)
        model = np.empty_like(x)
        model[order] = _q_abs_ccdf(x[order], result.params["q"], result.params["b_q"])
        with np.errstate(divide="ignore"):
            return np.log(model)
    raise ValueError(f"unknown family {result.family!r}")


# ---------------------------------------------------------------------------
# sklearn-style estimator wrappers
# ---------------------------------------------------------------------------

def _as_ccdf(X):
    if isinstance(X, EmpiricalCCDF):
        return X
    return build_ccdf(check_sample(X, "X"))


class _TailEstimatorBase(BaseEstimator):
    """Shared fit plumbing: accepts a raw 1-D sample or a prebuilt CCDF."""

    def fit(self, X, y=None):
        ccdf = _as_ccdf(X)
        self.result_ = self._fit_ccdf(ccdf)
        self.n_points_ = self.result_.n_points
        self.sse_ = self.result_.sse
        self.r_squared_ = self.result_.r_squared
        for name, value in self.result_.params.items():
            setattr(self, f"{name}_", value)
        return self

    def _check_fitted(self):
        if not hasattr(self, "result_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet")

    def log_ccdf(self, x):
        """log model CCDF of the fitted tail model at ``x``."""
        self._check_fitted()
        return evaluate_log_ccdf(self.result_, x)


class PowerLawTail(_TailEstimatorBase):
    """Power-law tail estimator; exposes ``alpha_`` after fit."""

    def __init__(self, tail_fraction=0.01, weight_cap=5):
        self.tail_fraction = tail_fraction
        self.weight_cap = weight_cap

    def _fit_ccdf(self, ccdf):
        return fit_power_law(ccdf, self.tail_fraction, self.weight_cap)


class StretchedExponentialTail(_TailEstimatorBase):
    """Stretched-exponential body estimator; exposes ``beta_`` and ``x0_``."""

    def __init__(self, body_fraction=0.5, body_floor=1e-4, weight_cap=5):
        self.body_fraction = body_fraction
        self.body_floor = body_floor
        self.weight_cap = weight_cap

    def _fit_ccdf(self, ccdf):
        return fit_stretched_exp(ccdf, self.body_fraction, self.body_floor,
                                 self.weight_cap)


class QGaussianTail(_TailEstimatorBase):
    """q-Gaussian estimator; exposes ``q_`` and ``b_q_`` after fit."""

    def __init__(self, q_bounds=(1.0 + 1e-6, 3.0 - 1e-6), q_starts=(1.2, 1.4, 1.6),
                 b_starts=(0.5, 1.0, 2.0), q_max_points=2000, max_evals=10_000,
                 xatol=1e-6, weight_cap=5):
        self.q_bounds = q_bounds
        self.q_starts = q_starts
        self.b_starts = b_starts
        self.q_max_points = q_max_points
        self.max_evals = max_evals
        self.xatol = xatol
        self.weight_cap = weight_cap

    def _fit_ccdf(self, ccdf):
        cfg = FitConfig(q_bounds=tuple(self.q_bounds), q_starts=tuple(self.q_starts),
                        b_starts=tuple(self.b_starts), q_max_points=self.q_max_points,
                        max_evals=self.max_evals, xatol=self.xatol,
                        weight_cap=self.weight_cap)
        return fit_q_gaussian(ccdf, cfg)

    @property
    def alpha_(self):
        self._check_fitted()
        return q_to_alpha(self.q_)


class HillTail(BaseEstimator):
    """Hill estimator wrapper; ``k`` may be an int or a fraction of n."""

    def __init__(self, k=0.01):
        self.k = k

    def fit(self, X, y=None):
        ccdf = _as_ccdf(X)
        k = self.k if isinstance(self.k, (int, np.integer)) else max(
            2, int(self.k * ccdf.n))
        est = hill_estimator(ccdf, k)
        self.alpha_ = est.alpha
        self.stderr_ = est.stderr
        self.k_ = est.k
        return self
