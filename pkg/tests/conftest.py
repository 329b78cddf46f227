"""Shared fixtures and independent oracles for the test suite."""

import numpy as np
import pytest

import hftails as hf
from hftails.calendars import utc_ms

__all__ = ["utc_ms"]


@pytest.fixture(scope="session")
def cal_always():
    return hf.TradingCalendar.always_open()


@pytest.fixture(scope="session")
def pareto3_sample():
    return hf.generate(hf.DistSpec("pareto", {"alpha": 3.0, "x_min": 1.0}), 10**6, 4243)


@pytest.fixture(scope="session")
def student3_sample():
    return hf.generate(hf.DistSpec("student_t", {"nu": 3.0}), 10**6, 777)


@pytest.fixture(scope="session")
def gaussian_sample():
    return hf.generate(hf.DistSpec("gaussian"), 10**6, 1234)


def exact_power_ccdf(alpha, n):
    """Sample whose rank CCDF hits P = x**-alpha exactly at every point."""
    p = (n - np.arange(n)) / n
    x = p ** (-1.0 / alpha)
    return hf.EmpiricalCCDF(np.sort(x), n)


def exact_stretched_ccdf(beta, n, x0=1.0):
    """Sample whose rank CCDF hits P = exp(-(x/x0)**beta) exactly."""
    p = (n - np.arange(n)) / n
    x = x0 * (-np.log(p)) ** (1.0 / beta)
    return hf.EmpiricalCCDF(np.sort(x), n)


def jacobi_eigenvalues(matrix, sweeps=100, tol=1e-14):
    """Full symmetric eigenspectrum by cyclic Jacobi rotations (test oracle)."""
    a = np.array(matrix, dtype=np.float64)
    n = a.shape[0]
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = 0.5 * np.arctan2(2.0 * a[p, q], a[q, q] - a[p, p])
                c, s = np.cos(theta), np.sin(theta)
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))


def grid_return_series(asset_id, values, dt=60, start=utc_ms(2020, 1, 6),
                       mu=0.0, sigma=1.0):
    """ReturnSeries on an even slot grid for correlation tests."""
    values = np.asarray(values, np.float64)
    slots = start + np.arange(values.size, dtype=np.int64) * (dt * 1000)
    return hf.ReturnSeries(asset_id, dt, mu, sigma, values, slots)
