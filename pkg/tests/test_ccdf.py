import warnings

import numpy as np
import pytest

import hftails as hf


def build(values):
    """build_ccdf with the small-sample warning silenced."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", hf.DataWarning)
        return hf.build_ccdf(np.asarray(values, float))


def test_hand_count():
    ccdf = build([-1, 2, -3, 4])
    assert ccdf.sorted_values.tolist() == [1, 2, 3, 4]
    assert ccdf.exceedance(2.5) == 0.5
    assert ccdf.exceedance(1.0) == 1.0


def test_point_mass():
    ccdf = build([3.0] * 50)
    assert ccdf.exceedance(3.0) == 1.0
    assert ccdf.exceedance(3.0 + 1e-9) == 0.0


def test_empty_input_errors():
    with pytest.raises(ValueError):
        hf.build_ccdf(np.empty(0))


def test_small_sample_warns():
    with pytest.warns(hf.DataWarning):
        hf.build_ccdf(np.arange(1, 50, dtype=float))


def test_pareto_closed_form_oracle(pareto3_sample):
    ccdf = hf.build_ccdf(pareto3_sample)
    n = ccdf.n
    for x in (2.0, 4.0, 8.0):
        p_true = x ** -3.0
        band = 3.0 * np.sqrt(p_true * (1 - p_true) / n)
        assert abs(ccdf.exceedance(x) - p_true) < band


def test_tail_points_counting():
    ccdf = build(np.arange(1, 1001, dtype=float))
    with pytest.warns(hf.DataWarning):
        x, p = hf.tail_points(ccdf, 0.01)
    assert x.size == 10
    assert x.tolist() == list(range(991, 1001))
    assert p[-1] == 1 / 1000


def test_tail_points_full_range():
    values = np.array([1.0, 1.0, 2.0, 3.0])
    ccdf = build(values)
    x, p = hf.tail_points(ccdf, 1.0)
    assert x.tolist() == [1.0, 2.0, 3.0]
    assert p.tolist() == [1.0, 0.5, 0.25]


def test_tail_points_pools_duplicated_maximum():
    ccdf = build([1.0, 2.0, 5.0, 5.0])
    with pytest.warns(hf.DataWarning):
        x, p = hf.tail_points(ccdf, 0.25)
    assert x.tolist() == [5.0]
    assert p.tolist() == [0.5]  # both copies pool into the exceedance


def test_ccdf_monotone_and_edges():
    rng = np.random.Generator(np.random.Philox(key=3))
    ccdf = hf.build_ccdf(rng.standard_normal(500))
    x, p, _ = ccdf.distinct_points()
    assert np.all(np.diff(p) < 0)
    assert p[0] == 1.0
    assert ccdf.exceedance(x[-1] + 1e-9) == 0.0


def test_permutation_and_sign_invariance():
    rng = np.random.Generator(np.random.Philox(key=4))
    sample = rng.standard_normal(400)
    a = hf.build_ccdf(sample)
    b = hf.build_ccdf(-sample[::-1])
    assert np.array_equal(a.sorted_values, b.sorted_values)


def test_merge_equals_concatenation():
    rng = np.random.Generator(np.random.Philox(key=5))
    s1, s2 = rng.standard_normal(300), rng.standard_normal(500)
    merged = hf.build_ccdf(s1).merge(hf.build_ccdf(s2))
    direct = hf.build_ccdf(np.concatenate([s1, s2]))
    assert merged.n == direct.n
    assert np.array_equal(merged.sorted_values, direct.sorted_values)


def test_write_text_roundtrip(tmp_path):
    ccdf = build([1.0, 2.0, 2.0, 4.0])
    path = tmp_path / "ccdf.txt"
    ccdf.write_text(path)
    data = np.loadtxt(path)
    assert data.shape == (3, 2)
    assert data[0].tolist() == [4.0, 0.25]  # largest first
