import warnings

import numpy as np
import pytest

import hftails as hf
from conftest import utc_ms

T0 = utc_ms(2020, 1, 6)


def price_series(values, mask=None, asset="P", dt=60, start=T0):
    values = np.asarray(values, float)
    if mask is None:
        mask = np.ones(values.size, bool)
    return hf.PriceSeries(asset, dt, start, values, np.asarray(mask, bool))


def test_sum_of_constants():
    idx = hf.build_index([price_series([3.0] * 5, asset="A"),
                          price_series([4.0] * 5, asset="B")])
    assert np.all(idx.prices == 7.0)
    assert idx.constituent_ids == ("A", "B")


def test_single_constituent_identity():
    p = price_series([1.0, 2.0, 3.0])
    idx = hf.build_index([p])
    assert np.array_equal(idx.prices, p.prices)
    assert np.array_equal(idx.defined_mask, p.defined_mask)


def test_undefined_slots_intersect():
    a = price_series([1.0, 2.0, 0.0], mask=[True, True, False], asset="A")
    b = price_series([5.0, 0.0, 7.0], mask=[True, False, True], asset="B")
    idx = hf.build_index([a, b])
    assert idx.defined_mask.tolist() == [True, False, False]
    assert idx.prices[0] == 6.0


def test_running_total_oracle(cal_always):
    rng = np.random.Generator(np.random.Philox(key=30))
    constituents = []
    total = np.zeros(2000)
    for i in range(30):
        walk = 50.0 * np.exp(np.cumsum(rng.normal(0, 1e-3, 2000)))
        total += walk
        constituents.append(price_series(walk, asset=f"S{i}"))
    idx = hf.build_index(constituents)
    assert np.max(np.abs(idx.prices - total) / total) < 1e-9


def test_permutation_commutes():
    rng = np.random.Generator(np.random.Philox(key=31))
    cs = [price_series(np.exp(rng.normal(0, 0.1, 100)) + 1, asset=f"S{i}")
          for i in range(10)]
    a = hf.build_index(cs)
    b = hf.build_index(cs[::-1])
    assert np.allclose(a.prices, b.prices, rtol=1e-12)
    assert np.array_equal(a.defined_mask, b.defined_mask)


def test_grid_alignment_required():
    a = price_series([1.0] * 10, asset="A")
    b = price_series([1.0] * 10, asset="B", start=T0 + 1234)
    with pytest.raises(ValueError):
        hf.build_index([a, b])


def test_overlap_window():
    a = price_series(np.arange(1.0, 11.0), asset="A", start=T0)
    b = price_series(np.arange(1.0, 11.0), asset="B", start=T0 + 5 * 60_000)
    idx = hf.build_index([a, b])
    assert len(idx) == 5
    assert idx.grid_start == T0 + 5 * 60_000
    assert idx.prices[0] == 6.0 + 1.0


def _tick_basket(seed, n_assets=5, n=5000, het_scale=False):
    rng = np.random.Generator(np.random.Philox(key=seed))
    ts = T0 + (np.arange(n, dtype=np.int64) + 1) * 1000
    out = []
    for i in range(n_assets):
        scale = 10.0 ** (-4 + (i % 3)) if het_scale else 1e-4
        p = 100.0 * np.exp(np.cumsum(rng.normal(0.0, scale, n)))
        out.append(hf.TickSeries.from_arrays(f"S{i}", ts, bid=p, ask=p))
    return out


def test_index_scale_invariance_of_normalized_returns(cal_always):
    ticks = _tick_basket(32)
    sampled = [hf.sample_prices(t, 10, cal_always) for t in ticks]
    idx = hf.build_index(sampled)
    scaled = hf.build_index([hf.PriceSeries(s.asset_id, s.dt, s.grid_start,
                                            s.prices * 40.0, s.defined_mask)
                             for s in sampled])
    r1 = hf.normalize(hf.log_returns(idx))
    r2 = hf.normalize(hf.log_returns(scaled))
    assert np.allclose(r1.values, r2.values, atol=1e-9)


def test_identical_constituents_match_single_asset(cal_always):
    ticks = _tick_basket(33, n_assets=1)[0]
    sampled = hf.sample_prices(ticks, 10, cal_always)
    many = hf.build_index([sampled] * 7)
    one = hf.normalize(hf.log_returns(sampled))
    agg = hf.normalize(hf.log_returns(many))
    assert np.allclose(agg.values, one.values, atol=1e-9)


def test_independent_gaussians_index_thins_tails(cal_always):
    # heterogeneous per-asset vols: the jointly-normalized pooled raw returns
    # form a scale mixture (heavy-ish), while the index return is one
    # Gaussian, so aggregation thins the fitted tail
    ticks = _tick_basket(34, n_assets=12, n=40_000, het_scale=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", hf.DataWarning)
        fits = hf.index_tail_experiment(ticks, [1], cal_always)
        alpha_index = fits[1]["power_law"].params["alpha"]
        raws = [hf.log_returns(hf.sample_prices(t, 1, cal_always)).values
                for t in ticks]
        pooled = hf.RawReturns("POOL", 1,
                               np.arange(sum(r.size for r in raws), dtype=np.int64),
                               np.concatenate(raws))
        alpha_pooled = hf.fit_power_law(
            hf.build_ccdf(hf.normalize(pooled)), 0.01).params["alpha"]
    assert alpha_index > alpha_pooled


def test_burst_excision_raises_alpha(cal_always):
    rng = np.random.Generator(np.random.Philox(key=35))
    n_assets, n = 10, 60 * 24 * 120  # 120 days of one-minute ticks
    ts = T0 + (np.arange(n, dtype=np.int64) + 1) * 60_000
    b0, b1 = T0 + 50 * 86_400_000, T0 + 71 * 86_400_000  # three-week burst
    in_burst = (ts >= b0) & (ts < b1)
    sigma = np.where(in_burst, 8e-4, 1e-4)
    rho = np.where(in_burst, 0.9, 0.2)
    f = rng.standard_normal(n)
    ticks = []
    for i in range(n_assets):
        inc = sigma * (np.sqrt(rho) * f
                       + np.sqrt(1 - rho) * rng.standard_normal(n))
        p = 100.0 * np.exp(np.cumsum(inc))
        ticks.append(hf.TickSeries.from_arrays(f"S{i}", ts, bid=p, ask=p))
    mask = hf.PeriodMask(((b0, b1),))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", hf.DataWarning)
        full = hf.index_tail_experiment(ticks, [3600], cal_always)
        excised = hf.index_tail_experiment(ticks, [3600], cal_always, mask=mask)
    a_full = full[3600]["power_law"].params["alpha"]
    a_nc = excised[3600]["power_law"].params["alpha"]
    assert a_nc > a_full


def test_tick_vs_return_excision_discrepancy_is_boundary_returns(cal_always):
    ticks = _tick_basket(36, n_assets=3, n=3000)[0:3]
    dt = 10
    a, b = T0 + 500_000, T0 + 900_000
    mask = hf.PeriodMask(((a, b),))
    # canonical path: excise ticks and keep masked grid slots undefined
    tick_path = hf.normalize(hf.log_returns(hf.build_index(
        [hf.sample_prices(hf.excise(t, mask), dt, cal_always, mask)
         for t in ticks])))
    # convenience path: build everything, then drop returns by label
    full = hf.normalize(hf.log_returns(hf.build_index(
        [hf.sample_prices(t, dt, cal_always) for t in ticks])))
    label_path = hf.excise(full, mask)
    only_in_label = np.setdiff1d(label_path.slot_times, tick_path.slot_times)
    # the discrepancy is exactly the returns that END inside the window
    expected = full.slot_times[(full.slot_times < a)
                               & (full.slot_times + dt * 1000 >= a)
                               & (full.slot_times + dt * 1000 < b)]
    assert np.array_equal(only_in_label, expected)
    assert np.setdiff1d(tick_path.slot_times, label_path.slot_times).size == 0
