"""Artificial equal-quote indices: I(t) = sum_i P_i(t) over a constituent set.

The index value is defined only where every constituent is defined, so the
basket composition never silently changes across slots.  Index series run
through the same return/CCDF/fit pipeline as single assets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ccdf import build_ccdf
from .sampling import (PeriodMask, PriceSeries, excise, log_returns, normalize,
                       sample_prices)
from .tailfit import FitConfig, fit_all

__all__ = ["IndexSeries", "build_index", "index_tail_experiment"]


@dataclass(frozen=True)
class IndexSeries(PriceSeries):
    """Price-like series for an equal-quote sum of constituents."""

    constituent_ids: tuple = ()

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "constituent_ids", tuple(self.constituent_ids))


def build_index(constituents) -> IndexSeries:
    """Pointwise quote sum over the slots where every constituent is defined.

    All constituents must share dt and grid phase; the result covers the
    overlap of their grids.
    """
    constituents = list(constituents)
    if not constituents:
        raise ValueError("need at least one constituent")
    dt = constituents[0].dt
    step = dt * 1000
    for c in constituents:
        if c.dt != dt:
            raise ValueError("constituents must share dt")
        if (c.grid_start - constituents[0].grid_start) % step != 0:
            raise ValueError("constituent grids are not aligned")
    start = max(c.grid_start for c in constituents)
    end = min(c.grid_start + (len(c) - 1) * step for c in constituents)
    if end < start:
        raise ValueError("constituent grids do not overlap")
    n = (end - start) // step + 1
    total = np.zeros(n)
    defined = np.ones(n, bool)
    for c in constituents:
        k0 = (start - c.grid_start) // step
        total += c.prices[k0:k0 + n]
        defined &= c.defined_mask[k0:k0 + n]
    total[~defined] = 0.0
    name = "INDEX(" + "+".join(c.asset_id for c in constituents) + ")"
    return IndexSeries(asset_id=name, dt=dt, grid_start=int(start), prices=total,
                       defined_mask=defined,
                       constituent_ids=tuple(c.asset_id for c in constituents))


def index_tail_experiment(constituent_ticks, dt_list, cal,
                          mask: PeriodMask | None = None,
                          config: FitConfig | None = None,
                          price_basis="mid") -> dict:
    """Tail fits of an artificial index per sampling interval.

    Optional excision happens at the tick level, with the masked grid slots
    left undefined so no return forms across an excised boundary; then
    build_index -> log_returns -> normalize -> build_ccdf -> fit_all per dt.
    """
    ticks = list(constituent_ticks)
    if not ticks:
        raise ValueError("need at least one constituent")
    if mask is not None:
        ticks = [excise(ts, mask) for ts in ticks]
    out = {}
    for dt in dt_list:
        sampled = [sample_prices(ts, int(dt), cal, mask, price_basis)
                   for ts in ticks]
        index = build_index(sampled)
        returns = normalize(log_returns(index))
        out[int(dt)] = fit_all(build_ccdf(returns), config)
    return out
