"""Command-line interface.

Subcommands mirror the analysis stages so each module is independently
testable from the shell: ingest, resample, fit, epps, rolling, index, synth,
and report.  The output directory can also be overridden with the
HFTAILS_OUT environment variable (the only environment-variable knob).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from .calendars import TradingCalendar, load_calendar
from .ccdf import build_ccdf
from .pipeline import (humanize_dt, load_config, run_from_manifest,
                       run_pipeline)
from .sampling import PeriodMask, log_returns, normalize, sample_prices
from .tailfit import (FitConfig, FitFailure, fit_all, hill_estimator)
from .ticks import TickFormat, parse_ticks, session_filter
from .synth import parse_dist_spec, synthetic_tick_series, write_ticks


def _tick_format(args):
    return TickFormat(tuple(c.strip() for c in args.columns.split(",")),
                      args.delimiter, args.timestamp_unit, not args.no_header)


def _calendar(args):
    if args.calendar:
        return load_calendar(args.calendar)
    return TradingCalendar.always_open()


def _mask(args):
    windows = getattr(args, "excise", None)
    return PeriodMask.from_isoformat(*windows) if windows else None


def _add_format_options(p):
    p.add_argument("--columns", default="timestamp,bid,ask",
                   help="column order in the tick file")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--timestamp-unit", default="ms", choices=["ms", "s", "iso8601"])
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--calendar", default=None, help="calendar file path")


def _out_dir(args):
    out = os.environ.get("HFTAILS_OUT", args.out)
    os.makedirs(out, exist_ok=True)
    return out


def cmd_synth(args):
    spec = parse_dist_spec(args.spec)
    series = synthetic_tick_series(spec, args.ticks, args.seed,
                                   asset_id=args.asset_id,
                                   intertick_ms=args.intertick_ms,
                                   scale=args.scale, spread=args.spread,
                                   poisson=args.poisson)
    fmt = TickFormat(("timestamp", "bid", "ask"), ",", "ms", True)
    write_ticks(series, args.out, fmt)
    print(f"wrote {len(series)} ticks from {args.spec} to {args.out}")
    return 0


def cmd_ingest(args):
    series = parse_ticks(args.input, _tick_format(args), args.asset_id)
    stats = series.parse_stats
    if args.calendar:
        series = session_filter(series, _calendar(args))
    print(f"rows={stats.total_rows} parsed={stats.parsed} "
          f"malformed={stats.malformed} jitter_dropped={stats.jitter_dropped} "
          f"duplicates_replaced={stats.duplicates_replaced} "
          f"in_session={len(series)}")
    if args.out:
        fmt = TickFormat(("timestamp", "bid", "ask", "trade_price"), ",", "ms", True)
        write_ticks(series, args.out, fmt)
        print(f"wrote canonical ticks to {args.out}")
    return 0


def cmd_resample(args):
    series = parse_ticks(args.input, _tick_format(args), args.asset_id)
    cal = _calendar(args)
    series = session_filter(series, cal)
    out = _out_dir(args)
    mask = _mask(args)
    for dt in args.dt:
        prices = sample_prices(series, dt, cal, mask, args.price_basis)
        returns = normalize(log_returns(prices))
        pfile = os.path.join(out, f"prices_{args.asset_id}_{dt}s.txt")
        rfile = os.path.join(out, f"returns_{args.asset_id}_{dt}s.txt")
        prices.write_text(pfile)
        returns.write_text(rfile)
        print(f"dt={humanize_dt(dt)}: {len(returns)} returns "
              f"(mu={returns.raw_mean:.3e}, sigma={returns.raw_std:.3e}) "
              f"-> {rfile}")
    return 0


def cmd_fit(args):
    values = np.loadtxt(args.input, comments="#", ndmin=2)
    sample = values[:, -1]  # accepts (slot_time, value) files or bare columns
    ccdf = build_ccdf(sample)
    cfg = FitConfig(tail_fraction=args.tail_fraction,
                    body_fraction=args.body_fraction)
    fits = fit_all(ccdf, cfg)
    out = _out_dir(args)
    ccdf_path = os.path.join(out, "ccdf.txt")
    ccdf.write_text(ccdf_path)
    for family in sorted(fits):
        res = fits[family]
        if isinstance(res, FitFailure):
            print(f"{family}: failed ({res.error})")
        else:
            params = ", ".join(f"{k}={v:.6g}" for k, v in sorted(res.params.items()))
            print(f"{family}: {params} sse={res.sse:.4g} r2={res.r_squared:.5f}"
                  + (f" [{res.flag}]" if res.flag else ""))
    if ccdf.n >= 200:
        h = hill_estimator(ccdf, max(2, ccdf.n // 100))
        print(f"hill: alpha={h.alpha:.6g} +- {h.stderr:.2g} (k={h.k})")
    print(f"ccdf points -> {ccdf_path}")
    return 0


def _configured(args, **overrides):
    if not args.config:
        raise ValueError(f"{args.command} needs --config")
    config = load_config(args.config)
    updates = {}
    out = os.environ.get("HFTAILS_OUT", args.out)
    if out:
        updates["out_dir"] = out
    if getattr(args, "dt", None):
        updates["dt_grid"] = tuple(args.dt)
    if getattr(args, "tail_fraction", None) is not None:
        updates["fit"] = replace(config.fit, tail_fraction=args.tail_fraction)
    if getattr(args, "zero_filter", None) is not None:
        updates["zero_filter"] = args.zero_filter
    if getattr(args, "excise", None):
        updates["excise_windows"] = tuple(args.excise)
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    updates.update(overrides)
    return replace(config, **updates)


def cmd_report(args):
    if args.from_manifest:
        bundle = run_from_manifest(args.from_manifest, args.out or "out")
    else:
        if not args.config:
            raise ValueError("report needs --config or --from-manifest")
        bundle = run_pipeline(_configured(args))
    print(f"report bundle in {bundle.out_dir} ({len(bundle.files)} files)")
    with open(os.path.join(bundle.out_dir, "table.txt"), encoding="utf-8") as fh:
        print(fh.read(), end="")
    return 0


def _analysis_only(args, section):
    config = _configured(args)
    keep = {"epps": None, "rolling": None, "index": None,
            "per_asset_fits": False}
    keep[section] = getattr(config, section)
    if keep[section] is None:
        raise ValueError(f"config has no [{section}] section")
    return replace(config, **keep)


def cmd_epps(args):
    bundle = run_pipeline(_analysis_only(args, "epps"))
    print(f"epps curve written to {os.path.join(bundle.out_dir, 'epps.txt')}")
    return 0


def cmd_rolling(args):
    bundle = run_pipeline(_analysis_only(args, "rolling"))
    print(f"rolling correlation written to {os.path.join(bundle.out_dir, 'rolling.txt')}")
    return 0


def cmd_index(args):
    bundle = run_pipeline(_analysis_only(args, "index"))
    print(f"index experiment written to {bundle.out_dir}")
    return 0


def _bool(text):
    return text.strip().lower() in ("1", "true", "yes")


def build_parser():
    parser = argparse.ArgumentParser(prog="hftails",
                                     description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic tick file")
    p.add_argument("--spec", required=True, help="e.g. 'pareto(alpha=3, x_min=1)'")
    p.add_argument("--ticks", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--asset-id", default="SYNTH")
    p.add_argument("--intertick-ms", type=int, default=1000)
    p.add_argument("--scale", type=float, default=1e-4)
    p.add_argument("--spread", type=float, default=0.0)
    p.add_argument("--poisson", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="parse and validate a tick file")
    p.add_argument("--input", required=True)
    p.add_argument("--asset-id", default="ASSET")
    p.add_argument("--out", default=None, help="write canonical ticks here")
    _add_format_options(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("resample", help="previous-tick resampling and returns")
    p.add_argument("--input", required=True)
    p.add_argument("--asset-id", default="ASSET")
    p.add_argument("--dt", type=int, nargs="+", default=[1, 10, 60, 600, 3600])
    p.add_argument("--out", default="out")
    p.add_argument("--price-basis", default="mid",
                   choices=["mid", "bid", "ask", "trade"])
    p.add_argument("--excise", action="append", default=[],
                   metavar="START..END")
    _add_format_options(p)
    p.set_defaults(func=cmd_resample)

    p = sub.add_parser("fit", help="fit tail models to a returns/values file")
    p.add_argument("--input", required=True,
                   help="two-column (slot_time, value) or one-column file")
    p.add_argument("--tail-fraction", type=float, default=0.01)
    p.add_argument("--body-fraction", type=float, default=0.5)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_fit)

    for name, fn, helptext in (
            ("epps", cmd_epps, "correlation vs sampling interval"),
            ("rolling", cmd_rolling, "rolling-window mean correlation"),
            ("index", cmd_index, "artificial index tail experiment"),
            ("report", cmd_report, "run the full configured pipeline")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--dt", type=int, nargs="+", default=None)
        p.add_argument("--tail-fraction", type=float, default=None)
        p.add_argument("--zero-filter", type=_bool, default=None,
                       metavar="BOOL")
        p.add_argument("--excise", action="append", default=[],
                       metavar="START..END")
        p.add_argument("--seed", type=int, default=None)
        if name == "report":
            p.add_argument("--from-manifest", default=None)
        else:
            p.set_defaults(from_manifest=None)
        p.set_defaults(func=fn)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
