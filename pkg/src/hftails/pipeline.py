"""Pipeline orchestration and report emission.

A flat INI-style config describes assets, calendars, sampling grid, fit
regions, and optional correlation/index analyses.  ``run_pipeline`` executes
the whole flow deterministically (results sorted by asset id then dt; a fixed
seed feeds every randomized start) and writes a report bundle: a manifest
with the config hash and package versions, per-asset CCDF point files, a
paper-style text table (alpha to one decimal, beta to two), and a
full-precision machine-readable companion.  Reruns with identical config and
seed produce byte-identical bundles, and every figure-style file can be
regenerated from the manifest alone.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .calendars import TradingCalendar, load_calendar, parse_calendar_text
from .ccdf import build_ccdf
from .correlation import epps_curve, rolling_mean_correlation
from .indexes import index_tail_experiment
from .sampling import (DEFAULT_DT_GRID, PeriodMask, log_returns, normalize,
                       sample_prices)
from .tailfit import (FitConfig, FitFailure, HillEstimate, TailFitResult,
                      fit_all, hill_estimator)
from .ticks import TickFormat, parse_ticks, session_filter

__all__ = [
    "AssetConfig",
    "PipelineConfig",
    "AssetResult",
    "ReportBundle",
    "load_config",
    "parse_config_text",
    "run_pipeline",
    "run_from_manifest",
    "render_table",
]

ABSENT = "--"

_FIT_COLUMNS = ("label", "dt", "family", "alpha", "log_c", "beta", "x0", "q",
                "b_q", "stderr", "k", "x_min", "x_max", "n_points", "sse",
                "r_squared", "flag", "n_returns", "raw_mean", "raw_std")


@dataclass(frozen=True)
class AssetConfig:
    asset_id: str
    path: str
    calendar: str = "always"
    columns: tuple = ("timestamp", "bid", "ask")
    delimiter: str = ","
    timestamp_unit: str = "ms"
    header: bool = True
    price_basis: str = "mid"

    def tick_format(self):
        return TickFormat(self.columns, self.delimiter, self.timestamp_unit,
                          self.header)


@dataclass(frozen=True)
class AnalysisConfig:
    """Optional epps/rolling/index sections."""

    assets: tuple = ()
    dt_grid: tuple = ()
    dt: int = 60
    window_days: float = 30.0
    step_days: float = 1.0
    zero_filter: bool | None = None


@dataclass(frozen=True)
class PipelineConfig:
    assets: tuple = ()
    calendars: dict = field(default_factory=dict)
    dt_grid: tuple = DEFAULT_DT_GRID
    fit: FitConfig = field(default_factory=FitConfig)
    zero_filter: bool = False
    excise_windows: tuple = ()
    out_dir: str = "out"
    seed: int = 0
    epps: AnalysisConfig | None = None
    rolling: AnalysisConfig | None = None
    index: AnalysisConfig | None = None
    write_returns: bool = False
    per_asset_fits: bool = True
    source_text: str = ""

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.dt_grid, self.dt_grid[1:])):
            raise ValueError("dt_grid must be ascending")
        paths = [a.path for a in self.assets]
        if len(set(paths)) != len(paths):
            raise ValueError("asset paths must be distinct")

    def mask(self):
        if not self.excise_windows:
            return None
        return PeriodMask.from_isoformat(*self.excise_windows)


@dataclass(frozen=True)
class AssetResult:
    label: str
    dt: int
    n_returns: int
    raw_mean: float
    raw_std: float
    fits: dict
    hill: HillEstimate | None
    ccdf_file: str


@dataclass(frozen=True)
class ReportBundle:
    out_dir: str
    results: tuple
    files: tuple


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def parse_config_text(text: str) -> PipelineConfig:
    """Parse the flat key-value config grammar (sections per asset)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.read_string(text)

    calendars = {"always": TradingCalendar.always_open()}
    for section in cp.sections():
        if section.startswith("calendar:"):
            name = section.split(":", 1)[1]
            lines = [f"timezone {cp.get(section, 'timezone', fallback='UTC')}"]
            for entry in cp.get(section, "sessions", fallback="").split(";"):
                entry = entry.strip()
                if entry:
                    lines.append("session " + entry)
            for day in cp.get(section, "holidays", fallback="").split(","):
                day = day.strip()
                if day:
                    lines.append("holiday " + day)
            calendars[name] = parse_calendar_text("\n".join(lines))

    assets = []
    for section in sorted(cp.sections()):
        if not section.startswith("asset:"):
            continue
        aid = section.split(":", 1)[1]
        assets.append(AssetConfig(
            asset_id=aid,
            path=cp.get(section, "path"),
            calendar=cp.get(section, "calendar", fallback="always"),
            columns=tuple(c.strip() for c in cp.get(
                section, "columns", fallback="timestamp,bid,ask").split(",")),
            delimiter=cp.get(section, "delimiter", fallback=","),
            timestamp_unit=cp.get(section, "timestamp_unit", fallback="ms"),
            header=cp.getboolean(section, "header", fallback=True),
            price_basis=cp.get(section, "price_basis", fallback="mid"),
        ))

    pl = cp["pipeline"] if cp.has_section("pipeline") else {}

    def get(key, fallback):
        return pl.get(key, fallback) if hasattr(pl, "get") else fallback

    dt_grid = tuple(int(s) for s in str(get("dt_grid", "1,10,60,600,3600")).split(","))
    fit = FitConfig(
        tail_fraction=float(get("tail_fraction", 0.01)),
        body_fraction=float(get("body_fraction", 0.5)),
        body_floor=float(get("body_floor", 1e-4)),
    )
    excise = tuple(w.strip() for w in str(get("excise", "")).split(",") if w.strip())

    def analysis(section, default_zero):
        if not cp.has_section(section):
            return None
        sec = cp[section]
        zf = sec.getboolean("zero_filter", fallback=default_zero)
        return AnalysisConfig(
            assets=tuple(a.strip() for a in sec.get("assets", "").split(",") if a.strip()),
            dt_grid=tuple(int(s) for s in sec.get("dt_grid", "").split(",") if s.strip()),
            dt=int(sec.get("dt", "60")),
            window_days=float(sec.get("window_days", "30")),
            step_days=float(sec.get("step_days", "1")),
            zero_filter=zf,
        )

    zero_filter = str(get("zero_filter", "false")).strip().lower() in ("1", "true", "yes")
    return PipelineConfig(
        assets=tuple(assets),
        calendars=calendars,
        dt_grid=dt_grid,
        fit=fit,
        zero_filter=zero_filter,
        excise_windows=excise,
        out_dir=str(get("out_dir", "out")),
        seed=int(get("seed", 0)),
        epps=analysis("epps", zero_filter),
        rolling=analysis("rolling", False),
        index=analysis("index", False),
        write_returns=str(get("write_returns", "false")).strip().lower()
        in ("1", "true", "yes"),
        source_text=text,
    )


def load_config(path) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def _calendar_for(config: PipelineConfig, name: str) -> TradingCalendar:
    if name in config.calendars:
        return config.calendars[name]
    if os.path.exists(name):
        return load_calendar(name)
    raise ValueError(f"unknown calendar {name!r}")


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def run_pipeline(config: PipelineConfig) -> ReportBundle:
    """Execute the configured analyses and write the report bundle.

    Per-asset failures are isolated and reported in the manifest; an empty
    result set raises so the CLI exits nonzero.
    """
    if not config.assets:
        raise ValueError("config lists no assets")
    out = config.out_dir
    os.makedirs(out, exist_ok=True)
    mask = config.mask()

    ticks_by_id = {}
    errors = []
    for asset in sorted(config.assets, key=lambda a: a.asset_id):
        try:
            cal = _calendar_for(config, asset.calendar)
            series = parse_ticks(asset.path, asset.tick_format(), asset.asset_id)
            ticks_by_id[asset.asset_id] = (session_filter(series, cal), cal, asset)
        except (OSError, ValueError) as exc:
            errors.append(f"{asset.asset_id}: {exc}")

    results = []
    files = []
    if config.per_asset_fits:
        for aid in sorted(ticks_by_id):
            series, cal, asset = ticks_by_id[aid]
            variants = [(aid, None)]
            if mask is not None:
                variants.append((aid + "~nC", mask))
            for label, variant_mask in variants:
                for dt in config.dt_grid:
                    try:
                        res, extra = _analyze_one(label, series, dt, cal,
                                                  variant_mask, config, out,
                                                  asset.price_basis)
                    except ValueError as exc:
                        errors.append(f"{label} dt={dt}: {exc}")
                        continue
                    results.append(res)
                    files.extend(extra)
        if not results:
            raise ValueError("no analyzable assets: " + "; ".join(errors))
        _write(os.path.join(out, "table.txt"), render_table(results))
        _write(os.path.join(out, "fits.tsv"), _fits_tsv(results))
        files.extend(["table.txt", "fits.tsv"])

    files.extend(_run_analyses(config, ticks_by_id, out, mask))
    files = sorted(set(files))
    manifest = _manifest_text(config, files, errors)
    _write(os.path.join(out, "manifest.txt"), manifest)
    return ReportBundle(out, tuple(results), tuple(files))


def _analyze_one(label, series, dt, cal, mask, config, out, price_basis):
    prices = sample_prices(series, dt, cal, mask, price_basis)
    returns = normalize(log_returns(prices))
    ccdf = build_ccdf(returns)
    fits = fit_all(ccdf, config.fit)
    hill = None
    if ccdf.n >= 200:
        hill = hill_estimator(ccdf, max(2, ccdf.n // 100))
    ccdf_file = f"ccdf_{label}_{dt}s.txt"
    ccdf.write_text(os.path.join(out, ccdf_file))
    extra = [ccdf_file]
    if config.write_returns:
        rfile = f"returns_{label}_{dt}s.txt"
        returns.write_text(os.path.join(out, rfile))
        extra.append(rfile)
    return AssetResult(label, dt, len(returns), returns.raw_mean, returns.raw_std,
                       fits, hill, ccdf_file), extra


def _shared_calendar(entries, section):
    cals = {id(e[1]): e[1] for e in entries}
    if len(cals) > 1:
        import warnings

        from ._validation import DataWarning
        warnings.warn(f"[{section}] assets use different calendars; "
                      "the first asset's calendar drives the resampling",
                      DataWarning, stacklevel=3)
    return entries[0][1]


def _run_analyses(config, ticks_by_id, out, mask):
    files = []

    def pick(names):
        chosen = names or tuple(sorted(ticks_by_id))
        missing = [n for n in chosen if n not in ticks_by_id]
        if missing:
            raise ValueError(f"analysis references unknown assets {missing}")
        return [ticks_by_id[n] for n in chosen]

    if config.epps is not None:
        entries = pick(config.epps.assets)
        cal = _shared_calendar(entries, "epps")
        curve = epps_curve([e[0] for e in entries],
                           config.epps.dt_grid or config.dt_grid, cal,
                           zero_filter=bool(config.epps.zero_filter),
                           seed=config.seed)
        curve.write_text(os.path.join(out, "epps.txt"))
        files.append("epps.txt")

    if config.rolling is not None:
        entries = pick(config.rolling.assets)
        dt = config.rolling.dt
        rets = [normalize(log_returns(sample_prices(e[0], dt, e[1])))
                for e in entries]
        ends, values, skipped = rolling_mean_correlation(
            rets, window_seconds=int(config.rolling.window_days * 86400),
            step_seconds=int(config.rolling.step_days * 86400),
            zero_filter=bool(config.rolling.zero_filter))
        path = os.path.join(out, "rolling.txt")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# window_end_ms\tmean_coeff\t(skipped={skipped})\n")
            for t, v in zip(ends, values):
                fh.write(f"{t}\t{float(v)!r}\n")
        files.append("rolling.txt")

    if config.index is not None:
        entries = pick(config.index.assets)
        cal = _shared_calendar(entries, "index")
        dts = config.index.dt_grid or config.dt_grid
        for suffix, m in (("", None),) + ((("~nC", mask),) if mask is not None else ()):
            fit_map = index_tail_experiment([e[0] for e in entries], dts, cal,
                                            mask=m, config=config.fit)
            path = f"index{suffix}.tsv"
            rows = []
            for dt in sorted(fit_map):
                for family in sorted(fit_map[dt]):
                    rec = fit_map[dt][family]
                    rows.append(_record_row(f"INDEX{suffix}", dt, rec, None))
            _write(os.path.join(out, path),
                   "\t".join(_FIT_COLUMNS) + "\n" + "".join(rows))
            files.append(path)

    return files


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def humanize_dt(dt: int) -> str:
    if dt % 3600 == 0:
        return f"{dt // 3600}h"
    if dt % 60 == 0:
        return f"{dt // 60}min"
    return f"{dt}s"


def _fit_param(fits, family, key):
    res = fits.get(family)
    if isinstance(res, TailFitResult):
        return res.params.get(key)
    return None


def render_table(results) -> str:
    """Paper-style table: one asset per block, alpha and beta rows, dt columns."""
    if not results:
        raise ValueError("no results to render")
    dts = sorted({r.dt for r in results})
    labels = sorted({r.label for r in results})
    by_key = {(r.label, r.dt): r for r in results}
    width = max(10, max(len(l) for l in labels) + 2)
    head = "asset".ljust(width) + "param" + "".join(
        humanize_dt(dt).rjust(8) for dt in dts)
    lines = [head]
    for label in labels:
        for param, family, key, fmt in (("alpha", "power_law", "alpha", "{:.1f}"),
                                        ("beta", "stretched_exp", "beta", "{:.2f}")):
            cells = []
            for dt in dts:
                r = by_key.get((label, dt))
                value = _fit_param(r.fits, family, key) if r else None
                cells.append((fmt.format(value) if value is not None else ABSENT)
                             .rjust(8))
            prefix = label.ljust(width) if param == "alpha" else " " * width
            lines.append(prefix + param.ljust(5) + "".join(cells))
    return "\n".join(lines) + "\n"


def _record_row(label, dt, rec, returns_stats):
    cells = {c: "" for c in _FIT_COLUMNS}
    cells.update(label=label, dt=str(dt))
    if isinstance(rec, TailFitResult):
        cells["family"] = rec.family
        for k, v in rec.params.items():
            cells[k] = repr(float(v))
        cells.update(x_min=repr(rec.fit_range[0]), x_max=repr(rec.fit_range[1]),
                     n_points=str(rec.n_points), sse=repr(rec.sse),
                     r_squared=repr(rec.r_squared), flag=rec.flag or "")
    elif isinstance(rec, FitFailure):
        cells["family"] = rec.family
        cells["flag"] = "error: " + rec.error
    elif isinstance(rec, HillEstimate):
        cells.update(family="hill", alpha=repr(rec.alpha), stderr=repr(rec.stderr),
                     k=str(rec.k))
    if returns_stats is not None:
        n, mu, sd = returns_stats
        cells.update(n_returns=str(n), raw_mean=repr(mu), raw_std=repr(sd))
    return "\t".join(cells[c] for c in _FIT_COLUMNS) + "\n"


def _fits_tsv(results) -> str:
    buf = io.StringIO()
    buf.write("\t".join(_FIT_COLUMNS) + "\n")
    for r in sorted(results, key=lambda r: (r.label, r.dt)):
        stats = (r.n_returns, r.raw_mean, r.raw_std)
        for family in sorted(r.fits):
            buf.write(_record_row(r.label, r.dt, r.fits[family], stats))
        if r.hill is not None:
            buf.write(_record_row(r.label, r.dt, r.hill, stats))
    return buf.getvalue()


def _manifest_text(config: PipelineConfig, files, errors) -> str:
    import scipy

    digest = hashlib.sha256(config.source_text.encode("utf-8")).hexdigest()
    lines = [
        "hftails-manifest-v1",
        f"config_sha256 = {digest}",
        f"package_version = {__version__}",
        f"numpy_version = {np.__version__}",
        f"scipy_version = {scipy.__version__}",
        f"seed = {config.seed}",
        "outputs:",
    ]
    lines += [f"  {f}" for f in sorted(files)]
    if errors:
        lines.append("errors:")
        lines += [f"  {e}" for e in errors]
    lines.append("config:")
    lines += ["  | " + line for line in config.source_text.splitlines()]
    return "\n".join(lines) + "\n"


def run_from_manifest(manifest_path, out_dir) -> ReportBundle:
    """Re-run a pipeline from the config embedded in a manifest."""
    with open(manifest_path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    try:
        k = lines.index("config:")
    except ValueError:
        raise ValueError("manifest has no embedded config") from None
    config_text = "\n".join(line[4:] for line in lines[k + 1:]
                            if line.startswith("  | "))
    config = parse_config_text(config_text)
    return run_pipeline(replace(config, out_dir=out_dir, source_text=config_text))


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
