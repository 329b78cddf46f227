import pathlib

import numpy as np
import pytest

import hftails as hf
from hftails.cli import main
from hftails.pipeline import (AssetResult, parse_config_text, render_table,
                              run_from_manifest, run_pipeline)

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def pareto_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("ticks") / "pareto.csv"
    spec = hf.DistSpec("pareto", {"alpha": 3.0, "x_min": 1.0})
    series = hf.synthetic_tick_series(spec, 80_000, 7, intertick_ms=1000)
    hf.write_ticks(series, path, hf.TickFormat(("timestamp", "bid", "ask")))
    return path


def pareto_config(tmp_path, ticks, dt_grid="1,10", extra=""):
    return f"""
[pipeline]
dt_grid = {dt_grid}
tail_fraction = 0.01
seed = 5
out_dir = {tmp_path / 'out'}

[asset:PARETO3]
path = {ticks}
calendar = always
columns = timestamp,bid,ask
{extra}
"""


def test_run_pipeline_recovers_pareto_alpha(tmp_path, pareto_csv):
    config = parse_config_text(pareto_config(tmp_path, pareto_csv))
    bundle = run_pipeline(config)
    res = {(r.label, r.dt): r for r in bundle.results}
    alpha = res[("PARETO3", 1)].fits["power_law"].params["alpha"]
    assert abs(alpha - 3.0) < 0.2
    table = (tmp_path / "out" / "table.txt").read_text()
    assert "PARETO3" in table and f"{alpha:.1f}" in table


def test_run_pipeline_zero_assets_rejected():
    with pytest.raises(ValueError):
        run_pipeline(parse_config_text("[pipeline]\ndt_grid = 1\n"))


def test_config_validation():
    with pytest.raises(ValueError):
        parse_config_text("[pipeline]\ndt_grid = 10,1\n")
    with pytest.raises(ValueError):
        parse_config_text("""
[pipeline]
dt_grid = 1
[asset:A]
path = same.csv
[asset:B]
path = same.csv
""")


def test_rerun_is_byte_identical(tmp_path, pareto_csv):
    import dataclasses

    config = parse_config_text(pareto_config(tmp_path, pareto_csv))
    run_pipeline(dataclasses.replace(config, out_dir=str(tmp_path / "run1")))
    run_pipeline(dataclasses.replace(config, out_dir=str(tmp_path / "run2")))
    d1, d2 = tmp_path / "run1", tmp_path / "run2"
    assert sorted(p.name for p in d1.iterdir()) == \
        sorted(p.name for p in d2.iterdir())
    for p in d1.iterdir():
        assert p.read_bytes() == (d2 / p.name).read_bytes(), p.name


def test_outputs_regenerable_from_manifest(tmp_path, pareto_csv):
    config = parse_config_text(pareto_config(tmp_path, pareto_csv))
    bundle = run_pipeline(config)
    redo = run_from_manifest(tmp_path / "out" / "manifest.txt",
                             str(tmp_path / "redo"))
    for name in bundle.files:
        a = (tmp_path / "out" / name).read_bytes()
        b = (tmp_path / "redo" / name).read_bytes()
        assert a == b, name


def test_excision_adds_nc_variant(tmp_path, pareto_csv):
    text = pareto_config(tmp_path, pareto_csv)
    text = text.replace("seed = 5",
                        "seed = 5\nexcise = 2017-07-14T10:00:00..2017-07-14T16:00:00")
    bundle = run_pipeline(parse_config_text(text))
    labels = {r.label for r in bundle.results}
    assert labels == {"PARETO3", "PARETO3~nC"}
    full = next(r for r in bundle.results if r.label == "PARETO3" and r.dt == 1)
    clipped = next(r for r in bundle.results
                   if r.label == "PARETO3~nC" and r.dt == 1)
    assert clipped.n_returns < full.n_returns


# ---------------------------------------------------------------------------
# table rendering
# ---------------------------------------------------------------------------

def fixture_results(alphas, betas, dts, label="DAX30"):
    out = []
    for dt, a, b in zip(dts, alphas, betas):
        fits = {}
        if a is not None:
            fits["power_law"] = hf.TailFitResult(
                "power_law", {"alpha": a, "log_c": 0.0}, (1.0, 9.0), 50, 0.0, 1.0)
        if b is not None:
            fits["stretched_exp"] = hf.TailFitResult(
                "stretched_exp", {"beta": b, "x0": 1.0}, (0.5, 4.0), 200, 0.0, 1.0)
        out.append(AssetResult(label, dt, 10_000, 0.0, 1.0, fits, None, ""))
    return out


def test_render_table_layout_one_asset_five_dts():
    results = fixture_results([3.5, 3.7, 3.9, 3.7, 2.7],
                              [0.37, 0.64, 0.63, 0.45, 0.38],
                              [1, 10, 60, 600, 3600])
    lines = render_table(results).splitlines()
    assert len(lines) == 3
    assert lines[0].split() == ["asset", "param", "1s", "10s", "1min",
                                "10min", "1h"]
    assert lines[1].split() == ["DAX30", "alpha", "3.5", "3.7", "3.9",
                                "3.7", "2.7"]
    assert lines[2].split() == ["beta", "0.37", "0.64", "0.63", "0.45", "0.38"]


def test_render_table_matches_golden_file():
    results = fixture_results([3.5, 3.7, 3.9, 3.7, 2.7],
                              [0.37, 0.64, 0.63, 0.45, 0.38],
                              [1, 10, 60, 600, 3600])
    golden = (DATA / "golden_table.txt").read_text()
    assert render_table(results) == golden


def test_render_table_missing_beta_marker():
    results = fixture_results([3.5], [None], [60])
    table = render_table(results)
    assert "--" in table.splitlines()[2]


def test_render_table_failed_family_marker():
    results = fixture_results([3.5], [0.4], [60])
    results[0].fits["stretched_exp"] = hf.FitFailure("stretched_exp", "boom")
    assert "--" in render_table(results).splitlines()[2]


# ---------------------------------------------------------------------------
# analyses sections
# ---------------------------------------------------------------------------

def multi_asset_config(tmp_path, section):
    for name, seed in (("a", 1), ("b", 2)):
        path = tmp_path / f"{name}.csv"
        if not path.exists():
            spec = hf.DistSpec("gaussian")
            series = hf.synthetic_tick_series(spec, 20_000, seed,
                                              intertick_ms=1000)
            hf.write_ticks(series, path,
                           hf.TickFormat(("timestamp", "bid", "ask")))
    return f"""
[pipeline]
dt_grid = 10,60
seed = 1
out_dir = {tmp_path / 'out'}

[asset:A]
path = {tmp_path / 'a.csv'}

[asset:B]
path = {tmp_path / 'b.csv'}

{section}
"""


def test_epps_section(tmp_path):
    text = multi_asset_config(tmp_path, "[epps]\nassets = A,B\ndt_grid = 10,60\n")
    bundle = run_pipeline(parse_config_text(text))
    assert "epps.txt" in bundle.files
    data = np.loadtxt(tmp_path / "out" / "epps.txt")
    assert data.shape[0] == 2


def test_rolling_section(tmp_path):
    section = "[rolling]\nassets = A,B\ndt = 10\nwindow_days = 0.2\nstep_days = 0.05\n"
    bundle = run_pipeline(parse_config_text(multi_asset_config(tmp_path, section)))
    assert "rolling.txt" in bundle.files


def test_index_section(tmp_path):
    section = "[index]\nassets = A,B\ndt_grid = 10\n"
    bundle = run_pipeline(parse_config_text(multi_asset_config(tmp_path, section)))
    assert "index.tsv" in bundle.files
    body = (tmp_path / "out" / "index.tsv").read_text()
    assert "INDEX" in body and "power_law" in body


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def test_cli_synth_ingest_resample_fit(tmp_path, capsys):
    ticks = tmp_path / "t.csv"
    assert main(["synth", "--spec", "pareto(alpha=3, x_min=1)", "--ticks",
                 "50000", "--seed", "3", "--out", str(ticks)]) == 0
    assert main(["ingest", "--input", str(ticks)]) == 0
    out = capsys.readouterr().out
    assert "parsed=50000" in out
    assert main(["resample", "--input", str(ticks), "--dt", "1", "10",
                 "--out", str(tmp_path / "rs")]) == 0
    returns_file = tmp_path / "rs" / "returns_ASSET_1s.txt"
    assert returns_file.exists()
    assert main(["fit", "--input", str(returns_file), "--out",
                 str(tmp_path / "fit")]) == 0
    out = capsys.readouterr().out
    assert "power_law" in out and "hill" in out


def test_cli_report_and_exit_codes(tmp_path, capsys, pareto_csv):
    cfg = tmp_path / "cfg.ini"
    cfg.write_text(pareto_config(tmp_path, pareto_csv, dt_grid="10"))
    assert main(["report", "--config", str(cfg)]) == 0
    assert (tmp_path / "out" / "manifest.txt").exists()
    # zero assets -> nonzero exit
    empty = tmp_path / "empty.ini"
    empty.write_text("[pipeline]\ndt_grid = 1\n")
    assert main(["report", "--config", str(empty)]) != 0


def test_cli_epps_requires_section(tmp_path, pareto_csv):
    cfg = tmp_path / "cfg.ini"
    cfg.write_text(pareto_config(tmp_path, pareto_csv))
    assert main(["epps", "--config", str(cfg)]) != 0


def test_cli_out_dir_env_override(tmp_path, monkeypatch, capsys, pareto_csv):
    cfg = tmp_path / "cfg.ini"
    cfg.write_text(pareto_config(tmp_path, pareto_csv, dt_grid="10"))
    monkeypatch.setenv("HFTAILS_OUT", str(tmp_path / "envout"))
    assert main(["report", "--config", str(cfg)]) == 0
    assert (tmp_path / "envout" / "table.txt").exists()


def test_cli_excise_flag(tmp_path, capsys, pareto_csv):
    cfg = tmp_path / "cfg.ini"
    cfg.write_text(pareto_config(tmp_path, pareto_csv, dt_grid="10"))
    assert main(["report", "--config", str(cfg), "--excise",
                 "2017-07-14T10:00:00..2017-07-14T16:00:00", "--out", str(tmp_path / "x")]) == 0
    table = (tmp_path / "x" / "table.txt").read_text()
    assert "PARETO3~nC" in table
