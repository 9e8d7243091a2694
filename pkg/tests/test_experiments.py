import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hetnet_ee import analytic as an
from hetnet_ee.cli import main
from hetnet_ee.experiments import (ConfigError, Row, SweepSpec, SweepTable, compare_analytic_mc,
                                   get_preset, load_config, parse_config, run_sweep)
from hetnet_ee.experiments.presets import LAMBDA2_GRID, PRESET_NAMES
from hetnet_ee.model import build_params, default_params
from hetnet_ee.montecarlo import SimulationSettings

SMALL_MC = SimulationSettings(trials=200, seed=3)


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

def test_empty_config_gives_defaults(tmp_path):
    path = tmp_path / "empty.cfg"
    path.write_text("", encoding="utf-8")
    params, spec = load_config(path)
    assert params == default_params()
    assert spec is None


def test_config_comments_and_units():
    text = "# scenario\nlambda2_per_km2 = 20   # denser\nbeta_db = 0\n\nb1_db=6\n"
    params, spec, scenario = parse_config(text)
    assert params.tier2.density == pytest.approx(20e-6)
    assert params.cre.power_beta == 1.0
    assert params.cre.bias_b1 == pytest.approx(10 ** 0.6)
    assert scenario == {"lambda2_per_km2": 20.0, "beta_db": 0.0, "b1_db": 6.0}


@pytest.mark.parametrize("text,key,line", [
    ("b2_db = 2.5\nb1_db = 2.4\n", "b1_db", 2),
    ("alpha1 = 2.0\n", "alpha1", 1),
    ("\nfoo = 1\n", "foo", 2),
    ("eta = abc\n", "eta", 1),
    ("eta = 0.2\neta = 0.3\n", "eta", 2),
    ("p1_watts = inf\n", "p1_watts", 1),
])
def test_config_errors_name_line_and_key(text, key, line):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.key == key
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value) and key in str(exc.value)


def test_config_missing_equals():
    with pytest.raises(ConfigError) as exc:
        parse_config("b1_db 10\n")
    assert exc.value.line == 1


def test_config_sweep_keys():
    text = ("b2_db = 2.5\naxis = b1_db\ngrid_start = 2.5\ngrid_stop = 10\ngrid_step = 2.5\n"
            "metrics = sinr, ee\nengines = analytic, mc\ntrials = 1500\nseed = 11\n"
            "window_half_width_m = 8000\nee_threshold_bps_per_w = 5000\n")
    _, spec, _ = parse_config(text)
    assert spec.axis == "b1_db"
    assert spec.grid == (2.5, 5.0, 7.5, 10.0)
    assert spec.metrics == ("sinr", "ee")
    assert spec.mc_settings == SimulationSettings(window_half_width=8000.0, trials=1500, seed=11)
    assert spec.ee_threshold == 5000.0


def test_config_grid_list():
    _, spec, _ = parse_config("axis = lambda2\ngrid_list = 1, 5, 20\n")
    assert spec.grid == (1.0, 5.0, 20.0)


@pytest.mark.parametrize("text,key", [
    ("b1_db = 10\naxis = b1_db\ngrid_list = 5, 10\n", "b1_db"),
    ("axis = b1_db\ngrid_list = 5, 5\n", "grid_list"),
    ("axis = b1_db\ngrid_list = 5, 10, 7\n", "grid_list"),
    ("axis = gamma\ngrid_list = 1\n", "axis"),
    ("axis = threshold\ngrid_list = 1, 2\nmetrics = sinr, ee\n", "metrics"),
    ("axis = eta\ngrid_list = 0.2\nmetrics = power\n", "metrics"),
    ("axis = eta\ngrid_start = 0.2\ngrid_stop = 0.8\ngrid_step = -0.1\n", "grid_step"),
])
def test_sweep_spec_invariants(text, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.key == key


def test_sweep_spec_requires_mc_settings():
    with pytest.raises(ConfigError):
        SweepSpec(axis="eta", grid=(0.2,), engines=("mc",))


# ---------------------------------------------------------------------------
# sweeps and tables
# ---------------------------------------------------------------------------

def test_single_point_grid_one_row_per_metric():
    spec = SweepSpec(axis="eta", grid=(0.5,), metrics=("sinr", "rate", "ee"))
    table = run_sweep(spec)
    assert [(r.metric, r.cls) for r in table] == [("sinr", "overall"), ("rate", "overall"), ("ee", "overall")]


def test_sweep_matches_direct_calls():
    spec = SweepSpec(axis="beta_db", grid=(-10.0, 0.0), metrics=("sinr", "assoc"), sinr_threshold_db=5.0)
    table = run_sweep(spec)
    for beta_db in (-10.0, 0.0):
        p = build_params(beta_db=beta_db)
        (row,) = [r for r in table.select("sinr") if r.axis_value == beta_db]
        assert row.value == an.sinr_coverage_overall(10 ** 0.5, p)
    assoc = table.select("assoc")
    assert len(assoc) == 6 and all(0 <= r.value <= 1 for r in assoc)


def test_per_point_errors_recorded():
    # b2 above b1 at the first grid point, valid afterwards
    spec = SweepSpec(axis="b2_db", grid=(12.0, 2.5), fixed={"b1_db": 10.0}, metrics=("sinr",))
    table = run_sweep(spec)
    first, second = table.rows
    assert first.error and math.isnan(first.value)
    assert second.ok and 0 < second.value < 1


def test_degenerate_class_rows_marked():
    spec = SweepSpec(axis="b1_db", grid=(2.5, 10.0), fixed={"b2_db": 2.5}, metrics=("sinr",), per_class=True)
    table = run_sweep(spec)
    d_rows = table.select("sinr", cls="D")
    assert d_rows[0].error.startswith("degenerate") and d_rows[1].ok
    assert all(r.ok for r in table.select("sinr", cls="overall"))


def test_threshold_axis_rows():
    spec = SweepSpec(axis="threshold", grid=(100.0, 1000.0, 10000.0), metrics=("ee",))
    vals = [r.value for r in run_sweep(spec)]
    assert vals == sorted(vals, reverse=True)


def test_csv_round_trip_bit_exact(tmp_path):
    spec = SweepSpec(axis="eta", grid=(0.2, 0.8), metrics=("sinr", "rate"), per_class=True)
    table = run_sweep(spec)
    table.rows.append(Row("eta", 0.5, "sinr", "overall", "analytic", error="boom, with comma"))
    path = tmp_path / "t.csv"
    text = table.to_csv(path)
    back = SweepTable.from_csv(path)
    assert back.metadata == table.metadata
    for a, b in zip(table.rows, back.rows):
        assert a.axis_value == b.axis_value and a.metric == b.metric and a.error == b.error
        assert (a.value == b.value) or (math.isnan(a.value) and math.isnan(b.value))
    assert SweepTable.from_csv(text).to_csv() == text


@settings(max_examples=200)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_serialisation_round_trip(x):
    row = Row("eta", x, "sinr", "overall", "mc", x, abs(x))
    back = SweepTable.from_csv(SweepTable([row]).to_csv()).rows[0]
    assert back.axis_value == x and back.value == x


def test_csv_header_and_metadata():
    spec = SweepSpec(axis="lambda2", grid=(5.0,), metrics=("ee",), engines=("analytic", "mc"),
                     mc_settings=SMALL_MC)
    text = run_sweep(spec).to_csv()
    lines = text.splitlines()
    assert "axis,axis_value,metric,class,engine,value,ci_half_width,error" in lines
    meta = [l for l in lines if l.startswith("#")]
    assert "# param.lambda2_per_km2: swept" in meta
    assert "# mc.seed: 3" in meta
    assert any(l.startswith("# ee_threshold_unit: bit/s/W") for l in meta)
    mc_row = [l for l in lines if ",mc," in l][0]
    assert mc_row.split(",")[6] != ""
    an_row = [l for l in lines if ",analytic," in l][0]
    assert an_row.split(",")[6] == ""


def test_mc_sweep_deterministic():
    spec = SweepSpec(axis="eta", grid=(0.2, 0.8), metrics=("sinr", "rate"), engines=("mc",),
                     mc_settings=SMALL_MC, per_class=True)
    assert run_sweep(spec).to_csv() == run_sweep(spec).to_csv()


def test_parallel_sweep_matches_serial():
    spec = SweepSpec(axis="eta", grid=(0.2, 0.5, 0.8), metrics=("sinr",), engines=("analytic", "mc"),
                     mc_settings=SMALL_MC)
    assert run_sweep(spec, workers=2).to_csv() == run_sweep(spec).to_csv()


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------

def test_compare_identical_engines_zero_gap():
    spec = SweepSpec(axis="eta", grid=(0.2, 0.8), metrics=("sinr", "ee"))
    table = run_sweep(spec)
    mirrored = SweepTable(table.rows + [Row(r.axis, r.axis_value, r.metric, r.cls, "mc", r.value, 0.0)
                                        for r in table.rows])
    report = compare_analytic_mc(mirrored)
    assert report.passed and report.max_gap() == 0.0
    assert len(report.entries) == 4


def test_compare_no_overlap():
    table = run_sweep(SweepSpec(axis="eta", grid=(0.2,), metrics=("sinr",)))
    with pytest.raises(ValueError):
        compare_analytic_mc(table)


def test_compare_tolerances():
    rows = [Row("eta", 0.2, "sinr", "overall", "analytic", 0.50),
            Row("eta", 0.2, "sinr", "overall", "mc", 0.52, 0.03),   # inside CI
            Row("eta", 0.3, "sinr", "overall", "analytic", 0.50),
            Row("eta", 0.3, "sinr", "overall", "mc", 0.52, 0.005),  # outside both
            Row("eta", 0.2, "rate", "overall", "analytic", 0.50),
            Row("eta", 0.2, "rate", "overall", "mc", 0.54, 0.005)]
    report = compare_analytic_mc(SweepTable(rows))
    status = {(e.axis_value, e.metric): e.status for e in report.entries}
    assert status == {(0.2, "sinr"): "pass", (0.3, "sinr"): "fail", (0.2, "rate"): "known-approximation"}
    strict = compare_analytic_mc(SweepTable(rows), flag_approximations=False)
    assert sum(e.status == "fail" for e in strict.entries) == 2


def test_compare_association_small_run():
    spec = SweepSpec(axis="b1_db", grid=(10.0,), metrics=("assoc",), engines=("analytic", "mc"),
                     mc_settings=SimulationSettings(trials=3000, seed=21))
    report = compare_analytic_mc(run_sweep(spec))
    assert all(e.inside_ci for e in report.entries)


# ---------------------------------------------------------------------------
# presets and CLI
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("name", PRESET_NAMES)
def test_presets_build(name):
    preset = get_preset(name)
    assert preset.headline in preset.series
    for spec in preset.series.values():
        assert spec.engines == ("analytic",)


def test_fig8_grid():
    assert LAMBDA2_GRID[0] == 1.0 and LAMBDA2_GRID[-1] == 50.0
    assert np.all(np.diff(LAMBDA2_GRID) == 1.0)


def test_unknown_preset():
    with pytest.raises(KeyError):
        get_preset("fig9")


def test_cli_assoc(capsys):
    assert main(["assoc", "--set", "b1_db=12"]) == 0
    out = capsys.readouterr().out
    assert "U1" in out and "UDbar" in out


def test_cli_coverage_writes_csv(tmp_path, capsys):
    assert main(["--out", str(tmp_path), "coverage", "--metric", "rate", "--thresholds", "0.5", "1"]) == 0
    table = SweepTable.from_csv(tmp_path / "coverage_rate.csv")
    assert [r.axis_value for r in table] == [0.5, 1.0]


def test_cli_sweep_and_svg(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("axis = eta\ngrid_list = 0.2, 0.8\nmetrics = sinr\n", encoding="utf-8")
    assert main(["--out", str(tmp_path), "--format", "svg", "sweep", "--config", str(cfg)]) == 0
    assert (tmp_path / "s.csv").exists()
    svg = (tmp_path / "s.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg


def test_cli_validate(tmp_path, capsys):
    cfg = tmp_path / "v.cfg"
    cfg.write_text("axis = b1_db\ngrid_list = 10\nmetrics = assoc\ntrials = 3000\nseed = 21\n", encoding="utf-8")
    code = main(["--out", str(tmp_path), "validate", "--config", str(cfg)])
    out = capsys.readouterr().out
    assert "overall: PASS" in out and code == 0


def test_cli_bad_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("b1_db = 1\nb2_db = 3\n", encoding="utf-8")
    assert main(["sweep", "--config", str(cfg)]) == 2
    assert "line 1" in capsys.readouterr().err


def test_cli_figure_seed_determinism(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert main(["--out", str(out), "--seed", "5", "figure", "--preset", "fig3", "--engine", "both",
                     "--trials", "200"]) == 0
    files = sorted(p.name for p in out1.iterdir())
    assert len(files) == 4
    for name in files:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
