from dataclasses import fields, replace

import numpy as np
import pytest

import fenelab as fl
from fenelab import cli, config
from fenelab.errors import InvalidParameterError


def tiny_config(**kw):
    base = dict(
        grid_n=32,
        grid_length=8.0 * np.pi,
        degree_max=4,
        dt=0.05,
        t_end=1.0,
        seed=3,
    )
    base.update(kw)
    return fl.RunConfig(**base)


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        tiny_config(dt=0.0)
    with pytest.raises(InvalidParameterError):
        tiny_config(amplitude=-1.0)
    with pytest.raises(InvalidParameterError):
        tiny_config(k=-2.0)
    with pytest.raises(InvalidParameterError):
        tiny_config(threads=0)


def test_config_roundtrip(tmp_path):
    cfg = tiny_config(amplitude=0.0123, c_d=(2.5, 5.0), lp=(4, 6), advection=False)
    path = tmp_path / "run.ini"
    config.save_config(cfg, path)
    loaded = config.load_config(path)
    for f in fields(fl.RunConfig):
        assert getattr(loaded, f.name) == getattr(cfg, f.name), f.name


def test_initial_data_deterministic(small_grid):
    basis = fl.build_basis(fl.FeneParams(k=2.0, box_length=small_grid.length), 4)
    cfg = tiny_config()
    a = fl.make_initial_data(cfg, small_grid, basis)
    b = fl.make_initial_data(cfg, small_grid, basis)
    assert np.array_equal(a.u_hat, b.u_hat)
    assert np.array_equal(a.g, b.g)
    c = fl.make_initial_data(replace(cfg, seed=4), small_grid, basis)
    assert not np.array_equal(a.u_hat, c.u_hat)


def test_initial_data_scaling_and_constraints(small_grid):
    basis = fl.build_basis(fl.FeneParams(k=2.0, box_length=small_grid.length), 4)
    cfg = tiny_config()
    state = fl.make_initial_data(cfg, small_grid, basis)
    assert fl.surrogate_norm(small_grid, state.u_hat) == pytest.approx(
        cfg.amplitude, rel=1e-12
    )
    div = small_grid.xi[0] * state.u_hat[0] + small_grid.xi[1] * state.u_hat[1]
    assert np.max(np.abs(div)) < 1e-15
    assert np.all(state.g[..., 0] == 0.0)
    psi_l2 = float(np.sqrt(small_grid.dx**2 * np.sum(state.g**2)))
    assert psi_l2 == pytest.approx(0.5 * cfg.amplitude, rel=1e-12)


def test_amplitude_gate(small_grid):
    basis = fl.build_basis(fl.FeneParams(k=2.0, box_length=small_grid.length), 4)
    with pytest.raises(InvalidParameterError):
        fl.make_initial_data(tiny_config(amplitude=0.2), small_grid, basis)
    with pytest.warns(RuntimeWarning):
        fl.make_initial_data(
            tiny_config(amplitude=0.2, allow_large_amplitude=True), small_grid, basis
        )


def test_series_csv_roundtrip(tmp_path):
    rows = [
        {"t": 0.0, "u_l2": 1.25, "lowfreq_Cd3": 0.5, "lp4": 0.75},
        {"t": 0.5, "u_l2": 1.1000000000000001, "lowfreq_Cd3": 0.4, "lp4": 0.7},
    ]
    path = tmp_path / "series.csv"
    config.write_series_csv(rows, path)
    header = path.read_text().splitlines()[0]
    assert header == "t,u_l2,lowfreq_Cd3,lp4"
    cols = config.read_series_csv(path)
    assert np.array_equal(cols["t"], [0.0, 0.5])
    assert cols["u_l2"][1] == 1.1000000000000001  # 17-digit round trip is exact
    with pytest.raises(InvalidParameterError):
        config.write_series_csv([], tmp_path / "empty.csv")


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def test_cli_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        cli.main(["bogus-command"])
    assert exc.value.code == cli.USAGE_EXIT
    with pytest.raises(SystemExit):
        cli.main([])


def test_cli_config_error_exit_code(tmp_path, capsys):
    assert cli.main(["fit", "--series", str(tmp_path / "missing.csv")]) == cli.CONFIG_EXIT
    bad = tmp_path / "bad.ini"
    bad.write_text("[time]\ndt = -1\n")
    assert cli.main(["run", "--config", str(bad)]) == cli.CONFIG_EXIT


def test_cli_run_heat_ref_fit_pipeline(tmp_path, capsys):
    out = tmp_path / "out"
    args = [
        "--grid-n", "32",
        "--grid-length", str(8.0 * np.pi),
        "--dt", "0.05",
        "--t-end", "3.0",
        "--output-dir", str(out),
    ]
    assert cli.main(["run", *args]) == 0
    for name in ("config.ini", "series.csv", "ledger.csv", "final.ckpt"):
        assert (out / name).exists(), name

    assert cli.main(["heat-ref", *args]) == 0
    assert (out / "heat_ref.csv").exists()

    code = cli.main(
        [
            "fit",
            "--series", str(out / "series.csv"),
            "--length", str(8.0 * np.pi),
            "--t1", "0.5",
            "--t2", "3.0",
            "--json", str(out / "report.json"),
        ]
    )
    captured = capsys.readouterr()
    assert "decay report" in captured.out
    assert code in (0, cli.NUMERICAL_EXIT)  # verdicts depend on the tiny box
    assert (out / "report.json").exists()


def test_cli_fit_flags_wrong_exponent(tmp_path):
    t = np.arange(0.0, 40.0, 0.5)
    rows = [{"t": ti, "u_l2": float((1 + ti) ** -3.0)} for ti in t]
    path = tmp_path / "bad_series.csv"
    config.write_series_csv(rows, path)
    code = cli.main(["fit", "--series", str(path), "--t1", "1", "--t2", "39", "--length", "40"])
    assert code == cli.NUMERICAL_EXIT


def test_cli_linear_modes_and_poincare(capsys):
    assert cli.main(["linear-modes", "--num", "3"]) == 0
    out = capsys.readouterr().out
    assert "pairing resid" in out
    assert cli.main(["poincare", "--k", "2", "--degrees", "4,6"]) == 0
    out = capsys.readouterr().out
    assert "lambda_1" in out


def test_cli_verify(capsys):
    assert cli.main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "ALL PASS" in out
