"""Command-line front end.

Subcommands:

  run           integrate the coupled system and write series/ledger/checkpoint
  linear-modes  per-wavenumber pairing residuals and spectral abscissas
  poincare      spectral-gap constants of the configuration operator
  heat-ref      pure-diffusion reference series for the same initial velocity
  fit           decay-exponent report from a series CSV
  verify        run the built-in invariant suite

Exit codes: 0 success, 1 usage error, 2 configuration error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import ball, config as cfgmod, decay, dynamics, flow, modes, verify
from .errors import (
    CflViolationError,
    ContractViolationError,
    DiscretizationFailureError,
    IllConditionedBasisError,
    InstabilityError,
    InvalidParameterError,
    MassInjectionError,
)

USAGE_EXIT = 1
CONFIG_EXIT = 2
NUMERICAL_EXIT = 3

_NUMERICAL_ERRORS = (
    CflViolationError,
    ContractViolationError,
    DiscretizationFailureError,
    IllConditionedBasisError,
    InstabilityError,
    MassInjectionError,
    np.linalg.LinAlgError,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit with code 1, not 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _load_or_default_config(args) -> cfgmod.RunConfig:
    if args.config:
        cfg = cfgmod.load_config(args.config)
    else:
        cfg = cfgmod.RunConfig()
    overrides = {}
    for name in (
        "k",
        "grid_n",
        "grid_length",
        "degree_max",
        "dt",
        "t_end",
        "seed",
        "amplitude",
        "output_dir",
    ):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    return cfg


def _add_override_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file; omitted fields use defaults")
    p.add_argument("--k", type=float, help="spring potential exponent")
    p.add_argument("--grid-n", dest="grid_n", type=int, help="grid points per dimension")
    p.add_argument("--grid-length", dest="grid_length", type=float, help="box side length")
    p.add_argument("--degree-max", dest="degree_max", type=int, help="basis degree cutoff")
    p.add_argument("--dt", type=float, help="time step")
    p.add_argument("--t-end", dest="t_end", type=float, help="final time")
    p.add_argument("--seed", type=int, help="initial-data seed")
    p.add_argument("--amplitude", type=float, help="initial-data amplitude")
    p.add_argument("--output-dir", dest="output_dir", help="directory for outputs")


def _cmd_run(args) -> int:
    cfg = _load_or_default_config(args)
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    grid, basis, solver = cfg.build()
    state0 = cfgmod.make_initial_data(cfg, grid, basis)
    print(
        f"run: N={cfg.grid_n} L={cfg.grid_length:g} k={cfg.k:g} M={basis.size} "
        f"dt={cfg.dt:g} t_end={cfg.t_end:g}"
    )
    result = dynamics.run(
        solver,
        state0,
        cfg.dt,
        cfg.t_end,
        ledger_every=cfg.ledger_every,
        series_every=cfg.series_every,
        snapshot_every=cfg.snapshot_every,
        c_d_list=cfg.c_d,
        lp_list=cfg.lp,
    )
    cfgmod.save_config(cfg, os.path.join(out, "config.ini"))
    cfgmod.write_series_csv(result.series, os.path.join(out, "series.csv"))
    if result.ledger:
        cfgmod.write_series_csv(result.ledger, os.path.join(out, "ledger.csv"))
    dynamics.save_checkpoint(os.path.join(out, "final.ckpt"), grid, result.final)
    worst_cancel = max(
        (abs(r["cancel_resid"]) for r in result.ledger), default=float("nan")
    )
    last = result.series[-1]
    print(
        f"done: t={result.final.t:g} u_l2={last['u_l2']:.6e} "
        f"psi_l2={last['psi_l2']:.6e} max|cancel_resid|={worst_cancel:.3e}"
    )
    print(f"outputs in {out}/")
    return 0


def _cmd_linear_modes(args) -> int:
    from .params import FeneParams

    params = FeneParams(k=args.k, d=args.d)
    basis = ball.build_basis(params, args.degree_max)
    mags = np.geomspace(args.xi_min, args.xi_max, args.num)
    direction = np.zeros(args.d)
    direction[0] = 1.0
    print(f"linear modes: d={args.d} k={args.k:g} degree_max={args.degree_max} M={basis.size}")
    print(f"{'|xi|':>10} {'abscissa':>14} {'pairing resid':>14}")
    worst_pair = 0.0
    worst_absc = -np.inf
    for mag in mags:
        sys_ = modes.assemble(mag * direction, basis)
        absc = modes.spectral_abscissa(sys_)
        pair = sys_.pairing_residual()
        worst_pair = max(worst_pair, pair)
        worst_absc = max(worst_absc, absc)
        print(f"{mag:>10.4f} {absc:>14.6e} {pair:>14.3e}")
    print(f"max abscissa {worst_absc:.6e}, max pairing residual {worst_pair:.3e}")
    if args.lyapunov:
        rng = np.random.default_rng(0)
        sys_ = modes.assemble(args.xi_min * direction, basis)
        u0 = rng.standard_normal(sys_.n_u) + 1j * rng.standard_normal(sys_.n_u)
        g0 = rng.standard_normal(sys_.n_g) + 1j * rng.standard_normal(sys_.n_g)
        chk = modes.lyapunov_check(sys_, u0, g0)
        print(
            f"lyapunov at |xi|={args.xi_min:g}: identity residual/time "
            f"{chk['identity_residual_per_time']:.3e}, monotone={chk['monotone']}"
        )
    return 0 if worst_absc < 0 else NUMERICAL_EXIT


def _cmd_poincare(args) -> int:
    from .params import FeneParams

    ks = [float(v) for v in args.k.split(",")]
    degrees = [int(v) for v in args.degrees.split(",")]
    print(f"{'k':>6} {'degree':>7} {'lambda_1':>12} {'C = 1/lambda_1':>15}")
    import warnings

    for k in ks:
        prev = None
        for deg in degrees:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                basis = ball.build_basis(FeneParams(k=k, d=args.d), deg)
            lam, c = ball.poincare_constant(basis)
            drift = "" if prev is None else f"  (delta C {abs(c - prev):.2e})"
            print(f"{k:>6g} {deg:>7d} {lam:>12.8f} {c:>15.8f}{drift}")
            prev = c
    return 0


def _cmd_heat_ref(args) -> int:
    cfg = _load_or_default_config(args)
    grid = flow.FlowGrid(cfg.grid_n, cfg.grid_length)
    basis = ball.build_basis(cfg.fene_params(), cfg.degree_max, cfg.quad_order)
    state0 = cfgmod.make_initial_data(cfg, grid, basis)
    n_steps = int(round(cfg.t_end / cfg.dt))
    times = np.arange(0, n_steps + 1, cfg.series_every) * cfg.dt
    rows = flow.heat_reference_series(grid, state0.u_hat, times, ps=cfg.lp)
    out = args.output or os.path.join(cfg.output_dir, "heat_ref.csv")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    cfgmod.write_series_csv(rows, out)
    print(f"heat reference series ({len(rows)} rows) written to {out}")
    return 0


def _cmd_fit(args) -> int:
    series = cfgmod.read_series_csv(args.series)
    window = None
    if args.t1 is not None or args.t2 is not None:
        default = decay.default_window(args.length)
        window = (
            args.t1 if args.t1 is not None else default[0],
            args.t2 if args.t2 is not None else default[1],
        )
    if window is None:
        report = decay.decay_report(series, args.d, args.length)
    else:
        report = decay.DecayReport(d=args.d, window=window)
        targets = decay.theoretical_targets(args.d)
        t = series["t"]
        for name, target in targets.items():
            if name == "lowfreq_pre_bootstrap":
                continue
            if name == "lowfreq":
                for col in (c for c in series if c.startswith("lowfreq_Cd")):
                    report.add(col, decay.fit_exponent(t, series[col], window), target, 0.25)
                continue
            if name in series:
                band = decay.DEFAULT_BANDS.get(name, 0.25)
                report.add(name, decay.fit_exponent(t, series[name], window), target, band)
    print(report.table())
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(report.to_dict(), fh, indent=2)
        print(f"report written to {args.json}")
    return 0 if all(e["pass"] for e in report.entries.values()) else NUMERICAL_EXIT


def _cmd_verify(args) -> int:
    ok = verify.run_all_checks()
    print("verify: ALL PASS" if ok else "verify: FAILURES PRESENT")
    return 0 if ok else NUMERICAL_EXIT


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fenelab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate the coupled system")
    _add_override_args(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_lm = sub.add_parser("linear-modes", help="per-wavenumber linear analysis")
    p_lm.add_argument("--k", type=float, default=2.0)
    p_lm.add_argument("--d", type=int, default=2, choices=(2, 3))
    p_lm.add_argument("--degree-max", dest="degree_max", type=int, default=4)
    p_lm.add_argument("--xi-min", dest="xi_min", type=float, default=0.125)
    p_lm.add_argument("--xi-max", dest="xi_max", type=float, default=1.0)
    p_lm.add_argument("--num", type=int, default=7)
    p_lm.add_argument("--lyapunov", action="store_true", help="also run a trajectory check")
    p_lm.set_defaults(func=_cmd_linear_modes)

    p_poi = sub.add_parser("poincare", help="spectral-gap constants")
    p_poi.add_argument("--k", default="0.5,1,2,4", help="comma-separated k values")
    p_poi.add_argument("--d", type=int, default=2, choices=(2, 3))
    p_poi.add_argument("--degrees", default="8,12,16", help="comma-separated degree cutoffs")
    p_poi.set_defaults(func=_cmd_poincare)

    p_heat = sub.add_parser("heat-ref", help="pure-diffusion reference series")
    _add_override_args(p_heat)
    p_heat.add_argument("--output", help="CSV output path (default <output_dir>/heat_ref.csv)")
    p_heat.set_defaults(func=_cmd_heat_ref)

    p_fit = sub.add_parser("fit", help="decay-exponent report from a series CSV")
    p_fit.add_argument("--series", required=True, help="series CSV from a run")
    p_fit.add_argument("--d", type=int, default=2, choices=(2, 3))
    p_fit.add_argument("--length", type=float, default=64.0 * np.pi, help="box side length")
    p_fit.add_argument("--t1", type=float, help="fit window start (default: transient cutoff)")
    p_fit.add_argument("--t2", type=float, help="fit window end (default: saturation time)")
    p_fit.add_argument("--json", help="also dump the report as JSON")
    p_fit.set_defaults(func=_cmd_fit)

    p_ver = sub.add_parser("verify", help="run the built-in invariant suite")
    p_ver.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidParameterError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"fenelab: configuration error: {exc}", file=sys.stderr)
        return CONFIG_EXIT
    except ValueError as exc:
        print(f"fenelab: configuration error: {exc}", file=sys.stderr)
        return CONFIG_EXIT
    except _NUMERICAL_ERRORS as exc:
        print(f"fenelab: numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_EXIT


if __name__ == "__main__":
    raise SystemExit(main())
