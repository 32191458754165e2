"""Self-contained invariant suite behind the ``verify`` subcommand.

Each check group exercises one structural guarantee (oracle equivalence of
the ball operators, stress-work cancellation, conservation, transform
exactness, fit calibration) at small sizes, so the whole suite runs in
seconds and exits nonzero on any failure.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.special import gamma

from . import ball, decay, dynamics, flow, modes
from .params import FeneParams

__all__ = ["monomial_moment", "oracle_operators", "run_all_checks"]


def monomial_moment(d: int, exponent: float, powers) -> float:
    """Closed form of int_B (1 - |R|^2)^exponent R^powers dR.

    Separates into a radial Beta integral and a sphere moment
    2 prod Gamma((a_i+1)/2) / Gamma((sum a_i + d)/2); zero unless every
    power is even.  Completely independent of the quadrature pipeline.
    """
    powers = tuple(int(p) for p in powers)
    if any(p % 2 for p in powers):
        return 0.0
    total = sum(powers)
    ang = 2.0 * np.prod([gamma((p + 1) / 2.0) for p in powers]) / gamma((total + d) / 2.0)
    # int_0^1 r^(total + d - 1) (1 - r^2)^e dr = B((total + d)/2, e + 1) / 2
    rad = 0.5 * gamma((total + d) / 2.0) * gamma(exponent + 1.0) / gamma(
        (total + d) / 2.0 + exponent + 1.0
    )
    return float(ang * rad)


def _moment_table(d: int, exponent: float, deg: int) -> dict:
    out = {}
    for m in ball.graded_multi_indices(d, deg):
        out[m] = monomial_moment(d, exponent, m)
    return out


def oracle_operators(basis: ball.BallBasis) -> dict:
    """Dense analytic-moment oracle for Gram, K, D and S.

    Works from the exact monomial moments of the weight, i.e. a code path
    sharing nothing with the Gauss-Jacobi quadrature assembly.  Intended
    for degree_max <= 8.
    """
    d = basis.params.d
    k = basis.params.k
    z = ball.equilibrium_mass(d, k)
    mono = basis.monomial_coeffs()  # (n_mono, M) on graded monomial indices
    idx = basis.indices
    m_count = basis.size
    max_deg = 2 * basis.degree_max + 2
    mom_k = _moment_table(d, k, max_deg)
    mom_km1 = _moment_table(d, k - 1.0, max_deg)

    def moment(table, m):
        return table[m]

    # Gram and stiffness via monomial products
    gram = np.zeros((m_count, m_count))
    stiff = np.zeros((m_count, m_count))
    drag = np.zeros((d, d, m_count, m_count))
    for i in range(m_count):
        for j in range(m_count):
            gij = 0.0
            sij = 0.0
            dij = np.zeros((d, d))
            for p, mp in enumerate(idx):
                cp = mono[p, i]
                if cp == 0.0:
                    continue
                for q, mq in enumerate(idx):
                    cq = mono[q, j]
                    if cq == 0.0:
                        continue
                    prod = tuple(a + b for a, b in zip(mp, mq))
                    gij += cp * cq * moment(mom_k, prod)
                    for a in range(d):
                        if mp[a] and mq[a]:
                            dm = list(prod)
                            dm[a] -= 2
                            sij += cp * cq * mp[a] * mq[a] * moment(mom_k, tuple(dm))
                        if mp[a]:
                            for b in range(d):
                                dm = list(prod)
                                dm[a] -= 1
                                dm[b] += 1
                                dij[a, b] += cp * cq * mp[a] * moment(mom_k, tuple(dm))
            gram[i, j] = gij / z
            stiff[i, j] = sij / z
            drag[:, :, i, j] = dij / z
    source = np.zeros((d, d, m_count))
    for i in range(m_count):
        for p, mp in enumerate(idx):
            cp = mono[p, i]
            if cp == 0.0:
                continue
            for a in range(d):
                for b in range(d):
                    m2 = list(mp)
                    m2[a] += 1
                    m2[b] += 1
                    source[a, b, i] += 2.0 * k * cp * moment(mom_km1, tuple(m2)) / z
    return {"gram": gram, "stiffness": stiff, "drag": drag, "source": source}


# ---------------------------------------------------------------------------
# check groups
# ---------------------------------------------------------------------------

def _check_ball_oracles() -> tuple[bool, str]:
    params = FeneParams(k=2.0)
    basis = ball.build_basis(params, degree_max=6, quad_order=16)
    oracle = oracle_operators(basis)
    errs = {
        "gram": np.max(np.abs(oracle["gram"] - np.eye(basis.size))),
        "K": np.max(np.abs(oracle["stiffness"] - basis.stiffness)),
        "D": np.max(np.abs(oracle["drag"] - basis.drag)),
        "S": np.max(np.abs(oracle["source"] - basis.source)),
    }
    worst = max(errs.values())
    return worst < 1e-8, ", ".join(f"{k}={v:.2e}" for k, v in errs.items())

def _check_stress_closed_form() -> tuple[bool, str]:
    results = []
    for k in (0.5, 1.0, 2.0, 4.0):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            basis = ball.build_basis(FeneParams(k=k), degree_max=4)
        pts = basis.evaluate(basis.mass_nodes)
        # coefficients of g = R1 R2 from the quadrature inner product
        g_fun = basis.mass_nodes[:, 0] * basis.mass_nodes[:, 1]
        coeffs = pts.T @ (g_fun * basis.mass_weights / ball.equilibrium_mass(2, k))
        coeffs[0] = 0.0
        tau = ball.stress(basis, coeffs)
        expected = 1.0 / (2.0 * (k + 2.0))
        results.append(abs(tau[0, 1] - expected) / expected)
    worst = max(results)
    return worst < 1e-10, f"max rel err tau12 vs 1/(2(k+2)): {worst:.2e}"


def _check_mode_cancellation() -> tuple[bool, str]:
    worst = 0.0
    for d in (2, 3):
        basis = ball.build_basis(FeneParams(k=2.0, d=d), degree_max=4)
        xi = np.zeros(d)
        xi[0] = 1.0
        xi[-1] = 0.5
        sys = modes.assemble(xi, basis)
        worst = max(worst, sys.pairing_residual())
    return worst <= 1e-12, f"pairing residual {worst:.2e}"


def _check_flow_identities() -> tuple[bool, str]:
    grid = flow.FlowGrid(32, 2.0 * np.pi)
    rng = np.random.default_rng(0)
    u_phys = rng.standard_normal((2, 32, 32))
    u_hat = flow.leray_project(grid, grid.to_spectral(u_phys)) * grid.dealias
    # round trip
    rt = np.max(np.abs(grid.to_spectral(grid.to_physical(u_hat)) - u_hat))
    # projection idempotence
    proj = np.max(np.abs(flow.leray_project(grid, u_hat) - u_hat))
    # skew symmetry of dealiased advection
    f_hat = grid.to_spectral(rng.standard_normal((32, 32))) * grid.dealias
    adv = flow.advect(grid, u_hat, f_hat)
    inner = abs(float(np.sum((adv * np.conj(f_hat)).real)))
    scale = float(np.sum(np.abs(f_hat) ** 2)) + 1e-300
    ok = rt < 1e-13 and proj < 1e-13 and inner / scale < 1e-12
    return ok, f"roundtrip={rt:.2e} projection={proj:.2e} advection skew={inner / scale:.2e}"


def _check_conservation_short_run() -> tuple[bool, str]:
    import fenelab.config as cfgmod

    cfg = cfgmod.RunConfig(
        grid_n=32, grid_length=8.0 * np.pi, degree_max=4, dt=0.02, t_end=2.0, seed=3
    )
    grid, basis, solver = cfg.build()
    state = cfgmod.make_initial_data(cfg, grid, basis)
    result = dynamics.run(solver, state, cfg.dt, cfg.t_end, ledger_every=10)
    mass = float(np.max(np.abs(result.final.g[..., 0])))
    div = float(
        np.max(
            np.abs(
                grid.xi[0] * result.final.u_hat[0] + grid.xi[1] * result.final.u_hat[1]
            )
        )
    )
    cancel_ok = all(
        abs(row["cancel_resid"])
        <= 1e-10 * (abs(row["W_stress"]) + abs(row["W_source"]) + np.finfo(float).eps)
        for row in result.ledger
    )
    ok = mass == 0.0 and div < 1e-13 and cancel_ok
    return ok, f"mass={mass:.1e} div={div:.1e} cancellation={'ok' if cancel_ok else 'FAIL'}"


def _check_fit_calibration() -> tuple[bool, str]:
    t = np.linspace(1.0, 100.0, 400)
    fit = decay.fit_exponent(t, 5.0 * (1.0 + t) ** -0.5, (1.0, 100.0))
    err = abs(fit.exponent + 0.5)
    return err < 1e-9, f"synthetic power-law exponent error {err:.1e}"


CHECKS = [
    ("ball operator oracle equivalence", _check_ball_oracles),
    ("stress closed form", _check_stress_closed_form),
    ("mode coupling cancellation (d=2,3)", _check_mode_cancellation),
    ("flow transform identities", _check_flow_identities),
    ("conservation and cancellation in a coupled run", _check_conservation_short_run),
    ("decay fit calibration", _check_fit_calibration),
]


def run_all_checks(printer=print) -> bool:
    all_ok = True
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a check crashing is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        all_ok &= ok
        printer(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return all_ok
