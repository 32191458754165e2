import numpy as np
import pytest

import fenelab as fl
from fenelab import modes
from fenelab.errors import ContractViolationError


@pytest.mark.parametrize("d", [2, 3])
def test_pairing_residual_exactly_zero(d, basis_k2, basis_k2_d3):
    basis = basis_k2 if d == 2 else basis_k2_d3
    rng = np.random.default_rng(0)
    for _ in range(5):
        xi = rng.standard_normal(d)
        sys = modes.assemble(xi, basis)
        assert sys.pairing_residual() == 0.0


def test_assemble_validation(basis_k2):
    with pytest.raises(ContractViolationError):
        modes.assemble(np.zeros(2), basis_k2)
    with pytest.raises(ContractViolationError):
        modes.assemble(np.ones(3), basis_k2)


def test_operator_shapes(basis_k2, basis_k2_d3):
    sys2 = modes.assemble([1.0, 0.0], basis_k2)
    assert sys2.n_u == 1 and sys2.n_g == basis_k2.size - 1
    assert sys2.operator.shape == (sys2.n_u + sys2.n_g,) * 2
    sys3 = modes.assemble([1.0, 0.0, 0.0], basis_k2_d3)
    assert sys3.n_u == 2
    frame = sys3.u_frame
    assert np.max(np.abs(frame.T @ frame - np.eye(2))) < 1e-14
    assert np.max(np.abs(frame.T @ sys3.xi)) < 1e-14


def test_quadratic_form_is_exact_dissipation(basis_k2):
    """Re <y, A y> = -|xi|^2 |u|^2 - <g, K g> for every state y."""
    sys = modes.assemble([0.7, -0.3], basis_k2)
    k_sub = basis_k2.stiffness[1:, 1:]
    xi_sq = float(sys.xi @ sys.xi)
    rng = np.random.default_rng(1)
    for _ in range(20):
        y = rng.standard_normal(sys.operator.shape[0]) + 1j * rng.standard_normal(
            sys.operator.shape[0]
        )
        lhs = float(np.real(np.vdot(y, sys.operator @ y)))
        uu, gg = y[: sys.n_u], y[sys.n_u :]
        rhs = -xi_sq * float(np.real(np.vdot(uu, uu))) - float(
            np.real(np.vdot(gg, k_sub @ gg))
        )
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_spectral_abscissa_negative_and_vanishing(basis_k2):
    mags = [1.0, 0.5, 0.25, 0.125, 1e-2, 1e-3]
    prev = -np.inf
    for mag in mags:
        sys = modes.assemble([mag, 0.0], basis_k2)
        absc = modes.spectral_abscissa(sys)
        assert absc < 0.0
        assert absc >= prev  # approaches zero monotonically as |xi| -> 0
        # the slow mode is diffusive: rate comparable to |xi|^2
        assert -2.0 * mag**2 <= absc <= -0.5 * mag**2
        prev = absc


def test_lyapunov_check_residual_and_monotonicity(basis_k2):
    rng = np.random.default_rng(2)
    sys = modes.assemble([0.5, 0.25], basis_k2)
    u0 = rng.standard_normal(sys.n_u) + 1j * rng.standard_normal(sys.n_u)
    g0 = rng.standard_normal(sys.n_g) + 1j * rng.standard_normal(sys.n_g)
    out = modes.lyapunov_check(sys, u0, g0, t_end=1.0)
    assert out["monotone"]
    assert out["identity_residual_per_time"] <= 1e-8 * out["energy_initial"]
    assert out["energy_final"] < out["energy_initial"]


def test_lyapunov_decoupled_velocity_mode(basis_k2):
    # with g = 0 initially the coupling feeds energy into g; total energy
    # still decays and never dips below the pure-heat floor of a test run
    sys = modes.assemble([0.25, 0.0], basis_k2)
    out = modes.lyapunov_check(sys, np.array([1.0]), np.zeros(sys.n_g), t_end=1.0)
    assert out["monotone"]
    assert out["energy_final"] > 0.0
