import numpy as np
import pytest

import fenelab as fl
from fenelab import flow
from fenelab.errors import ContractViolationError, InvalidParameterError

from conftest import random_div_free


def test_grid_validation():
    with pytest.raises(InvalidParameterError):
        fl.FlowGrid(20, 1.0)  # not a power of two
    with pytest.raises(InvalidParameterError):
        fl.FlowGrid(8, 1.0)  # too small
    with pytest.raises(InvalidParameterError):
        fl.FlowGrid(32, 0.0)


def test_transform_roundtrip(small_grid):
    rng = np.random.default_rng(0)
    f = rng.standard_normal((small_grid.n, small_grid.n))
    assert np.max(np.abs(small_grid.to_physical(small_grid.to_spectral(f)) - f)) < 1e-12


def test_plancherel(small_grid):
    rng = np.random.default_rng(1)
    f = rng.standard_normal((small_grid.n, small_grid.n))
    f_hat = small_grid.to_spectral(f)
    phys = small_grid.dx**2 * np.sum(f**2)
    spec = small_grid.length**2 * np.sum(np.abs(f_hat) ** 2)
    assert spec == pytest.approx(phys, rel=1e-12)


def test_leray_idempotent_and_divergence_free(small_grid):
    u_hat = random_div_free(small_grid, seed=2)
    again = fl.leray_project(small_grid, u_hat)
    assert np.max(np.abs(again - u_hat)) < 1e-14
    div = small_grid.xi[0] * u_hat[0] + small_grid.xi[1] * u_hat[1]
    assert np.max(np.abs(div)) < 1e-14


def test_leray_annihilates_gradients(small_grid):
    rng = np.random.default_rng(3)
    phi_hat = small_grid.to_spectral(rng.standard_normal((small_grid.n, small_grid.n)))
    grad_hat = small_grid.grad_spectral(phi_hat)
    proj = fl.leray_project(small_grid, grad_hat)
    assert np.max(np.abs(proj)) < 1e-13 * np.max(np.abs(grad_hat))


def test_advect_matches_convolution_oracle():
    """Dealiased pseudo-spectral product == true (linear) convolution.

    With the 2/3 mask, every aliased term p + q = k -+ N of the collocation
    product lands outside the kept modes, so on the mask the result must be
    the exact convolution sum  sum_{p+q=k} (i q . u_hat(p)) f_hat(q).
    """
    n = 16
    grid = fl.FlowGrid(n, 2.0 * np.pi)
    u_hat = random_div_free(grid, seed=4) * grid.dealias
    rng = np.random.default_rng(5)
    f_hat = grid.to_spectral(rng.standard_normal((n, n))) * grid.dealias

    result = flow.advect(grid, u_hat, f_hat)

    cut = n // 3
    modes = range(-cut, cut + 1)
    scale = 2.0 * np.pi / grid.length
    oracle = np.zeros((n, n), dtype=complex)
    for kx in modes:
        for ky in modes:
            acc = 0.0
            for px in modes:
                for py in modes:
                    qx, qy = kx - px, ky - py
                    if abs(qx) > cut or abs(qy) > cut:
                        continue
                    xi_q = scale * np.array([qx, qy])
                    up = u_hat[:, px % n, py % n]
                    fq = f_hat[qx % n, qy % n]
                    acc = acc + (1j * (up[0] * xi_q[0] + up[1] * xi_q[1])) * fq
            oracle[kx % n, ky % n] = acc
    assert np.max(np.abs(result - oracle)) < 1e-13


def test_advect_skew_symmetric(small_grid):
    u_hat = random_div_free(small_grid, seed=6) * small_grid.dealias
    rng = np.random.default_rng(7)
    f_hat = small_grid.to_spectral(rng.standard_normal((small_grid.n,) * 2))
    f_hat *= small_grid.dealias
    adv = flow.advect(small_grid, u_hat, f_hat)
    inner = float(np.sum((adv * np.conj(f_hat)).real))
    assert abs(inner) < 1e-12 * float(np.sum(np.abs(f_hat) ** 2))


def test_velocity_norms(small_grid):
    u_hat = random_div_free(small_grid, seed=8)
    norms = flow.velocity_norms(small_grid, u_hat, ps=(2, 4))
    u = small_grid.to_physical(u_hat)
    l2_phys = float(np.sqrt(small_grid.dx**2 * np.sum(u**2)))
    assert norms["l2"] == pytest.approx(l2_phys, rel=1e-12)
    assert norms["lp"][2] == pytest.approx(norms["l2"], rel=1e-12)
    with pytest.raises(InvalidParameterError):
        flow.velocity_norms(small_grid, u_hat, ps=(1,))


def test_low_freq_energy(small_grid):
    u_hat = random_div_free(small_grid, seed=9)
    t, c_d = 3.0, 4.0
    val = flow.low_freq_energy(small_grid, u_hat, t, c_d)
    mask = small_grid.xi_sq <= c_d / (1.0 + t)
    mask[0, 0] = False
    expect = small_grid.length**2 * float(np.sum(np.abs(u_hat[:, mask]) ** 2))
    assert val == pytest.approx(expect, rel=1e-14)
    # monotone in the threshold, bounded by the total energy
    total = small_grid.length**2 * float(np.sum(np.abs(u_hat) ** 2))
    assert val <= flow.low_freq_energy(small_grid, u_hat, t, 2 * c_d) <= total
    with pytest.raises(InvalidParameterError):
        flow.low_freq_energy(small_grid, u_hat, t, 0.0)


def test_velocity_field_validation(small_grid):
    u_hat = random_div_free(small_grid, seed=10)
    flow.VelocityField(small_grid, u_hat)  # valid
    bad = u_hat.copy()
    bad[0] += small_grid.xi[0] * 0.1  # gradient part breaks divergence
    with pytest.raises(ContractViolationError):
        flow.VelocityField(small_grid, bad)
    bad = u_hat.copy()
    bad[0, 0, 0] = 1.0  # mean flow
    with pytest.raises(ContractViolationError):
        flow.VelocityField(small_grid, bad)


def test_field_snapshot_roundtrip(tmp_path, small_grid):
    u_hat = random_div_free(small_grid, seed=11)
    path = tmp_path / "field.fenefld"
    flow.save_field(small_grid, u_hat, path)
    grid2, loaded = flow.load_field(path)
    assert grid2.n == small_grid.n and grid2.length == small_grid.length
    assert np.array_equal(loaded, u_hat)
    path.write_bytes(b"XXXXXXXX" + b"\0" * 32)
    with pytest.raises(ValueError):
        flow.load_field(path)


def test_heat_reference_series(small_grid):
    u_hat = random_div_free(small_grid, seed=12)
    times = [0.0, 0.5, 2.0]
    rows = flow.heat_reference_series(small_grid, u_hat, times, ps=(4,))
    assert rows[0]["u_l2"] == pytest.approx(
        flow.velocity_norms(small_grid, u_hat)["l2"], rel=1e-13
    )
    expect = flow.velocity_norms(small_grid, np.exp(-small_grid.xi_sq * 2.0) * u_hat)
    assert rows[2]["u_l2"] == pytest.approx(expect["l2"], rel=1e-13)
    assert rows[2]["u_h1"] == pytest.approx(expect["h1dot"], rel=1e-13)
    assert "lp4" in rows[1]
    assert rows[0]["u_l2"] > rows[1]["u_l2"] > rows[2]["u_l2"]
