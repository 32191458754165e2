import warnings

import numpy as np
import pytest

import fenelab as fl

_verdict_lines = []


def record_verdict(line: str) -> None:
    """Collect acceptance-criterion verdict lines for the final summary."""
    _verdict_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if _verdict_lines:
        terminalreporter.section("acceptance criteria")
        for line in _verdict_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def basis_k2():
    """Standard d=2, k=2, degree-4 basis shared across tests."""
    return fl.build_basis(fl.FeneParams(k=2.0), degree_max=4)


@pytest.fixture(scope="session")
def basis_k2_d3():
    return fl.build_basis(fl.FeneParams(k=2.0, d=3), degree_max=4)


@pytest.fixture(scope="session")
def small_grid():
    return fl.FlowGrid(32, 8.0 * np.pi)


def build_basis_quiet(params, degree_max, quad_order=None):
    """build_basis with the small-k boundary warning suppressed."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return fl.build_basis(params, degree_max, quad_order)


def random_div_free(grid, seed=0, scale=1.0):
    """Dealiased, Leray-projected random velocity coefficients."""
    rng = np.random.default_rng(seed)
    u_phys = scale * rng.standard_normal((2, grid.n, grid.n))
    return fl.leray_project(grid, grid.to_spectral(u_phys)) * grid.dealias
