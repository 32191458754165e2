"""Weighted spectral discretization of the configuration ball.

The polymer configuration R lives in the unit ball B(0,1) of R^d with the
equilibrium weight psi_inf = (1 - |R|^2)^k / Z.  Everything is expressed in
terms of g = psi_tilde / psi_inf, for which the weighted L^2 inner product
<g, h> = int_B psi_inf g h dR is Euclidean in an orthonormal polynomial
basis.  This module builds that basis (graded by total degree), the
quadrature rules, and the four operator families:

  K        stiffness of the Fokker-Planck operator, <grad g_i, grad g_j>
  D[a,b]   drag matrices, weak form of div_R(-kappa.R psi_tilde)
  S[a,b]   source vectors, projection of 2k R_a R_b / (1-|R|^2)
  T[i,j]   stress vectors; identical to S, which is what makes the
           stress-work cancellation exact at the discrete level

Two Gauss-Jacobi radial rules are kept: exponent k for mass/stiffness/drag
integrals and exponent k-1 for the stress/source integrand, which carries
one inverse power of (1 - |R|^2) from grad_R U.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, eigh, solve_triangular
from scipy.special import gamma, roots_jacobi, roots_legendre

from .errors import (
    ContractViolationError,
    DiscretizationFailureError,
    IllConditionedBasisError,
    InvalidParameterError,
    MassInjectionError,
)
from .params import FeneParams

__all__ = [
    "BallBasis",
    "ConfigCoeffs",
    "apply_drag",
    "apply_fokker_planck",
    "ball_quadrature",
    "build_basis",
    "equilibrium_mass",
    "load_basis",
    "poincare_constant",
    "save_basis",
    "source_coeffs",
    "stress",
    "weighted_norms",
]

BASIS_MAGIC = b"FENEBAS1"


def equilibrium_mass(d: int, k: float) -> float:
    """Normalization Z = int_B (1 - |R|^2)^k dR of the equilibrium density."""
    if d == 2:
        return np.pi / (k + 1.0)
    # d = 3: 2 pi * B(3/2, k+1)
    return 2.0 * np.pi * gamma(1.5) * gamma(k + 1.0) / gamma(k + 2.5)


def ball_quadrature(d: int, exponent: float, n_radial: int, n_angular: int):
    """Nodes and weights for int_B (1 - |R|^2)^exponent f(R) dR.

    Radial direction handled by Gauss-Jacobi in s = r^2 (exact for the
    weight, any exponent > -1), angles by product trapezoid/Legendre rules.
    Returns (nodes, weights) with nodes of shape (nq, d).
    """
    if exponent <= -1:
        raise InvalidParameterError(f"radial weight exponent must be > -1, got {exponent}")
    beta_exp = 0.0 if d == 2 else 0.5
    x, w = roots_jacobi(n_radial, exponent, beta_exp)
    s = 0.5 * (x + 1.0)
    # int_0^1 (1-s)^e s^beta f ds = sum w_j f(s_j) / 2^(e + beta + 1)
    w_s = w / 2.0 ** (exponent + beta_exp + 1.0)
    r = np.sqrt(s)

    theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
    w_theta = np.full(n_angular, 2.0 * np.pi / n_angular)

    if d == 2:
        # dR = (1/2) ds dtheta
        rr, tt = np.meshgrid(r, theta, indexing="ij")
        nodes = np.stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()], axis=1)
        weights = 0.5 * np.outer(w_s, w_theta).ravel()
        return nodes, weights

    z, w_z = roots_legendre(n_radial + 2)
    # dR = (1/2) ds dz dtheta with the s^(1/2) factor folded into w_s
    rr = r[:, None, None]
    zz = z[None, :, None]
    tt = theta[None, None, :]
    rho = rr * np.sqrt(1.0 - zz**2)
    nodes = np.stack(
        [
            (rho * np.cos(tt)).ravel(),
            (rho * np.sin(tt)).ravel(),
            (rr * zz * np.ones_like(tt)).ravel(),
        ],
        axis=1,
    )
    weights = 0.5 * (w_s[:, None, None] * w_z[None, :, None] * w_theta[None, None, :]).ravel()
    return nodes, weights


def graded_multi_indices(d: int, degree_max: int) -> list[tuple[int, ...]]:
    """All d-variate exponent tuples of total degree <= degree_max, graded."""
    out: list[tuple[int, ...]] = []
    for deg in range(degree_max + 1):
        if d == 2:
            out.extend((a, deg - a) for a in range(deg, -1, -1))
        else:
            for a in range(deg, -1, -1):
                out.extend((a, b, deg - a - b) for b in range(deg - a, -1, -1))
    return out


def _cheb_tables(x: np.ndarray, n_max: int):
    """Chebyshev T_0..T_n and derivatives at points x in [-1, 1]."""
    nq = x.shape[0]
    t = np.empty((n_max + 1, nq))
    dt = np.empty((n_max + 1, nq))
    t[0] = 1.0
    dt[0] = 0.0
    if n_max >= 1:
        t[1] = x
        dt[1] = 1.0
    for n in range(2, n_max + 1):
        t[n] = 2.0 * x * t[n - 1] - t[n - 2]
        dt[n] = 2.0 * t[n - 1] + 2.0 * x * dt[n - 1] - dt[n - 2]
    return t, dt


def _seed_values(nodes: np.ndarray, indices: list[tuple[int, ...]], with_grad: bool):
    """Values (and gradients) of the Chebyshev-product seed family.

    The seed spans the same graded polynomial space as the monomials
    R^m but with far better conditioning of the weighted Gram matrix.
    """
    d = nodes.shape[1]
    n_max = max(sum(m) for m in indices)
    tabs = [_cheb_tables(nodes[:, a], n_max) for a in range(d)]
    nq = nodes.shape[0]
    mcount = len(indices)
    v = np.empty((nq, mcount))
    dv = np.empty((d, nq, mcount)) if with_grad else None
    for j, m in enumerate(indices):
        val = tabs[0][0][m[0]].copy()
        for a in range(1, d):
            val *= tabs[a][0][m[a]]
        v[:, j] = val
        if with_grad:
            for a in range(d):
                gval = tabs[a][1][m[a]].copy()
                for b in range(d):
                    if b != a:
                        gval *= tabs[b][0][m[b]]
                dv[a, :, j] = gval
    return (v, dv) if with_grad else v


@dataclass(frozen=True)
class BallBasis:
    """Orthonormal polynomial basis on the weighted configuration ball.

    Immutable after construction; operator applications are pure functions
    of (basis, coefficients), so instances are safely shared across threads.
    """

    params: FeneParams
    degree_max: int
    size: int
    indices: list[tuple[int, ...]]
    seed_coeffs: np.ndarray          # (size, size): seed -> orthonormal map
    mass_nodes: np.ndarray           # exponent-k rule
    mass_weights: np.ndarray
    stress_nodes: np.ndarray         # exponent-(k-1) rule
    stress_weights: np.ndarray
    stiffness: np.ndarray            # K, (M, M)
    drag: np.ndarray                 # D, (d, d, M, M)
    source: np.ndarray               # S, (d, d, M)
    gram_dev: float
    gram_tol: float = 1e-12

    @property
    def stress_vectors(self) -> np.ndarray:
        """T[i,j] vectors; identical to the source projections."""
        return self.source

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Basis values at arbitrary points in the ball, shape (npts, M)."""
        v = _seed_values(np.atleast_2d(points), self.indices, with_grad=False)
        return v @ self.seed_coeffs

    def monomial_coeffs(self) -> np.ndarray:
        """Basis functions as monomial-coefficient columns (oracle support).

        Column j holds the coefficients of basis function j on the graded
        monomial family R^m, m = self.indices.  Conversion from the
        Chebyshev seed is exact but ill-conditioned at high degree; intended
        for degree_max <= 8 cross-checks.
        """
        d = self.params.d
        n_max = self.degree_max
        # cheb1d[n] = monomial coefficients of T_n
        cheb1d = np.zeros((n_max + 1, n_max + 1))
        cheb1d[0, 0] = 1.0
        if n_max >= 1:
            cheb1d[1, 1] = 1.0
        for n in range(2, n_max + 1):
            cheb1d[n, 1:] = 2.0 * cheb1d[n - 1, :-1]
            cheb1d[n] -= cheb1d[n - 2]
        pos = {m: i for i, m in enumerate(self.indices)}
        m_count = self.size
        seed_to_mono = np.zeros((m_count, m_count))
        for j, m in enumerate(self.indices):
            grids = np.meshgrid(*[np.arange(mi + 1) for mi in m], indexing="ij")
            coef = np.ones(grids[0].shape)
            for a in range(d):
                coef = coef * cheb1d[m[a]][grids[a]]
            it = np.nditer(coef, flags=["multi_index"])
            for c in it:
                if c != 0:
                    seed_to_mono[pos[it.multi_index], j] += float(c)
        return seed_to_mono @ self.seed_coeffs


def build_basis(
    params: FeneParams,
    degree_max: int,
    quad_order: int | None = None,
    gram_tol: float = 1e-12,
) -> BallBasis:
    """Construct the orthonormal basis and all operator matrices.

    The basis is graded by total degree and orthonormalized under the
    psi_inf-weighted inner product evaluated by quadrature (QR plus
    Cholesky refinement passes).  Raises IllConditionedBasisError if the
    Gram matrix deviates from the identity by more than gram_tol times
    the basis size (the evaluation-rounding floor grows with size).
    """
    if degree_max < 0:
        raise InvalidParameterError("degree_max must be >= 0")
    if quad_order is None:
        quad_order = degree_max + 6
    if quad_order < degree_max + 2:
        raise InvalidParameterError("quad_order must be >= degree_max + 2")
    k, d = params.k, params.d
    if k <= 1.0:
        warnings.warn(
            f"k = {k} <= 1: psi_inf |grad_R U|^2 is not integrable; the simple "
            "stress operator-norm bound degrades near the boundary",
            RuntimeWarning,
            stacklevel=2,
        )

    n_ang = 4 * degree_max + 8
    z = equilibrium_mass(d, k)
    mass_nodes, mass_w = ball_quadrature(d, k, quad_order, n_ang)
    stress_nodes, stress_w = ball_quadrature(d, k - 1.0, quad_order, n_ang)

    indices = graded_multi_indices(d, degree_max)
    m_count = len(indices)
    v, dv = _seed_values(mass_nodes, indices, with_grad=True)
    wn = mass_w / z  # normalized weights: sum wn f = <f>_psi_inf

    # Orthonormalize: QR of the weighted Vandermonde, then one refinement.
    a_mat = v * np.sqrt(wn)[:, None]
    q, r = np.linalg.qr(a_mat, mode="reduced")
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    r *= signs[:, None]
    coeffs = solve_triangular(r, np.eye(m_count))
    for _ in range(4):  # Cholesky refinement passes, quadratically convergent
        phi = v @ coeffs
        gram = phi.T @ (phi * wn[:, None])
        gram_dev = float(np.max(np.abs(gram - np.eye(m_count))))
        if gram_dev <= 0.1 * gram_tol:
            break
        try:
            chol = cholesky(0.5 * (gram + gram.T), lower=True)
        except np.linalg.LinAlgError as exc:
            raise IllConditionedBasisError(
                "weighted Gram matrix not numerically positive definite; "
                "lower degree_max or raise quad_order"
            ) from exc
        coeffs = solve_triangular(chol, coeffs.T, lower=True).T

    phi = v @ coeffs
    gram = phi.T @ (phi * wn[:, None])
    gram_dev = float(np.max(np.abs(gram - np.eye(m_count))))
    # rounding in the Gram evaluation itself grows with the basis size, so
    # the acceptance threshold is scaled by M; refinement cannot beat it
    if gram_dev > gram_tol * m_count:
        raise IllConditionedBasisError(
            f"Gram deviation {gram_dev:.3e} exceeds tolerance "
            f"{gram_tol * m_count:.1e}; lower degree_max or raise quad_order"
        )

    dphi = np.einsum("aqj,jm->aqm", dv, coeffs)
    # Stiffness K_ij = sum_a <d_a g_i, d_a g_j>; column 0 is exactly zero
    # because the constant basis function has an identically zero gradient.
    stiffness = np.einsum("aqi,q,aqj->ij", dphi, wn, dphi)
    stiffness = 0.5 * (stiffness + stiffness.T)

    # Drag D[a,b]_ij = <R_b d_a g_i, g_j>  (weak form after one integration
    # by parts; psi_inf kills the boundary term for k > 0).
    drag = np.einsum("aqi,qb,q,qj->abij", dphi, mass_nodes, wn, phi)

    # Source / stress vectors on the exponent-(k-1) rule:
    # S[a,b]_i = (2k/Z) int (1-|R|^2)^(k-1) R_a R_b g_i dR.
    phi_s = _seed_values(stress_nodes, indices, with_grad=False) @ coeffs
    src_w = 2.0 * k * stress_w / z
    source = np.einsum("qa,qb,q,qi->abi", stress_nodes, stress_nodes, src_w, phi_s)
    # Enforce the analytic structure exactly: S is symmetric in (a, b); its
    # mean-component is zero off-diagonal (odd angular integrand) and shared
    # on the diagonal, so a trace-free contraction conserves mass exactly.
    source = 0.5 * (source + source.transpose(1, 0, 2))
    diag0 = float(np.mean([source[a, a, 0] for a in range(d)]))
    for a in range(d):
        for b in range(d):
            source[a, b, 0] = diag0 if a == b else 0.0

    return BallBasis(
        params=params,
        degree_max=degree_max,
        size=m_count,
        indices=indices,
        seed_coeffs=coeffs,
        mass_nodes=mass_nodes,
        mass_weights=mass_w,
        stress_nodes=stress_nodes,
        stress_weights=stress_w,
        stiffness=stiffness,
        drag=drag,
        source=source,
        gram_dev=gram_dev,
        gram_tol=gram_tol,
    )


@dataclass(frozen=True)
class ConfigCoeffs:
    """Coefficients of g = psi_tilde / psi_inf in a BallBasis.

    The constant-mode coefficient is the configuration mass int_B psi_tilde
    dR; a nonzero value indicates a caller bug and is rejected outright
    rather than projected away.
    """

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs)
        if c.ndim != 1:
            raise ContractViolationError("coefficient vector must be one-dimensional")
        if c[0] != 0:
            raise ContractViolationError(
                f"coeffs[0] = {c[0]!r} violates int_B psi_tilde dR = 0"
            )
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, basis: BallBasis) -> "ConfigCoeffs":
        return cls(np.zeros(basis.size))


def _as_vec(basis: BallBasis, g) -> np.ndarray:
    c = g.coeffs if isinstance(g, ConfigCoeffs) else np.asarray(g)
    if c.shape != (basis.size,):
        raise ContractViolationError(
            f"coefficient vector has shape {c.shape}, basis size is {basis.size}"
        )
    return c


def apply_fokker_planck(basis: BallBasis, g) -> np.ndarray:
    """Galerkin action K.g of L(psi_tilde) = -div_R(psi_inf grad_R g)."""
    return basis.stiffness @ _as_vec(basis, g)


def apply_drag(basis: BallBasis, g, kappa: np.ndarray) -> np.ndarray:
    """Galerkin action of div_R(-kappa.R psi_tilde) for kappa = grad u."""
    c = _as_vec(basis, g)
    kappa = np.asarray(kappa, dtype=float)
    d = basis.params.d
    if kappa.shape != (d, d):
        raise ContractViolationError(f"kappa must be {d}x{d}, got {kappa.shape}")
    return np.einsum("ab,abij,j->i", kappa, basis.drag, c)


def deviatoric(kappa: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Validate near-trace-freeness and return the exactly trace-free part."""
    kappa = np.asarray(kappa, dtype=float)
    d = kappa.shape[0]
    tr = float(np.trace(kappa))
    if abs(tr) > tol:
        raise MassInjectionError(
            f"trace(kappa) = {tr:.3e} would inject configuration mass"
        )
    return kappa - (tr / d) * np.eye(d)


def source_coeffs(basis: BallBasis, kappa: np.ndarray) -> np.ndarray:
    """Projection of the forcing psi_inf kappa : (R x grad_R U) onto the basis.

    kappa must be trace-free (incompressibility); the contraction then has
    an exactly zero mean component.
    """
    d = basis.params.d
    kappa = np.asarray(kappa, dtype=float)
    if kappa.shape != (d, d):
        raise ContractViolationError(f"kappa must be {d}x{d}, got {kappa.shape}")
    return np.einsum("ab,abi->i", deviatoric(kappa), basis.source)


def stress(basis: BallBasis, g) -> np.ndarray:
    """Extra stress tau_ij = int_B R_i (grad_R U)_j psi_tilde dR, symmetric."""
    c = _as_vec(basis, g)
    return np.einsum("abi,i->ab", basis.source, c)


def weighted_norms(basis: BallBasis, g) -> tuple[float, float, float]:
    """(L^2 norm, homogeneous H^1 seminorm, mass) of psi_tilde."""
    c = _as_vec(basis, g)
    l2 = float(np.sqrt(np.real(np.vdot(c, c))))
    h1 = float(np.sqrt(max(np.real(np.vdot(c, basis.stiffness @ c)), 0.0)))
    return l2, h1, float(np.real(c[0]))


def poincare_constant(basis: BallBasis) -> tuple[float, float]:
    """Spectral gap lambda_1 on the mean-zero subspace and C = 1/lambda_1."""
    sub = basis.stiffness[1:, 1:]
    lam = eigh(sub, eigvals_only=True, subset_by_index=[0, 0])[0]
    if lam <= 1e-10:
        raise DiscretizationFailureError(
            f"spectral gap {lam:.3e} <= 1e-10: stiffness kernel leaked into "
            "the mean-zero subspace"
        )
    return float(lam), float(1.0 / lam)


def relaxation_eig(basis: BallBasis) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition K_sub = Q diag(lam) Q^T on the mean-zero subspace."""
    lam, q = eigh(basis.stiffness[1:, 1:])
    return lam, q


# ---------------------------------------------------------------------------
# Binary archive ("FENEBAS1")
# ---------------------------------------------------------------------------

def save_basis(basis: BallBasis, path) -> None:
    """Write the basis to the FENEBAS1 binary archive.

    Layout: magic, u32 version, u32 d, f64 k, u32 degree_max, u32 M, then
    row-major little-endian f64 blocks K (M^2), D (d^2 M^2), S (d^2 M),
    T (d^2 M), the two quadrature tables (u32 count, nodes, weights each),
    and the seed-coefficient matrix (M^2).
    """
    d = basis.params.d
    with open(path, "wb") as fh:
        fh.write(BASIS_MAGIC)
        fh.write(struct.pack("<IId", 1, d, basis.params.k))
        fh.write(struct.pack("<II", basis.degree_max, basis.size))
        for arr in (basis.stiffness, basis.drag, basis.source, basis.stress_vectors):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        for nodes, w in (
            (basis.mass_nodes, basis.mass_weights),
            (basis.stress_nodes, basis.stress_weights),
        ):
            fh.write(struct.pack("<I", nodes.shape[0]))
            fh.write(np.ascontiguousarray(nodes, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(basis.seed_coeffs, dtype="<f8").tobytes())


def load_basis(path, box_length: float | None = None) -> BallBasis:
    """Read a FENEBAS1 archive back into a usable BallBasis."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != BASIS_MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {BASIS_MAGIC!r}")
        version, d, k = struct.unpack("<IId", fh.read(16))
        if version != 1:
            raise ValueError(f"unsupported basis archive version {version}")
        degree_max, m_count = struct.unpack("<II", fh.read(8))

        def block(shape):
            n = int(np.prod(shape))
            return np.frombuffer(fh.read(8 * n), dtype="<f8").reshape(shape).copy()

        stiffness = block((m_count, m_count))
        drag = block((d, d, m_count, m_count))
        source = block((d, d, m_count))
        block((d, d, m_count))  # T block; identical to S by construction
        tables = []
        for _ in range(2):
            (nq,) = struct.unpack("<I", fh.read(4))
            tables.append((block((nq, d)), block((nq,))))
        seed_coeffs = block((m_count, m_count))

    kwargs = {} if box_length is None else {"box_length": box_length}
    params = FeneParams(k=k, d=d, **kwargs)
    indices = graded_multi_indices(d, degree_max)
    return BallBasis(
        params=params,
        degree_max=degree_max,
        size=m_count,
        indices=indices,
        seed_coeffs=seed_coeffs,
        mass_nodes=tables[0][0],
        mass_weights=tables[0][1],
        stress_nodes=tables[1][0],
        stress_weights=tables[1][1],
        stiffness=stiffness,
        drag=drag,
        source=source,
        gram_dev=0.0,
    )
