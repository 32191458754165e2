"""The spectral gap of the configuration relaxation operator.

Mean-zero perturbations of the equilibrium distribution relax at a rate set
by the smallest nonzero eigenvalue lambda_1 of the weighted Fokker-Planck
operator; equivalently, the weighted Poincare inequality
||psi~||^2 <= (1/lambda_1) ||psi~||^2_{H1} holds on the mean-zero subspace.
This demo tabulates lambda_1 across spring exponents and basis degrees,
shows the Cauchy convergence in degree, and spot-checks the inequality on
random samples.

Run:  python3 demos/demo_poincare.py
"""

import warnings

import numpy as np

import fenelab as fl
from fenelab import ball


def main():
    print(f"{'k':>5} {'degree':>7} {'lambda_1':>13} {'1/lambda_1':>13}")
    for k in (0.5, 1.0, 2.0, 4.0):
        prev = None
        for deg in (4, 8, 12, 16):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                basis = fl.build_basis(fl.FeneParams(k=k), deg)
            lam, c = ball.poincare_constant(basis)
            note = "" if prev is None else f"  (delta {abs(lam - prev):.1e})"
            print(f"{k:>5g} {deg:>7} {lam:>13.8f} {c:>13.8f}{note}")
            prev = lam
        print()

    print("random-sample check of the inequality at k = 2, degree 12:")
    basis = fl.build_basis(fl.FeneParams(k=2.0), 12)
    lam, _ = ball.poincare_constant(basis)
    rng = np.random.default_rng(3)
    worst = np.inf
    for _ in range(2000):
        c = rng.standard_normal(basis.size)
        c[0] = 0.0
        l2, h1, _ = ball.weighted_norms(basis, c)
        worst = min(worst, h1**2 / l2**2)
    print(f"  min Rayleigh quotient over 2000 samples: {worst:.8f}")
    print(f"  spectral gap lambda_1:                   {lam:.8f}")
    print()
    print("The sampled quotient never dips below lambda_1, and the gap grows")
    print("with k: stiffer springs confine the dumbbells more tightly and")
    print("speed up relaxation toward equilibrium.")


if __name__ == "__main__":
    main()
