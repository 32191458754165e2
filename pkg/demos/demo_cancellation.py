"""Watch the stress/source work cancellation, term by term.

The momentum equation receives the divergence of the extra stress; the
configuration equation receives the velocity-gradient source.  Summed over
the box these two powers are equal and opposite -- the mechanism that makes
the coupled energy decay despite the two-way coupling.  This demo runs a
short coupled simulation and prints both work terms and their residual at
every step, evaluated through two genuinely different code paths (spectral
vs collocation), so the agreement is evidence rather than bookkeeping.

Run:  python3 demos/demo_cancellation.py
"""

import numpy as np

import fenelab as fl


def main():
    cfg = fl.RunConfig(
        grid_n=64, grid_length=16.0 * np.pi, dt=0.05, t_end=2.0, seed=12
    )
    grid, basis, solver = cfg.build()
    state = fl.make_initial_data(cfg, grid, basis)

    print(f"coupled run: N={cfg.grid_n}, k={cfg.k:g}, M={basis.size}, dt={cfg.dt:g}")
    print(f"{'t':>6} {'W_stress':>14} {'W_source':>14} {'residual':>12} {'rel':>9}")
    for _ in range(int(round(cfg.t_end / cfg.dt))):
        state = solver.step(state, cfg.dt)
        terms = solver.energy_terms(state)
        scale = abs(terms["W_stress"]) + abs(terms["W_source"]) + np.finfo(float).eps
        print(
            f"{state.t:>6.2f} {terms['W_stress']:>14.6e} {terms['W_source']:>14.6e} "
            f"{terms['cancel_resid']:>12.2e} {terms['cancel_resid'] / scale:>9.1e}"
        )

    print()
    print("The relative residual sits at rounding level while each work term")
    print("is many orders of magnitude larger: the coupling moves energy")
    print("between the flow and the polymers but never creates any.")


if __name__ == "__main__":
    main()
