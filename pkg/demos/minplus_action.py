"""Hopf-Lax propagation of an initial action and its failure modes.

The variational solution S(x,t) = min_x0 [ S0(x0) + A(x,t;x0) ] is the
classical (hbar = 0) limit of the quantum action. For convex S0 the
minimizer is unique and the Hamilton-Jacobi residual vanishes; pushing a
harmonic flow toward its focal time makes characteristics cross, and the
solver flags the nodes where the minimum stops being trustworthy instead
of silently returning one branch.
"""

import warnings

import numpy as np

from semiclassical.classical import MultivaluedWarning, hj_residual, hopf_lax_solve
from semiclassical.grids import ACTION, RealField, make_grid
from semiclassical.potentials import free, harmonic


def main():
    grid = make_grid(1, [40.0], [512])
    x = grid.axes[0]
    s0 = RealField(grid, 0.5 * 0.8 * (x - 1.0) ** 2 + 0.3 * x, ACTION)

    print("free flow of a convex quadratic action:")
    print(f"{'t':>5} {'S(0, t)':>12} {'sup |HJ residual|':>18}")
    for t in (0.3, 0.6, 1.2):
        sol = hopf_lax_solve(s0, free(mass=1.0), t)
        res = hj_residual(sol, free(mass=1.0))
        mid = sol.action.values[x.size // 2]
        print(f"{t:5.2f} {mid:12.6f} {np.nanmax(np.abs(res.values)):18.2e}")

    print("\nharmonic flow toward the focal time (omega = 1, focus at pi/2):")
    print(f"{'omega t':>8} {'multivalued':>12} {'edge-pinned':>12}")
    cup = RealField(grid, 0.05 * (x ** 2), ACTION)
    for t in (0.8, 1.3, 1.5, 1.56):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MultivaluedWarning)
            sol = hopf_lax_solve(cup, harmonic(mass=1.0, omega=1.0), t)
        print(f"{t:8.2f} {int(sol.multivalued.sum()):12d} "
              f"{int(sol.boundary.sum()):12d}")

    print("\nfree flow of a wavy action (caustic at t = 1/max(-S0'') = 0.5);")
    print("past the caustic the minimizer map x0(x) tears at each shock:")
    print(f"{'t':>5} {'shocks':>7}")
    wavy = RealField(grid, 2.0 * np.cos(x), ACTION)
    h = grid.spacings[0]
    for t in (0.3, 0.8, 1.5):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MultivaluedWarning)
            sol = hopf_lax_solve(wavy, free(mass=1.0), t)
        x0 = sol.argmin[:, 0]
        shocks = int(np.sum(np.abs(np.diff(x0)) > 10.0 * h))
        print(f"{t:5.2f} {shocks:7d}")

    print("\nplane wave S0 = m v x (exact: S = m v x - m v^2 t / 2):")
    v, t = 0.9, 0.7
    plane = RealField(grid, v * x, ACTION)
    sol = hopf_lax_solve(plane, free(mass=1.0), t)
    exact = v * x - 0.5 * v * v * t
    gap = np.max(np.abs(sol.action.values - exact)[sol.trusted()])
    print(f"  sup |S - exact| on trusted nodes = {gap:.2e}")


if __name__ == "__main__":
    main()
