"""Split a wavefunction into density, action and quantum potential.

A coherent state makes every piece checkable by hand: the action gradient
is the classical momentum, and Q is exactly hbar*omega at the packet center
falling off as -m omega^2 |x - xi|^2 / 2. The last block scales hbar down
and shows Q dying like hbar (at the center) while the classical fields
stay put.
"""

import numpy as np

from semiclassical.coherent import CoherentState, wavefield, xi, xi_dot
from semiclassical.grids import make_grid
from semiclassical.madelung import decompose


def main():
    grid = make_grid(2, [16.0, 16.0], [192, 192])
    t = 0.8
    for hbar in (1.0, 0.25, 0.0625):
        cs = CoherentState(omega=1.0, mass=1.0, hbar=hbar,
                           x0=[1.5, 0.0], v0=[0.0, 1.5])
        fields = decompose(wavefield(cs, grid, t), rho_floor=1e-9)
        center = xi(cs, t)
        i = int(np.argmin(np.abs(grid.axes[0] - center[0])))
        j = int(np.argmin(np.abs(grid.axes[1] - center[1])))
        q_center = fields.qpotential.values[i, j]
        p_exact = cs.mass * xi_dot(cs, t)
        p_num = np.array([fields.grad_action[0][i, j],
                          fields.grad_action[1][i, j]])
        print(f"hbar = {hbar:7.4f}  Q(xi) = {q_center:10.6f} "
              f"(hbar*omega = {hbar * cs.omega:7.4f})  "
              f"grad S at xi = ({p_num[0]:+.4f}, {p_num[1]:+.4f}) "
              f"vs m xi_dot = ({p_exact[0]:+.4f}, {p_exact[1]:+.4f})")

    print("\nQ along the x axis through the packet (hbar = 1):")
    cs = CoherentState(omega=1.0, mass=1.0, hbar=1.0,
                       x0=[1.5, 0.0], v0=[0.0, 1.5])
    fields = decompose(wavefield(cs, grid, t), rho_floor=1e-9)
    center = xi(cs, t)
    j = int(np.argmin(np.abs(grid.axes[1] - center[1])))
    for dx in (-2.0, -1.0, 0.0, 1.0, 2.0):
        i = int(np.argmin(np.abs(grid.axes[0] - (center[0] + dx))))
        x = grid.axes[0][i]
        want = cs.hbar * cs.omega - 0.5 * cs.mass * cs.omega**2 * (
            (x - center[0]) ** 2 + (grid.axes[1][j] - center[1]) ** 2)
        got = fields.qpotential.values[i, j]
        print(f"  x - xi_x = {dx:+.1f}:  Q = {got:+9.5f}   "
              f"hw - m w^2 r^2 / 2 = {want:+9.5f}")


if __name__ == "__main__":
    main()
