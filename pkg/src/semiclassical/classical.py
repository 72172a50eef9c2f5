"""Classical-limit machinery: min-plus action propagation and transport.

The zero-hbar action obeys a Hamilton-Jacobi equation whose viscosity
solution is the min-plus (Hopf-Lax style) superposition

    S(x, t) = min_x0 [ S0(x0) + S_cl(x, t; x0) ],

evaluated here by an exhaustive scan over a candidate x0 grid followed by a
one-cell parabolic refinement of the minimum. The scan keeps enough
bookkeeping to flag non-unique minimizers (crossing characteristics) and
minima pinned to the candidate-bank edge, both of which make the local value
untrustworthy.

Classical densities are transported by characteristics and binned, never by
discretizing the continuity equation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline, RectBivariateSpline, RegularGridInterpolator

from .bohm import sample_initial_positions
from .grids import ACTION, DENSITY, ENERGY, Grid, RealField
from .potentials import (
    PotentialSpec,
    UnsupportedPotentialError,
    advance_ensemble,
    classical_action,
)
from .trajectories import TrajectoryEnsemble


class MultivaluedWarning(UserWarning):
    """Distinct minimizers tie within tolerance (crossing characteristics)."""


@dataclass(eq=False)
class MinPlusSolution:
    grid: Grid
    t: float
    action: RealField
    argmin: np.ndarray        # refined minimizer per node, shape (*shape, dim)
    multivalued: np.ndarray   # bool per node
    boundary: np.ndarray      # argmin pinned to the x0 bank edge
    s0: RealField
    x0_axes: tuple
    spec: PotentialSpec

    def trusted(self) -> np.ndarray:
        return ~(self.multivalued | self.boundary)


def _uniform_axis(ax):
    ax = np.asarray(ax, dtype=float)
    if ax.size < 4:
        raise ValueError("x0 axes need at least 4 candidates")
    d = np.diff(ax)
    if not np.allclose(d, d[0], rtol=1e-9, atol=0):
        raise ValueError("x0 axes must be uniform")
    return ax, float(d[0])


def _s0_interpolant(s0: RealField):
    g = s0.grid
    if g.dim == 1:
        spline = CubicSpline(g.axes[0], s0.values)
        return lambda pts: spline(pts[..., 0])
    spline = RectBivariateSpline(g.axes[0], g.axes[1], s0.values, kx=3, ky=3)
    return lambda pts: spline.ev(pts[..., 0], pts[..., 1])


def hopf_lax_solve(s0: RealField, spec: PotentialSpec, t: float,
                   x0_axes=None, refine: bool = True,
                   tie_tol: float = 1e-6, chunk: int = None) -> MinPlusSolution:
    """Min-plus propagation of an initial action field to time t > 0.

    x0_axes: per-axis uniform candidate coordinates (defaults to the s0 grid
    axes); candidates must stay inside the s0 box so S0 can be interpolated.
    """
    if not t > 0:
        raise ValueError("hopf_lax_solve needs t > 0")
    grid = s0.grid
    if x0_axes is None:
        x0_axes = grid.axes
    elif isinstance(x0_axes, np.ndarray) and grid.dim == 1:
        x0_axes = (x0_axes,)
    axes, steps = [], []
    for a, ax in enumerate(x0_axes):
        ax, h = _uniform_axis(ax)
        lo, hi = grid.axes[a][0], grid.axes[a][-1]
        if ax[0] < lo - 1e-12 or ax[-1] > hi + 1e-12:
            raise ValueError("x0 candidates fall outside the S0 grid box")
        axes.append(ax)
        steps.append(h)
    interp = _s0_interpolant(s0)

    if grid.dim == 1:
        bank = axes[0][:, None]                       # (M, 1)
        bank_shape = (axes[0].size,)
    else:
        mx, my = np.meshgrid(axes[0], axes[1], indexing="ij")
        bank = np.stack([mx.ravel(), my.ravel()], axis=-1)   # (M, 2)
        bank_shape = (axes[0].size, axes[1].size)
    s0_bank = interp(bank)
    m_total = bank.shape[0]

    nodes = grid.nodes()                              # (n, dim)
    n_nodes = nodes.shape[0]
    if chunk is None:
        chunk = max(16, int(4e6 / m_total))

    values = np.empty(n_nodes)
    arg = np.empty((n_nodes, grid.dim))
    multi = np.zeros(n_nodes, dtype=bool)
    edge = np.zeros(n_nodes, dtype=bool)

    for lo_i in range(0, n_nodes, chunk):
        sl = slice(lo_i, min(lo_i + chunk, n_nodes))
        xs = nodes[sl]
        xq = xs[:, None, 0] if grid.dim == 1 else xs[:, None, :]
        x0q = bank[None, :, 0] if grid.dim == 1 else bank[None, :, :]
        cost = classical_action(spec, xq, t, x0q) + s0_bank[None, :]
        jflat = np.argmin(cost, axis=1)
        rows = np.arange(cost.shape[0])
        cmin = cost[rows, jflat]

        jidx = np.unravel_index(jflat, bank_shape)
        tie = cost <= (cmin[:, None] + tie_tol)
        far = np.zeros_like(tie)
        grid_idx = np.unravel_index(np.arange(m_total), bank_shape)
        for a in range(grid.dim):
            far |= np.abs(grid_idx[a][None, :] - jidx[a][:, None]) > 2
        multi[sl] = np.any(tie & far, axis=1)

        on_edge = np.zeros(cost.shape[0], dtype=bool)
        for a in range(grid.dim):
            on_edge |= (jidx[a] == 0) | (jidx[a] == bank_shape[a] - 1)
        edge[sl] = on_edge

        x0_best = bank[jflat].copy()
        if refine:
            deltas = np.zeros_like(x0_best)
            for a in range(grid.dim):
                off = np.zeros((grid.dim,), dtype=int)
                off[a] = 1
                jm = tuple(np.clip(jidx[k] - off[k], 0, bank_shape[k] - 1)
                           for k in range(grid.dim))
                jp = tuple(np.clip(jidx[k] + off[k], 0, bank_shape[k] - 1)
                           for k in range(grid.dim))
                cm = cost[rows, np.ravel_multi_index(jm, bank_shape)]
                cp = cost[rows, np.ravel_multi_index(jp, bank_shape)]
                denom = cm - 2.0 * cmin + cp
                with np.errstate(divide="ignore", invalid="ignore"):
                    d = 0.5 * (cm - cp) / denom * steps[a]
                ok = (denom > 0) & ~on_edge & np.isfinite(d)
                deltas[:, a] = np.where(ok, np.clip(d, -steps[a], steps[a]), 0.0)
            x0_ref = x0_best + deltas
            s_cl = classical_action(
                spec,
                xs[:, 0] if grid.dim == 1 else xs,
                t,
                x0_ref[:, 0] if grid.dim == 1 else x0_ref,
            )
            v_ref = interp(x0_ref) + s_cl
            better = v_ref < cmin
            cmin = np.where(better, v_ref, cmin)
            x0_best = np.where(better[:, None], x0_ref, x0_best)

        values[sl] = cmin
        arg[sl] = x0_best

    if multi.any():
        warnings.warn(
            f"{int(multi.sum())} nodes have non-unique minimizers",
            MultivaluedWarning,
            stacklevel=2,
        )

    shape = grid.shape
    return MinPlusSolution(
        grid=grid,
        t=float(t),
        action=RealField(grid, values.reshape(shape), ACTION),
        argmin=arg.reshape(shape + (grid.dim,)),
        multivalued=multi.reshape(shape),
        boundary=edge.reshape(shape),
        s0=s0,
        x0_axes=tuple(axes),
        spec=spec,
    )


def hj_residual(sol: MinPlusSolution, spec: PotentialSpec, dt: float = None) -> RealField:
    """Residual dS/dt + |grad S|^2 / 2m + V of a min-plus solution.

    Re-solves at t +- dt for the centered time derivative; spatial gradient
    by centered finite differences (min-plus actions are generally not
    periodic, so no spectral derivative here). Untrusted nodes are NaN.
    """
    if dt is None:
        dt = max(1e-6, 1e-4 * sol.t)
    lo = hopf_lax_solve(sol.s0, spec, sol.t - dt, sol.x0_axes)
    hi = hopf_lax_solve(sol.s0, spec, sol.t + dt, sol.x0_axes)
    s_t = (hi.action.values - lo.action.values) / (2.0 * dt)
    grads = np.gradient(sol.action.values, *sol.grid.axes)
    if sol.grid.dim == 1:
        grads = [grads]
    grad_sq = sum(g * g for g in grads)
    mesh = sol.grid.mesh()
    pts = np.stack(mesh, axis=-1) if sol.grid.dim > 1 else mesh[0]
    v = spec.evaluate_at(pts, sol.t)
    res = s_t + grad_sq / (2.0 * spec.mass) + v

    keep = sol.trusted() & lo.trusted() & hi.trusted()
    # the centered stencil consumes both neighbors, so a trusted node next
    # to an untrusted one still inherits its error: erode by one node (the
    # wrap-around of roll only touches the rim, dropped below)
    tr = sol.trusted()
    for a in range(sol.grid.dim):
        keep &= np.roll(tr, 1, axis=a) & np.roll(tr, -1, axis=a)
    # one-sided differences at the field edge are first order; drop the rim
    rim = np.zeros(sol.grid.shape, dtype=bool)
    for a in range(sol.grid.dim):
        idx = [slice(None)] * sol.grid.dim
        idx[a] = 0
        rim[tuple(idx)] = True
        idx[a] = -1
        rim[tuple(idx)] = True
    keep &= ~rim
    return RealField(sol.grid, np.where(keep, res, np.nan), ENERGY)


@dataclass(eq=False)
class ClassicalDensity:
    grid: Grid
    time: float
    rho: RealField
    n_particles: int
    method: str = "characteristics_histogram"


def evolve_classical_density(rho0: RealField, s0: RealField, spec: PotentialSpec,
                             t_grid, n: int, seed: int, grad_s0=None):
    """Transport a density by classical characteristics and bin per time.

    Initial velocities are grad(S0)/m, from the callable grad_s0 when given
    (analytic forms), else by centered differences of the S0 samples.
    Returns one ClassicalDensity per requested time.
    """
    grid = rho0.grid
    t_grid = np.asarray(t_grid, dtype=float)
    x0 = sample_initial_positions(rho0, n, seed)
    if grad_s0 is not None:
        v0 = np.asarray(grad_s0(x0), dtype=float) / spec.mass
    else:
        comps = np.gradient(s0.values, *grid.axes)
        if grid.dim == 1:
            comps = [comps]
        fns = [
            RegularGridInterpolator(grid.axes, c, bounds_error=False, fill_value=None)
            for c in comps
        ]
        v0 = np.stack([f(x0) for f in fns], axis=-1) / spec.mass
    pos, _ = advance_ensemble(spec, x0, v0, t_grid)

    edges = [
        np.concatenate([ax - h / 2.0, [ax[-1] + h / 2.0]])
        for ax, h in zip(grid.axes, grid.spacings)
    ]
    out = []
    for i, t in enumerate(t_grid):
        counts, _ = np.histogramdd(pos[:, i, :], bins=edges)
        dens = counts / (n * grid.cell_volume)
        mass = grid.integrate(dens)
        if abs(mass - 1.0) > 1e-3:
            raise ValueError(
                f"histogram mass {mass:.6f} at t={t:g}: particles left the box"
            )
        out.append(
            ClassicalDensity(grid, float(t), RealField(grid, dens, DENSITY), n)
        )
    return out


@dataclass(eq=False)
class DeterministSolution:
    path: TrajectoryEnsemble
    g: np.ndarray           # accumulated phase integral per time
    residual: np.ndarray    # HJ residual along the path per time

    def action_at(self, x, i: int, mass: float) -> np.ndarray:
        """S(x, t_i) = m xi_dot(t_i) . x + g(t_i)."""
        x = np.asarray(x, dtype=float)
        vel = self.path.velocities[0, i]
        return np.tensordot(x, mass * vel, axes=([-1], [0])) + self.g[i]


def determinist_solution(spec: PotentialSpec, x0, v0, t_grid) -> DeterministSolution:
    """Point-source classical action data along a harmonic trajectory.

    g(t) accumulates integral ( -m xi_dot^2/2 + m w^2 xi^2/2 ) ds by
    quadrature; the returned residual checks dS/dt + |grad S|^2/2m + V = 0 on
    x = xi(t) with a centered difference in t.
    """
    if spec.kind != "harmonic":
        raise UnsupportedPotentialError(
            "determinist closed forms are implemented for the harmonic catalog entry"
        )
    m = spec.mass
    w = spec.params["omega"]
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    v0 = np.atleast_1d(np.asarray(v0, dtype=float))
    t_grid = np.asarray(t_grid, dtype=float)

    def xi(s):
        return x0 * np.cos(w * s) + (v0 / w) * np.sin(w * s)

    def xi_dot(s):
        return -x0 * w * np.sin(w * s) + v0 * np.cos(w * s)

    def integrand(s):
        xd = xi_dot(s)
        xx = xi(s)
        return float(-0.5 * m * (xd @ xd) + 0.5 * m * w * w * (xx @ xx))

    g = np.zeros(t_grid.size)
    for i in range(1, t_grid.size):
        seg, _ = quad(integrand, t_grid[i - 1], t_grid[i],
                      epsabs=1e-13, epsrel=1e-13, limit=200)
        g[i] = g[i - 1] + seg

    path = TrajectoryEnsemble(
        t_grid,
        np.stack([xi(t) for t in t_grid])[None],
        np.stack([xi_dot(t) for t in t_grid])[None],
        "classical",
    )

    delta = 1e-5 * max(1.0, float(t_grid[-1] - t_grid[0]))
    residual = np.zeros(t_grid.size)
    for i, t in enumerate(t_grid):
        x_here = xi(t)

        def action(s):
            gs, _ = quad(integrand, t, s, epsabs=1e-13, epsrel=1e-13)
            return float(m * xi_dot(s) @ x_here) + g[i] + gs

        s_t = (action(t + delta) - action(t - delta)) / (2.0 * delta)
        vd = xi_dot(t)
        residual[i] = s_t + 0.5 * m * float(vd @ vd) + 0.5 * m * w * w * float(
            x_here @ x_here
        )

    return DeterministSolution(path=path, g=g, residual=residual)
