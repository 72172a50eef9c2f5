"""Guidance-equation particle transport on streamed field snapshots.

The velocity field is grad(S)/m, optionally augmented (two dimensions only)
with the spin term (hbar / 2m) grad(ln rho) x k for a spin axis k = +-z, so

    v = grad(S)/m + s * (hbar / 2m) * (d_y ln rho, -d_x ln rho).

Particles advance by classic RK4 across each snapshot interval, with the
velocity interpolated multilinearly in space and linearly in time between
the two bounding snapshots. A particle that lands where the density sits
below the decomposition floor (or inside an absorbing-mask sink, which
drives the density below the floor anyway) is flagged absorbed and frozen.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import Grid, RealField, WaveField, spectral_gradient
from .madelung import MadelungFields, decompose
from .trajectories import TrajectoryEnsemble


class SpinAxisError(ValueError):
    """Spin-augmented velocities exist only for 2-d fields with k = +-z."""


class RejectionSamplingError(RuntimeError):
    """Rejection sampler exceeded its attempt budget (pathological density)."""


@dataclass(eq=False)
class VelocityFieldSample:
    grid: Grid
    time: float
    vectors: np.ndarray   # (dim, *shape), zero-filled outside `valid`
    valid: np.ndarray


def _spin_sign(spin_axis) -> float:
    if np.isscalar(spin_axis):
        s = float(spin_axis)
    else:
        ax = np.asarray(spin_axis, dtype=float).ravel()
        if ax.size != 3 or np.any(ax[:2] != 0.0) or ax[2] == 0.0:
            raise SpinAxisError("spin axis must point out of the plane (0, 0, +-1)")
        s = ax[2] / abs(ax[2])
    if abs(s) != 1.0:
        raise SpinAxisError("spin axis must be a unit vector (0, 0, +-1)")
    return s


def velocity_field(fields: MadelungFields, spin_axis=None) -> VelocityFieldSample:
    """Velocity sample from decomposed fields; NaNs replaced by 0 off-support."""
    vecs = []
    for g in fields.grad_action:
        vecs.append(np.where(fields.defined, g, 0.0) / fields.mass)
    if spin_axis is not None:
        if fields.grid.dim != 2:
            raise SpinAxisError("spin-augmented velocity requires a 2-d field")
        s = _spin_sign(spin_axis)
        grad_rho = spectral_gradient(fields.grid, fields.rho.values)
        with np.errstate(invalid="ignore", divide="ignore"):
            dlnx = np.where(fields.defined, grad_rho[0] / fields.rho.values, 0.0)
            dlny = np.where(fields.defined, grad_rho[1] / fields.rho.values, 0.0)
        pref = s * fields.hbar / (2.0 * fields.mass)
        vecs[0] = vecs[0] + pref * dlny
        vecs[1] = vecs[1] - pref * dlnx
    return VelocityFieldSample(
        grid=fields.grid,
        time=fields.time,
        vectors=np.stack(vecs),
        valid=fields.defined.copy(),
    )


def _as_sample(item, spin_axis, rho_floor) -> VelocityFieldSample:
    if isinstance(item, VelocityFieldSample):
        return item
    if isinstance(item, MadelungFields):
        return velocity_field(item, spin_axis)
    if isinstance(item, WaveField):
        fields = decompose(item, rho_floor=rho_floor, unwrap=False)
        return velocity_field(fields, spin_axis)
    raise TypeError(f"cannot build a velocity sample from {type(item).__name__}")


def _frac_indices(grid: Grid, positions):
    idx, frac = [], []
    for a in range(grid.dim):
        u = (positions[:, a] + grid.extents[a] / 2.0) / grid.spacings[a]
        base = np.floor(u)
        idx.append(base.astype(int) % grid.points[a])
        frac.append(u - base)
    return idx, frac


def interpolate_fields(grid: Grid, arrays, positions):
    """Multilinear periodic interpolation; arrays (C, *shape) -> (C, N)."""
    idx, frac = _frac_indices(grid, positions)
    if grid.dim == 1:
        i0 = idx[0]
        i1 = (i0 + 1) % grid.points[0]
        w = frac[0]
        return arrays[:, i0] * (1.0 - w) + arrays[:, i1] * w
    i0, j0 = idx
    i1 = (i0 + 1) % grid.points[0]
    j1 = (j0 + 1) % grid.points[1]
    wx, wy = frac
    return (
        arrays[:, i0, j0] * (1 - wx) * (1 - wy)
        + arrays[:, i1, j0] * wx * (1 - wy)
        + arrays[:, i0, j1] * (1 - wx) * wy
        + arrays[:, i1, j1] * wx * wy
    )


def _valid_at(grid: Grid, valid, positions):
    idxs = []
    for a in range(grid.dim):
        u = (positions[:, a] + grid.extents[a] / 2.0) / grid.spacings[a]
        idxs.append(np.rint(u).astype(int) % grid.points[a])
    if grid.dim == 1:
        return valid[idxs[0]]
    return valid[idxs[0], idxs[1]]


def integrate_ensemble(initial_positions, snapshots, spin_axis=None,
                       substeps: int = 1, rho_floor: float = None) -> TrajectoryEnsemble:
    """March particles through a stream of snapshots.

    snapshots: iterable of WaveField, MadelungFields or VelocityFieldSample
    at uniformly spaced times.
    """
    x = np.atleast_2d(np.asarray(initial_positions, dtype=float)).copy()
    n = x.shape[0]
    stream = iter(snapshots)
    try:
        first = _as_sample(next(stream), spin_axis, rho_floor)
    except StopIteration:
        raise ValueError("snapshot stream is empty") from None
    if x.shape[1] != first.grid.dim:
        raise ValueError("initial positions dimension does not match the grid")
    grid = first.grid

    times = [first.time]
    pos_out = [x.copy()]
    absorbed = np.full(n, -1, dtype=int)
    alive = _valid_at(grid, first.valid, x)
    absorbed[~alive] = 0
    vel0 = interpolate_fields(grid, first.vectors, x).T
    vel0[~alive] = 0.0
    vel_out = [vel0]

    prev = first
    dt_ref = None
    step_idx = 0
    for item in stream:
        cur = _as_sample(item, spin_axis, rho_floor)
        step_idx += 1
        dt = cur.time - prev.time
        if dt <= 0:
            raise ValueError("snapshot times must increase")
        if dt_ref is None:
            dt_ref = dt
        elif abs(dt - dt_ref) > 1e-9 * dt_ref:
            raise ValueError("snapshot stream must be uniformly spaced in time")
        h = dt / substeps
        va, vb = prev.vectors, cur.vectors

        def vel(pts, theta):
            sa = interpolate_fields(grid, va, pts).T
            sb = interpolate_fields(grid, vb, pts).T
            return (1.0 - theta) * sa + theta * sb

        for s in range(substeps):
            if not alive.any():
                break
            th0 = s / substeps
            th_half = (s + 0.5) / substeps
            th1 = (s + 1.0) / substeps
            xa = x[alive]
            k1 = vel(xa, th0)
            k2 = vel(xa + 0.5 * h * k1, th_half)
            k3 = vel(xa + 0.5 * h * k2, th_half)
            k4 = vel(xa + h * k3, th1)
            x[alive] = xa + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        newly_dead = alive & ~_valid_at(grid, cur.valid, x)
        absorbed[newly_dead] = step_idx
        alive &= ~newly_dead

        v_now = interpolate_fields(grid, cur.vectors, x).T
        v_now[~alive] = 0.0
        times.append(cur.time)
        pos_out.append(x.copy())
        vel_out.append(v_now)
        prev = cur

    kind = "bohm_spin" if spin_axis is not None else "bohm"
    return TrajectoryEnsemble(
        times=np.asarray(times),
        positions=np.stack(pos_out, axis=1),
        velocities=np.stack(vel_out, axis=1),
        kind=kind,
        absorbed_step=absorbed,
    )


def sample_initial_positions(rho0: RealField, n: int, seed: int,
                             max_batches: int = 1000) -> np.ndarray:
    """Draw n positions from a gridded density; (n, dim).

    1-d uses the inverse CDF of the piecewise-constant cell masses; 2-d uses
    rejection sampling against the multilinearly interpolated density over
    the support bounding box. Fully determined by the seed.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    grid = rho0.grid
    rng = np.random.default_rng(seed)
    vals = np.asarray(rho0.values, dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("density must be finite for sampling")
    total = vals.sum()
    if total <= 0:
        raise ValueError("density has no mass to sample")
    if n == 0:
        return np.zeros((0, grid.dim))

    if grid.dim == 1:
        h = grid.spacings[0]
        cdf = np.cumsum(vals) * h
        u = rng.random(n) * cdf[-1]
        cells = np.searchsorted(cdf, u, side="left")
        prev = np.concatenate([[0.0], cdf[:-1]])[cells]
        frac = (u - prev) / (vals[cells] * h)
        xs = grid.axes[0][cells] - h / 2.0 + frac * h
        return xs[:, None]

    support = vals > 1e-12 * vals.max()
    ii, jj = np.nonzero(support)
    pad = 1
    lo = np.array([grid.axes[0][max(ii.min() - pad, 0)],
                   grid.axes[1][max(jj.min() - pad, 0)]])
    hi = np.array([grid.axes[0][min(ii.max() + pad, grid.points[0] - 1)],
                   grid.axes[1][min(jj.max() + pad, grid.points[1] - 1)]])
    vmax = vals.max()
    out = np.empty((0, 2))
    batch = max(4 * n, 1024)
    arrays = vals[None]
    for _ in range(max_batches):
        pts = lo + rng.random((batch, 2)) * (hi - lo)
        dens = interpolate_fields(grid, arrays, pts)[0]
        keep = rng.random(batch) * vmax < dens
        out = np.concatenate([out, pts[keep]])
        if out.shape[0] >= n:
            return out[:n]
    raise RejectionSamplingError(
        f"accepted only {out.shape[0]}/{n} samples after {max_batches} batches"
    )
