"""Potential catalog, closed-form classical actions, classical trajectories.

Positions follow one convention throughout: for 1-d potentials any float
array is a coordinate array; for 2-d potentials the last axis has length 2.
``classical_action`` broadcasts ``x`` against ``x0`` so callers can evaluate
whole candidate banks in one shot.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .trajectories import TrajectoryEnsemble

KINDS = ("free", "linear", "harmonic", "double_slit")
ACTION_KINDS = ("free", "linear", "harmonic")

CAUSTIC_TOL = 1e-9


class CausticError(RuntimeError):
    """Classical action requested at (or numerically on top of) a focal time."""


class UnsupportedPotentialError(ValueError):
    """Operation needs a closed form this potential kind does not have."""


@dataclass(frozen=True)
class PotentialSpec:
    kind: str
    mass: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnsupportedPotentialError(f"unknown potential kind {self.kind!r}")
        if not self.mass > 0:
            raise ValueError("mass must be positive")

    @property
    def has_classical_action(self) -> bool:
        return self.kind in ACTION_KINDS

    @property
    def time_dependent(self) -> bool:
        return False

    def evaluate(self, grid, t: float = 0.0) -> np.ndarray:
        """Potential sampled on every grid node."""
        mesh = grid.mesh()
        pts = np.stack(mesh, axis=-1) if grid.dim > 1 else mesh[0]
        return self.evaluate_at(pts, t)

    def evaluate_at(self, points, t: float = 0.0) -> np.ndarray:
        x = np.asarray(points, dtype=float)
        if self.kind == "free":
            return np.zeros(_point_shape(x, self._dim_hint(x)))
        if self.kind == "linear":
            f = np.asarray(self.params["force"], dtype=float)
            return -_dot(x, f)
        if self.kind == "harmonic":
            w = self.params["omega"]
            return 0.5 * self.mass * w * w * _sq(x, self._dim_hint(x))
        return self._double_slit_potential(x)

    def force_at(self, points, t: float = 0.0) -> np.ndarray:
        """-grad V, same shape as points."""
        x = np.asarray(points, dtype=float)
        if self.kind == "free":
            return np.zeros_like(x)
        if self.kind == "linear":
            f = np.asarray(self.params["force"], dtype=float)
            if f.size == 1:
                return np.full_like(x, float(f[0]))
            return np.broadcast_to(f, x.shape).copy()
        if self.kind == "harmonic":
            w = self.params["omega"]
            return -self.mass * w * w * x
        return self._double_slit_force(x)

    def _dim_hint(self, x: np.ndarray) -> int:
        if self.kind == "linear":
            f = np.atleast_1d(np.asarray(self.params["force"]))
            return f.size
        if self.kind == "double_slit":
            return 2
        # free/harmonic are isotropic; infer from the trailing axis
        return x.shape[-1] if x.ndim and x.shape[-1] == 2 else 1

    # -- double-slit barrier: smooth wall with two smooth openings ----------

    def _slit_geometry(self):
        p = self.params
        return (
            p["height"],
            p.get("center_x", 0.0),
            p["thickness"],
            p["separation"],
            p["slit_width"],
            p.get("smoothing", 0.5),
        )

    def _double_slit_potential(self, pts):
        v0, cx, b, d, sw, w = self._slit_geometry()
        x, y = pts[..., 0], pts[..., 1]
        wall = _smooth_box(x, cx - b / 2, cx + b / 2, w)
        open_up = _smooth_box(y, d / 2 - sw / 2, d / 2 + sw / 2, w)
        open_dn = _smooth_box(y, -d / 2 - sw / 2, -d / 2 + sw / 2, w)
        return v0 * wall * (1.0 - open_up) * (1.0 - open_dn)

    def _double_slit_force(self, pts):
        v0, cx, b, d, sw, w = self._slit_geometry()
        x, y = pts[..., 0], pts[..., 1]
        wall = _smooth_box(x, cx - b / 2, cx + b / 2, w)
        dwall = _smooth_box_d(x, cx - b / 2, cx + b / 2, w)
        ou = _smooth_box(y, d / 2 - sw / 2, d / 2 + sw / 2, w)
        od = _smooth_box(y, -d / 2 - sw / 2, -d / 2 + sw / 2, w)
        dou = _smooth_box_d(y, d / 2 - sw / 2, d / 2 + sw / 2, w)
        dod = _smooth_box_d(y, -d / 2 - sw / 2, -d / 2 + sw / 2, w)
        block = (1.0 - ou) * (1.0 - od)
        fx = -v0 * dwall * block
        fy = -v0 * wall * (-dou * (1.0 - od) - (1.0 - ou) * dod)
        return np.stack([fx, fy], axis=-1)


def _smooth_box(u, lo, hi, w):
    return 0.5 * (np.tanh((u - lo) / w) - np.tanh((u - hi) / w))


def _smooth_box_d(u, lo, hi, w):
    return 0.5 / w * (np.cosh((u - lo) / w) ** -2 - np.cosh((u - hi) / w) ** -2)


def _dot(x, f):
    f = np.atleast_1d(f)
    if f.size == 1:
        return f[0] * np.asarray(x)
    return np.tensordot(np.asarray(x), f, axes=([-1], [0]))


def _sq(x, dim):
    x = np.asarray(x)
    if dim == 2:
        return np.sum(x * x, axis=-1)
    return x * x


def _point_shape(x, dim):
    return x.shape[:-1] if (dim == 2 and x.ndim) else x.shape


# -- catalog constructors ----------------------------------------------------


def free(mass: float) -> PotentialSpec:
    spec = PotentialSpec("free", mass)
    _short_time_check(spec, dim=1)
    return spec


def linear(mass: float, force) -> PotentialSpec:
    spec = PotentialSpec("linear", mass, {"force": np.atleast_1d(np.asarray(force, dtype=float))})
    _short_time_check(spec, dim=spec.params["force"].size)
    return spec


def harmonic(mass: float, omega: float) -> PotentialSpec:
    if not omega > 0:
        raise ValueError("omega must be positive")
    spec = PotentialSpec("harmonic", mass, {"omega": float(omega)})
    _short_time_check(spec, dim=1)
    return spec


def double_slit(
    mass: float,
    height: float,
    separation: float,
    slit_width: float,
    thickness: float,
    center_x: float = 0.0,
    smoothing: float = 0.5,
) -> PotentialSpec:
    if min(height, separation, slit_width, thickness, smoothing) <= 0:
        raise ValueError("double-slit geometry parameters must be positive")
    return PotentialSpec(
        "double_slit",
        mass,
        {
            "height": float(height),
            "separation": float(separation),
            "slit_width": float(slit_width),
            "thickness": float(thickness),
            "center_x": float(center_x),
            "smoothing": float(smoothing),
        },
    )


# -- closed-form classical action --------------------------------------------


def classical_action(spec: PotentialSpec, x, t: float, x0):
    """Action of the classical path from x0 to x in time t.

    free:     m |x-x0|^2 / (2t)
    linear:   free term + f.(x+x0) t/2 - |f|^2 t^3 / (24 m)
    harmonic: (m w / (2 sin wt)) ((|x|^2+|x0|^2) cos wt - 2 x.x0)
    """
    if not spec.has_classical_action:
        raise UnsupportedPotentialError(
            f"{spec.kind!r} has no closed-form classical action"
        )
    if not t > 0:
        raise ValueError("classical_action needs t > 0")
    m = spec.mass
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if spec.kind == "free":
        dim = spec._dim_hint(x)
        return m * _sq(x - x0, dim) / (2.0 * t)
    if spec.kind == "linear":
        f = spec.params["force"]
        dim = f.size
        fsq = float(f @ f)
        return (
            m * _sq(x - x0, dim) / (2.0 * t)
            + _dot(x + x0, f) * t / 2.0
            - fsq * t**3 / (24.0 * m)
        )
    w = spec.params["omega"]
    s, c = np.sin(w * t), np.cos(w * t)
    if abs(s) < CAUSTIC_TOL:
        raise CausticError(f"harmonic action singular at w*t = {w * t!r} (sin ~ 0)")
    dim = spec._dim_hint(x)
    cross = _dot_pair(x, x0, dim)
    return (m * w / (2.0 * s)) * ((_sq(x, dim) + _sq(x0, dim)) * c - 2.0 * cross)


def _dot_pair(x, x0, dim):
    if dim == 2:
        return np.sum(np.asarray(x) * np.asarray(x0), axis=-1)
    return np.asarray(x) * np.asarray(x0)


def connecting_velocity(spec: PotentialSpec, x, t: float, x0):
    """Initial velocity of the classical path from x0 that reaches x at t."""
    if not spec.has_classical_action:
        raise UnsupportedPotentialError(f"{spec.kind!r} has no closed-form paths")
    if not t > 0:
        raise ValueError("connecting_velocity needs t > 0")
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if spec.kind == "free":
        return (x - x0) / t
    if spec.kind == "linear":
        f = spec.params["force"]
        f = f if f.size > 1 else float(f[0])
        return (x - x0) / t - f * t / (2.0 * spec.mass)
    w = spec.params["omega"]
    s = np.sin(w * t)
    if abs(s) < CAUSTIC_TOL:
        raise CausticError(f"harmonic path singular at w*t = {w * t!r}")
    return (x - x0 * np.cos(w * t)) * w / s


def _short_time_check(spec: PotentialSpec, dim: int):
    # spot check: S(x, t->0+, x0) must blow up off-diagonal and vanish on it
    x0 = np.full(dim, 0.37) if dim == 2 else 0.37
    x1 = np.full(dim, 1.52) if dim == 2 else 1.52
    for t in (1e-6, 1e-8):
        if not abs(classical_action(spec, x1, t, x0)) > 1e4:
            raise AssertionError("classical action failed short-time blow-up check")
        if not abs(classical_action(spec, x0, t, x0)) < 1e-3:
            raise AssertionError("classical action failed short-time diagonal check")


# -- classical trajectories ---------------------------------------------------


def advance_ensemble(spec: PotentialSpec, x0s, v0s, t_grid):
    """Propagate N classical particles; closed forms where the catalog has
    them, RK45 with adaptive step control otherwise.

    x0s, v0s: (N, dim); returns positions, velocities of shape (N, T, dim).
    """
    x0s = np.atleast_2d(np.asarray(x0s, dtype=float))
    v0s = np.atleast_2d(np.asarray(v0s, dtype=float))
    t = np.asarray(t_grid, dtype=float)
    if x0s.shape != v0s.shape:
        raise ValueError("x0s and v0s must have matching shapes")
    n, dim = x0s.shape
    # initial conditions hold at t_grid[0]
    tt = (t - t[0])[None, :, None]
    m = spec.mass
    if spec.kind == "free":
        pos = x0s[:, None, :] + v0s[:, None, :] * tt
        vel = np.broadcast_to(v0s[:, None, :], pos.shape).copy()
        return pos, vel
    if spec.kind == "linear":
        f = spec.params["force"]
        if f.size != dim:
            raise ValueError("force dimension does not match particle dimension")
        acc = f[None, None, :] / m
        pos = x0s[:, None, :] + v0s[:, None, :] * tt + 0.5 * acc * tt**2
        vel = np.broadcast_to(v0s[:, None, :], pos.shape) + acc * tt
        return pos, vel
    if spec.kind == "harmonic":
        w = spec.params["omega"]
        c = np.cos(w * tt)
        s = np.sin(w * tt)
        pos = x0s[:, None, :] * c + v0s[:, None, :] * s / w
        vel = -x0s[:, None, :] * w * s + v0s[:, None, :] * c
        return pos, vel

    def rhs(ti, state):
        xs = state[: n * dim].reshape(n, dim)
        vs = state[n * dim :].reshape(n, dim)
        return np.concatenate([vs.ravel(), (spec.force_at(xs, ti) / m).ravel()])

    state0 = np.concatenate([x0s.ravel(), v0s.ravel()])
    sol = solve_ivp(
        rhs, (t[0], t[-1]), state0, t_eval=t, method="RK45", rtol=1e-10, atol=1e-12
    )
    if not sol.success:
        raise RuntimeError(f"trajectory integration failed: {sol.message}")
    ys = sol.y.T  # (T, 2*n*dim)
    pos = ys[:, : n * dim].reshape(t.size, n, dim).transpose(1, 0, 2)
    vel = ys[:, n * dim :].reshape(t.size, n, dim).transpose(1, 0, 2)
    return pos, vel


def classical_trajectory(spec: PotentialSpec, x0, v0, t_grid) -> TrajectoryEnsemble:
    """Single classical path sampled on t_grid."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    v0 = np.atleast_1d(np.asarray(v0, dtype=float))
    pos, vel = advance_ensemble(spec, x0[None, :], v0[None, :], t_grid)
    return TrajectoryEnsemble(np.asarray(t_grid, dtype=float), pos, vel, "classical")
