"""Closed-form coherent states of the 2-d isotropic harmonic oscillator.

These are the exact packets used as ground truth everywhere else: Gaussian
density of hbar-dependent width sigma = sqrt(hbar / (2 m w)) riding the
classical orbit xi(t), with action

    S(x, t) = m xi_dot(t) . x + g(t) - hbar w t,
    g(t) = integral_0^t ( -m xi_dot^2 / 2 + m w^2 xi^2 / 2 ) ds,

and quantum potential Q(x, t) = hbar w - m w^2 |x - xi(t)|^2 / 2. The triple
(rho, S) satisfies both quantum Hamilton-Jacobi and continuity equations
exactly, so sqrt(rho) exp(iS/hbar) solves the Schrodinger equation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .grids import Grid, WaveField


@dataclass(frozen=True)
class CoherentState:
    omega: float
    mass: float
    hbar: float
    x0: np.ndarray
    v0: np.ndarray

    def __post_init__(self):
        if min(self.omega, self.mass, self.hbar) <= 0:
            raise ValueError("omega, mass, hbar must be positive")
        x0 = np.asarray(self.x0, dtype=float).reshape(2)
        v0 = np.asarray(self.v0, dtype=float).reshape(2)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "v0", v0)

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.hbar / (2.0 * self.mass * self.omega)))

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega

    def with_hbar(self, hbar: float) -> "CoherentState":
        return CoherentState(self.omega, self.mass, hbar, self.x0, self.v0)


def xi(cs: CoherentState, t):
    t = np.asarray(t, dtype=float)
    c = np.cos(cs.omega * t)[..., None]
    s = np.sin(cs.omega * t)[..., None]
    return cs.x0 * c + (cs.v0 / cs.omega) * s


def xi_dot(cs: CoherentState, t):
    t = np.asarray(t, dtype=float)
    c = np.cos(cs.omega * t)[..., None]
    s = np.sin(cs.omega * t)[..., None]
    return -cs.x0 * cs.omega * s + cs.v0 * c


def xi_ddot(cs: CoherentState, t):
    return -cs.omega**2 * xi(cs, t)


def g_closed(cs: CoherentState, t):
    """Accumulated Lagrangian-like phase; antiderivative form.

    d/ds (xi . xi_dot) = xi_dot^2 - w^2 xi^2, so the integral collapses to
    -(m/2) (xi(t).xi_dot(t) - x0.v0).
    """
    t = np.asarray(t, dtype=float)
    cross = np.sum(xi(cs, t) * xi_dot(cs, t), axis=-1)
    return -(cs.mass / 2.0) * (cross - float(cs.x0 @ cs.v0))


def g_quadrature(cs: CoherentState, t: float) -> float:
    """Direct quadrature of the defining integrand (slow; for cross-checks)."""

    def integrand(s):
        xd = xi_dot(cs, s)
        xx = xi(cs, s)
        return float(
            -0.5 * cs.mass * (xd @ xd) + 0.5 * cs.mass * cs.omega**2 * (xx @ xx)
        )

    val, _ = quad(integrand, 0.0, t, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def density(cs: CoherentState, x, t):
    """rho(x, t); x has shape (..., 2)."""
    x = np.asarray(x, dtype=float)
    s2 = cs.sigma**2
    d = x - xi(cs, t)
    return np.exp(-np.sum(d * d, axis=-1) / (2.0 * s2)) / (2.0 * np.pi * s2)


def action(cs: CoherentState, x, t):
    """S(x, t) = m xi_dot . x + g(t) - hbar w t; x has shape (..., 2)."""
    x = np.asarray(x, dtype=float)
    lin = np.tensordot(x, cs.mass * xi_dot(cs, float(t)), axes=([-1], [0]))
    return lin + g_closed(cs, float(t)) - cs.hbar * cs.omega * float(t)


def quantum_potential(cs: CoherentState, x, t):
    x = np.asarray(x, dtype=float)
    d = x - xi(cs, t)
    return cs.hbar * cs.omega - 0.5 * cs.mass * cs.omega**2 * np.sum(d * d, axis=-1)


def wavefield(cs: CoherentState, grid: Grid, t: float = 0.0) -> WaveField:
    """Sample sqrt(rho) exp(iS/hbar) on a 2-d grid."""
    if grid.dim != 2:
        raise ValueError("coherent states are 2-d; need a 2-d grid")
    pts = np.stack(grid.mesh(), axis=-1)
    vals = np.sqrt(density(cs, pts, t)) * np.exp(1j * action(cs, pts, t) / cs.hbar)
    return WaveField(grid, vals, cs.hbar, cs.mass, time=float(t))


@dataclass(frozen=True)
class LimitFields:
    """hbar -> 0 limit data at one time: point trajectory + affine action."""

    t: float
    xi: np.ndarray
    velocity: np.ndarray
    action_gradient: np.ndarray   # m * xi_dot, constant over space
    action_offset: float          # g(t)

    def action(self, x):
        x = np.asarray(x, dtype=float)
        return np.tensordot(x, self.action_gradient, axes=([-1], [0])) + self.action_offset


def limit_fields(cs: CoherentState, t: float) -> LimitFields:
    xd = xi_dot(cs, float(t))
    return LimitFields(
        t=float(t),
        xi=xi(cs, float(t)),
        velocity=xd,
        action_gradient=cs.mass * xd,
        action_offset=float(g_closed(cs, float(t))),
    )


def gauss_hermite_expectation(cs: CoherentState, f, t: float, order: int = 48) -> float:
    """integral f(x) rho(x, t) dx by tensor Gauss-Hermite quadrature.

    Independent of any grid; used as the oracle for weak-convergence checks.
    """
    nodes, weights = np.polynomial.hermite_e.hermegauss(order)
    center = xi(cs, float(t))
    xs = center[0] + cs.sigma * nodes
    ys = center[1] + cs.sigma * nodes
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([gx, gy], axis=-1)
    wx, wy = np.meshgrid(weights, weights, indexing="ij")
    return float(np.sum(f(pts) * wx * wy) / (2.0 * np.pi))
