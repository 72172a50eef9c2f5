"""Strang split-step spectral propagator for the Schrodinger equation.

One step of size dt is half potential kick, full kinetic factor in k-space,
half potential kick:

    psi <- exp(-i V dt / 2 hbar) F^-1 exp(-i hbar k^2 dt / 2 m) F exp(-i V dt / 2 hbar) psi

which is norm-preserving and second order in dt. An optional multiplicative
boundary mask (values in [0, 1]) is applied after each step to absorb
outgoing flux; the lost probability is reported, never renormalized away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import fft as sfft

from .grids import Grid, WaveField
from .potentials import PotentialSpec


class AliasingError(ValueError):
    """Kinetic phase per step too large for the grid's spectral band."""


class ResolutionError(ValueError):
    """Grid too coarse for the requested hbar / velocity scale."""

    def __init__(self, message, required_points=None):
        super().__init__(message)
        self.required_points = required_points


@dataclass(frozen=True, eq=False)
class PropagatorConfig:
    dt: float
    steps_per_output: int = 1
    boundary_mask: np.ndarray = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.steps_per_output < 1:
            raise ValueError("steps_per_output must be >= 1")
        if self.boundary_mask is not None:
            mask = np.asarray(self.boundary_mask, dtype=float)
            if mask.min() < 0 or mask.max() > 1:
                raise ValueError("boundary_mask values must lie in [0, 1]")
            object.__setattr__(self, "boundary_mask", mask)


def max_kinetic_phase(grid: Grid, hbar: float, mass: float, dt: float) -> float:
    kmax2 = sum(float(np.max(k**2)) for k in grid.k)
    return hbar * kmax2 * dt / (2.0 * mass)


def aliasing_limit_dt(grid: Grid, hbar: float, mass: float) -> float:
    """Largest dt with kinetic phase per step below pi."""
    kmax2 = sum(float(np.max(k**2)) for k in grid.k)
    return 2.0 * math.pi * mass / (hbar * kmax2)


def validate_config(cfg: PropagatorConfig, psi: WaveField):
    phase = max_kinetic_phase(psi.grid, psi.hbar, psi.mass, cfg.dt)
    if phase >= math.pi:
        raise AliasingError(
            f"kinetic phase per step {phase:.3f} >= pi; "
            f"use dt < {aliasing_limit_dt(psi.grid, psi.hbar, psi.mass):.3e}"
        )
    if cfg.boundary_mask is not None and cfg.boundary_mask.shape != psi.grid.shape:
        raise ValueError("boundary_mask shape must match the grid")


def required_points(extent: float, mass: float, v_max: float, hbar: float,
                    points_per_wavelength: int = 8) -> int:
    """Node count needed for >= 8 points per de Broglie wavelength 2*pi*hbar/(m v)."""
    lam = 2.0 * math.pi * hbar / (mass * v_max)
    n = int(math.ceil(points_per_wavelength * extent / lam))
    return n + (n % 2)


def check_resolution(grid: Grid, mass: float, hbar: float, v_max: float):
    """Reject grids with fewer than 8 points per de Broglie wavelength."""
    if not v_max > 0:
        return
    for axis in range(grid.dim):
        need = required_points(grid.extents[axis], mass, v_max, hbar)
        if grid.points[axis] < need:
            raise ResolutionError(
                f"axis {axis}: {grid.points[axis]} points < {need} required for "
                f"hbar={hbar:g}, v_max={v_max:g} "
                f"(wavelength {2.0 * math.pi * hbar / (mass * v_max):.3e}, "
                f"extent {grid.extents[axis]:g})",
                required_points=need,
            )


def _phase_factors(psi: WaveField, spec: PotentialSpec, cfg: PropagatorConfig):
    v = spec.evaluate(psi.grid)
    half_v = np.exp(-0.5j * v * cfg.dt / psi.hbar)
    kinetic = np.exp(-0.5j * psi.hbar * psi.grid.k_squared() * cfg.dt / psi.mass)
    return half_v, kinetic


def step(psi: WaveField, spec: PotentialSpec, cfg: PropagatorConfig) -> WaveField:
    """One Strang step; prefer evolve()/evolve_stream() for long runs."""
    validate_config(cfg, psi)
    half_v, kinetic = _phase_factors(psi, spec, cfg)
    vals = _advance(psi.values, half_v, kinetic, cfg.boundary_mask)
    return psi.with_values(vals, time=psi.time + cfg.dt)


def _advance(vals, half_v, kinetic, mask):
    vals = half_v * vals
    vals = sfft.ifftn(kinetic * sfft.fftn(vals, workers=-1), workers=-1)
    vals = half_v * vals
    if mask is not None:
        vals = mask * vals
    return vals


def evolve_stream(psi0: WaveField, spec: PotentialSpec, cfg: PropagatorConfig,
                  t_final: float):
    """Yield the state at every output time (t0 included), memory-light."""
    validate_config(cfg, psi0)
    n_steps = int(round(t_final / cfg.dt))
    if abs(n_steps * cfg.dt - t_final) > 1e-9 * max(1.0, abs(t_final)):
        raise ValueError("t_final must be a multiple of dt")
    if n_steps % cfg.steps_per_output != 0:
        raise ValueError("t_final/dt must be a multiple of steps_per_output")
    half_v, kinetic = _phase_factors(psi0, spec, cfg)
    t0 = psi0.time
    yield psi0
    vals = psi0.values
    for i in range(1, n_steps + 1):
        vals = _advance(vals, half_v, kinetic, cfg.boundary_mask)
        if i % cfg.steps_per_output == 0:
            yield psi0.with_values(vals, time=t0 + i * cfg.dt)


@dataclass(eq=False)
class EvolutionResult:
    snapshots: list
    times: np.ndarray
    observables: dict = field(default_factory=dict)
    absorbed_probability: float = 0.0

    @property
    def final(self) -> WaveField:
        return self.snapshots[-1]


def evolve(psi0: WaveField, spec: PotentialSpec, cfg: PropagatorConfig,
           t_final: float, observers: dict = None,
           keep: str = "all") -> EvolutionResult:
    """Run to t_final.

    keep: "all" retains every output-cadence snapshot, "ends" just the first
    and last (observers still see every output time).
    """
    observers = observers or {}
    snaps = []
    times = []
    table = {name: [] for name in observers}
    last = None
    for snap in evolve_stream(psi0, spec, cfg, t_final):
        times.append(snap.time)
        for name, fn in observers.items():
            table[name].append(float(fn(snap)))
        if keep == "all":
            snaps.append(snap)
        last = snap
    if keep != "all":
        snaps = [psi0, last]
    absorbed = 0.0
    if cfg.boundary_mask is not None:
        absorbed = max(0.0, 1.0 - last.norm() ** 2)
    return EvolutionResult(
        snapshots=snaps,
        times=np.asarray(times),
        observables={k: np.asarray(v) for k, v in table.items()},
        absorbed_probability=absorbed,
    )


# -- observers ----------------------------------------------------------------


def norm_observer(psi: WaveField) -> float:
    return psi.norm()


def make_energy_observer(spec: PotentialSpec) -> Callable[[WaveField], float]:
    cache = {}

    def energy(psi: WaveField) -> float:
        key = id(psi.grid)
        if key not in cache:
            cache[key] = (spec.evaluate(psi.grid), psi.grid.k_squared())
        v, k2 = cache[key]
        spec_vals = sfft.fftn(psi.values, workers=-1)
        n = psi.values.size
        kinetic = (
            psi.hbar**2
            / (2.0 * psi.mass)
            * float(np.sum(k2 * np.abs(spec_vals) ** 2))
            * psi.grid.cell_volume
            / n
        )
        potential = psi.grid.integrate(v * np.abs(psi.values) ** 2)
        return kinetic + potential

    return energy


def make_centroid_observer(axis: int) -> Callable[[WaveField], float]:
    def centroid(psi: WaveField) -> float:
        rho = np.abs(psi.values) ** 2
        mesh = psi.grid.mesh()
        total = float(np.sum(rho))
        return float(np.sum(mesh[axis] * rho) / total)

    return centroid
