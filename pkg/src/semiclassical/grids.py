"""Uniform periodic grids and the field containers everything else shares.

Boxes are axis-aligned, centered on the origin, and periodic: axis ``a`` has
``points[a]`` nodes at ``x_i = -extent/2 + i * spacing`` with
``spacing = extent / points``. Spectral derivatives therefore assume the
sampled function is effectively periodic; scenarios keep wave packets away
from the box edges so that assumption holds to machine precision.

Two wavenumber arrays are kept per axis. ``k`` carries the Nyquist bin with
positive sign and is only ever used through ``k**2`` (kinetic factors,
Laplacians), where the sign is immaterial. ``k_grad`` zeroes the Nyquist bin:
it is the odd-derivative multiplier, keeps gradients of real fields real, and
has a symmetric spectrum (sums to zero).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

DENSITY = "density"
ACTION = "action"
ENERGY = "energy"
DIMENSIONLESS = "dimensionless"

_UNITS = (DENSITY, ACTION, ENERGY, DIMENSIONLESS)


def _axis_wavenumbers(n: int, extent: float):
    k = 2.0 * np.pi * sfft.fftfreq(n, d=extent / n)
    k[n // 2] = abs(k[n // 2])
    k_grad = k.copy()
    k_grad[n // 2] = 0.0
    return k, k_grad


@dataclass(frozen=True, eq=False)
class Grid:
    """Periodic box sampled on a uniform tensor grid."""

    dim: int
    extents: tuple
    points: tuple
    spacings: tuple
    axes: tuple        # per-axis node coordinates
    k: tuple           # per-axis DFT wavenumbers, Nyquist kept (positive)
    k_grad: tuple      # per-axis derivative multipliers, Nyquist zeroed

    @property
    def shape(self):
        return self.points

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    def mesh(self):
        """Node coordinate arrays, one per axis, ij-indexed."""
        return np.meshgrid(*self.axes, indexing="ij")

    def nodes(self):
        """All node coordinates as an (n_nodes, dim) array."""
        return np.stack([m.ravel() for m in self.mesh()], axis=-1)

    def k_squared(self):
        """|k|^2 on the full spectral grid."""
        parts = np.meshgrid(*self.k, indexing="ij")
        return sum(p * p for p in parts)

    def integrate(self, values) -> float:
        return float(np.sum(values) * self.cell_volume)

    def same_layout(self, other: "Grid") -> bool:
        return (
            self.dim == other.dim
            and self.points == other.points
            and np.allclose(self.extents, other.extents, rtol=0, atol=1e-15)
        )


def make_grid(dim: int, extents, points) -> Grid:
    """Build a periodic grid; point counts must be even and at least 8."""
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    extents = tuple(float(e) for e in np.atleast_1d(extents))
    points = tuple(int(p) for p in np.atleast_1d(points))
    if len(extents) != dim or len(points) != dim:
        raise ValueError("extents/points length must match dim")
    for e in extents:
        if not e > 0:
            raise ValueError(f"extents must be positive, got {e}")
    for p in points:
        if p < 8 or p % 2 != 0:
            raise ValueError(f"point counts must be even and >= 8, got {p}")
    spacings = tuple(e / p for e, p in zip(extents, points))
    axes = tuple(
        -e / 2.0 + h * np.arange(p) for e, p, h in zip(extents, points, spacings)
    )
    ks, kgs = [], []
    for p, e in zip(points, extents):
        k, kg = _axis_wavenumbers(p, e)
        ks.append(k)
        kgs.append(kg)
    return Grid(dim, extents, points, spacings, axes, tuple(ks), tuple(kgs))


@dataclass(frozen=True, eq=False)
class RealField:
    """Real scalar samples on a grid, tagged with their physical meaning."""

    grid: Grid
    values: np.ndarray
    units: str = DIMENSIONLESS

    def __post_init__(self):
        if self.units not in _UNITS:
            raise ValueError(f"unknown units tag {self.units!r}")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError(
                f"values shape {vals.shape} != grid shape {self.grid.shape}"
            )
        if self.units == DENSITY:
            finite = vals[np.isfinite(vals)]
            if finite.size and finite.min() < -1e-13 * max(finite.max(), 1.0):
                raise ValueError("density fields must be nonnegative")
        object.__setattr__(self, "values", vals)

    def integrate(self) -> float:
        return self.grid.integrate(self.values)


@dataclass(frozen=True, eq=False)
class WaveField:
    """Complex wave function samples plus the constants that give it meaning."""

    grid: Grid
    values: np.ndarray
    hbar: float
    mass: float
    time: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.shape:
            raise ValueError(
                f"values shape {vals.shape} != grid shape {self.grid.shape}"
            )
        if not (self.hbar > 0 and self.mass > 0):
            raise ValueError("hbar and mass must be positive")
        object.__setattr__(self, "values", vals)

    def norm(self) -> float:
        return float(np.sqrt(self.grid.integrate(np.abs(self.values) ** 2)))

    def normalized(self) -> "WaveField":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero field")
        return WaveField(self.grid, self.values / n, self.hbar, self.mass, self.time)

    def density(self) -> RealField:
        return RealField(self.grid, np.abs(self.values) ** 2, DENSITY)

    def with_values(self, values, time=None) -> "WaveField":
        return WaveField(
            self.grid,
            values,
            self.hbar,
            self.mass,
            self.time if time is None else time,
        )


def spectral_gradient(grid: Grid, values):
    """Per-axis spectral derivatives of an array (real in -> real out).

    Uses the Nyquist-zeroed multipliers. Only trustworthy for fields that are
    effectively periodic on the box; a sawtooth (e.g. an unwrapped linear
    phase) rings globally (Gibbs).
    """
    vals = np.asarray(values)
    spec = sfft.fftn(vals, workers=-1)
    out = []
    for axis in range(grid.dim):
        shape = [1] * grid.dim
        shape[axis] = grid.points[axis]
        mult = 1j * grid.k_grad[axis].reshape(shape)
        d = sfft.ifftn(spec * mult, workers=-1)
        out.append(d.real if not np.iscomplexobj(vals) else d)
    return out


def spectral_laplacian(grid: Grid, values):
    vals = np.asarray(values)
    spec = sfft.fftn(vals, workers=-1)
    lap = sfft.ifftn(-grid.k_squared() * spec, workers=-1)
    return lap.real if not np.iscomplexobj(vals) else lap


def gradient(field: RealField):
    """Spectral gradient of a real field, one RealField per axis."""
    return [
        RealField(field.grid, g, field.units)
        for g in spectral_gradient(field.grid, field.values)
    ]


def laplacian(field: RealField) -> RealField:
    return RealField(field.grid, spectral_laplacian(field.grid, field.values), field.units)
