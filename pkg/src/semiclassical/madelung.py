"""Polar (hydrodynamic) decomposition of wave fields.

psi = sqrt(rho) exp(i S / hbar) with

    rho = |psi|^2
    S   = hbar * unwrapped phase        (defined where rho >= rho_floor)
    Q   = -(hbar^2 / 2m) lap(sqrt rho) / sqrt rho

The action gradient is computed directly as hbar Im(conj(psi) grad psi) / rho,
which stays periodic-safe even when S itself grows linearly across the box
(where a spectral derivative of S would ring); the unwrapped S is for
action-valued diagnostics, not for differentiation.

Unwrapping is a breadth-first flood fill over the above-floor region seeded
at the global density maximum: each node's branch is chosen within (-pi, pi]
of an already-unwrapped neighbor, with neighbor priority +x, -x, +y, -y and
wavefront rounds advancing strictly breadth-first, so the result is
deterministic. If the region splits into several connected components each is
unwrapped from its own density maximum and the fields are flagged: phases of
different components are not comparable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy import ndimage

from .grids import ACTION, DENSITY, ENERGY, DIMENSIONLESS, Grid, RealField, WaveField
from .grids import spectral_gradient, spectral_laplacian
from .potentials import PotentialSpec

TWO_PI = 2.0 * np.pi


class DisconnectedSupportWarning(UserWarning):
    """Above-floor region split into disconnected components."""


def _wrap(delta):
    """Reduce to the branch in (-pi, pi]."""
    return np.mod(delta - np.pi, -TWO_PI) + np.pi


@dataclass(eq=False)
class MadelungFields:
    grid: Grid
    time: float
    hbar: float
    mass: float
    rho: RealField
    grad_action: list          # per-axis arrays, NaN below floor
    qpotential: RealField      # NaN below floor
    phase_raw: np.ndarray      # principal-branch phase, defined everywhere
    defined: np.ndarray        # rho >= rho_floor
    components: np.ndarray     # 0 below floor, 1..C component labels
    disconnected: bool
    rho_floor: float
    action: RealField = None   # hbar * unwrapped phase, NaN below floor

    @property
    def n_components(self) -> int:
        return int(self.components.max())


def decompose(psi: WaveField, rho_floor: float = None, unwrap: bool = True) -> MadelungFields:
    """Split a wave field into (rho, S, Q) with NaN outside the support.

    rho_floor is an absolute density; default 1e-12 * max(rho).
    """
    rho = np.abs(psi.values) ** 2
    if rho_floor is None:
        rho_floor = 1e-12 * float(rho.max())
    defined = rho >= rho_floor
    if not defined.any():
        raise ValueError("rho_floor leaves no nodes above the floor")
    phase_raw = np.angle(psi.values)

    grad_psi = spectral_gradient(psi.grid, psi.values)
    grad_action = []
    for gp in grad_psi:
        ga = psi.hbar * np.imag(np.conj(psi.values) * gp)
        with np.errstate(invalid="ignore", divide="ignore"):
            ga = np.where(defined, ga / rho, np.nan)
        grad_action.append(ga)

    sqrt_rho = np.sqrt(rho)
    lap = spectral_laplacian(psi.grid, sqrt_rho)
    with np.errstate(invalid="ignore", divide="ignore"):
        qvals = np.where(
            defined, -(psi.hbar**2) / (2.0 * psi.mass) * lap / sqrt_rho, np.nan
        )

    labels, n_comp = ndimage.label(defined)
    disconnected = n_comp > 1
    if disconnected:
        warnings.warn(
            f"above-floor region has {n_comp} disconnected components; "
            "actions are only comparable within a component",
            DisconnectedSupportWarning,
            stacklevel=2,
        )

    action_field = None
    if unwrap:
        phi = _unwrap_phase(phase_raw, rho, labels, n_comp)
        action_field = RealField(psi.grid, psi.hbar * phi, ACTION)

    return MadelungFields(
        grid=psi.grid,
        time=psi.time,
        hbar=psi.hbar,
        mass=psi.mass,
        rho=RealField(psi.grid, rho, DENSITY),
        grad_action=grad_action,
        qpotential=RealField(psi.grid, qvals, ENERGY),
        phase_raw=phase_raw,
        defined=defined,
        components=labels,
        disconnected=disconnected,
        rho_floor=float(rho_floor),
        action=action_field,
    )


def _unwrap_phase(phase_raw, rho, labels, n_comp):
    if phase_raw.ndim == 1:
        return _unwrap_1d(phase_raw, rho, labels, n_comp)
    return _unwrap_flood(phase_raw, rho, labels, n_comp)


def _unwrap_1d(phase_raw, rho, labels, n_comp):
    # contiguous runs: cumulative wrapped increments outward from each anchor
    out = np.full_like(phase_raw, np.nan)
    deltas = _wrap(np.diff(phase_raw))
    for comp in range(1, n_comp + 1):
        idx = np.nonzero(labels == comp)[0]
        lo, hi = idx[0], idx[-1]
        anchor = lo + int(np.argmax(rho[lo : hi + 1]))
        out[anchor] = phase_raw[anchor]
        if anchor < hi:
            out[anchor + 1 : hi + 1] = phase_raw[anchor] + np.cumsum(
                deltas[anchor:hi]
            )
        if anchor > lo:
            out[lo:anchor] = phase_raw[anchor] - np.cumsum(
                deltas[lo:anchor][::-1]
            )[::-1]
    return out


def _unwrap_flood(phase_raw, rho, labels, n_comp):
    out = np.full_like(phase_raw, np.nan)
    done = np.zeros(phase_raw.shape, dtype=bool)
    mask_all = labels > 0
    for comp in range(1, n_comp + 1):
        comp_mask = labels == comp
        anchor = np.unravel_index(
            int(np.argmax(np.where(comp_mask, rho, -1.0))), rho.shape
        )
        out[anchor] = phase_raw[anchor]
        done[anchor] = True
    shifts = [(0, 1), (0, -1), (1, 1), (1, -1)]
    vals = np.where(done, out, 0.0)
    while True:
        prev_done = done.copy()
        grew = False
        for axis, s in shifts:
            nb_done = np.roll(prev_done, s, axis=axis)
            nb_vals = np.roll(vals, s, axis=axis)
            newly = mask_all & nb_done & ~done
            if not newly.any():
                continue
            prop = nb_vals + _wrap(phase_raw - nb_vals)
            vals = np.where(newly, prop, vals)
            done |= newly
            grew = True
        if not grew:
            break
    out = np.where(done, vals, np.nan)
    return out


@dataclass(eq=False)
class MadelungResiduals:
    hj: RealField           # quantum Hamilton-Jacobi residual, NaN off-region
    continuity: RealField
    region: np.ndarray
    coverage: float
    midpoint_time: float


def madelung_residuals(fa: MadelungFields, fb: MadelungFields,
                       spec: PotentialSpec) -> MadelungResiduals:
    """Residuals of the two evolution equations from a snapshot pair.

    Time derivatives are centered at the midpoint (t_a + t_b)/2: dS/dt uses
    the pointwise wrapped phase increment (valid while |S_b - S_a| < pi*hbar;
    choose the snapshot spacing accordingly) and spatial terms average the
    two snapshots. Both residuals vanish to O(dt^2) + spectral accuracy on
    exact solutions.
    """
    if not fa.grid.same_layout(fb.grid):
        raise ValueError("snapshots live on different grids")
    dt = fb.time - fa.time
    if not dt > 0:
        raise ValueError("snapshots must be ordered in time and distinct")
    if fa.hbar != fb.hbar or fa.mass != fb.mass:
        raise ValueError("snapshots carry different hbar/mass")
    hbar, m = fa.hbar, fa.mass
    region = fa.defined & fb.defined

    s_t = hbar * _wrap(fb.phase_raw - fa.phase_raw) / dt
    grad_sq = 0.5 * (
        sum(np.square(g) for g in fa.grad_action)
        + sum(np.square(g) for g in fb.grad_action)
    )
    q_mean = 0.5 * (fa.qpotential.values + fb.qpotential.values)
    t_mid = 0.5 * (fa.time + fb.time)
    v = spec.evaluate(fa.grid, t_mid)
    hj = np.where(region, s_t + grad_sq / (2.0 * m) + v + q_mean, np.nan)

    rho_t = (fb.rho.values - fa.rho.values) / dt
    div = np.zeros_like(rho_t)
    for f in (fa, fb):
        flux = [
            np.where(f.defined, f.rho.values * g / m, 0.0) for g in f.grad_action
        ]
        for axis, comp in enumerate(flux):
            div += 0.5 * spectral_gradient(f.grid, comp)[axis]
    continuity = np.where(region, rho_t + div, np.nan)

    return MadelungResiduals(
        hj=RealField(fa.grid, hj, ENERGY),
        continuity=RealField(fa.grid, continuity, DIMENSIONLESS),
        region=region,
        coverage=float(region.mean()),
        midpoint_time=t_mid,
    )
