"""Scenario harness: hbar ladders, paired-seed sweeps, run directories.

A scenario couples one potential, one initial condition and a ladder of
hbar values hbar_base/divisor. Sweeps reuse one seed for every rung and
for the classical reference ensemble, so per-particle deviations compare
like with like. Report dictionaries carry no wall-clock data; timing goes
into the run-directory manifest instead, keeping metrics.json byte-stable
for a fixed (scenario, seed) pair.

Scenario text format (INI sections, parsed by the cli module):

    [units]      system = natural            (mandatory, only value)
    [scenario]   name, kind, seed, t_final, hbar_base?, hbar_divisors?,
                 n_outputs?, n_particles?
    [grid]       extents, points             (determinist may omit: auto)
    [potential]  kind, mass, + kind-specific parameters
    [initial]    type = gaussian (center, sigma, velocity?)
                 type = coherent (x0, v0)
    [solver]     dt? (auto), absorbing_width?
"""

from __future__ import annotations

import configparser
import difflib
import hashlib
import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import RectBivariateSpline

from . import coherent as coh
from .bohm import integrate_ensemble, sample_initial_positions
from .classical import evolve_classical_density, hopf_lax_solve
from .grids import ACTION, DENSITY, Grid, RealField, WaveField, make_grid
from .madelung import DisconnectedSupportWarning, decompose, madelung_residuals
from .potentials import KINDS, PotentialSpec, advance_ensemble, classical_trajectory
from .solver import (
    PropagatorConfig,
    ResolutionError,
    aliasing_limit_dt,
    check_resolution,
    evolve_stream,
    make_energy_observer,
    required_points,
    step,
)
from .trajectories import TrajectoryEnsemble

CORE_FLOOR = 1e-3          # metrics ignore density below this fraction of max
FIELD_DUMP_CAP = 128       # per-axis node cap for fields/*.csv
TRAJECTORY_DUMP_CAP = 100  # particles per rung written to trajectories.csv
CLASSICAL_DIVISOR = 0.0    # hbar_divisor sentinel for classical rows


class ScenarioError(ValueError):
    """Configuration rejected; .field names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


# -- scenario definition and parsing ------------------------------------------

_SECTIONS = {
    "units": ("system",),
    "scenario": ("name", "kind", "seed", "hbar_base", "hbar_divisors",
                 "t_final", "n_outputs", "n_particles"),
    "grid": ("extents", "points"),
    "potential": ("kind", "mass", "omega", "force", "height", "separation",
                  "slit_width", "thickness", "center_x", "smoothing"),
    "initial": ("type", "center", "sigma", "velocity", "x0", "v0"),
    "solver": ("dt", "absorbing_width"),
}

_POTENTIAL_PARAMS = {
    "free": (),
    "linear": ("force",),
    "harmonic": ("omega",),
    "double_slit": ("height", "separation", "slit_width", "thickness",
                    "center_x", "smoothing"),
}

DEFAULT_DIVISORS = (1.0, 10.0, 100.0, 1000.0, 10000.0)


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str                 # statistical | determinist
    seed: int
    hbar_base: float
    hbar_divisors: tuple
    t_final: float
    n_outputs: int
    n_particles: int
    extents: tuple
    points: tuple             # () means per-rung auto sizing (determinist)
    potential: PotentialSpec
    initial_type: str         # gaussian | coherent
    center: tuple
    sigma: float
    velocity: tuple
    x0: tuple
    v0: tuple
    dt: float                 # 0.0 means auto
    absorbing_width: float

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def hbar_values(self) -> tuple:
        return tuple(self.hbar_base / d for d in self.hbar_divisors)


def _hint(name, options):
    close = difflib.get_close_matches(name, sorted(options), n=1)
    return f"; did you mean {close[0]!r}?" if close else ""


def _get(mapping, section, key, default=None):
    return mapping.get(section, {}).get(key, default)


def _float(raw, field, positive=False, nonnegative=False):
    try:
        val = float(raw)
    except (TypeError, ValueError):
        raise ScenarioError(f"{field}: expected a number, got {raw!r}", field)
    if positive and not val > 0:
        raise ScenarioError(f"{field}: must be positive, got {raw!r}", field)
    if nonnegative and val < 0:
        raise ScenarioError(f"{field}: must be >= 0, got {raw!r}", field)
    return val


def _int(raw, field, minimum=None):
    try:
        val = int(str(raw).strip())
    except (TypeError, ValueError):
        raise ScenarioError(f"{field}: expected an integer, got {raw!r}", field)
    if minimum is not None and val < minimum:
        raise ScenarioError(f"{field}: must be >= {minimum}, got {val}", field)
    return val


def _floats(raw, field):
    parts = [p for p in str(raw).replace(",", " ").split() if p]
    if not parts:
        raise ScenarioError(f"{field}: expected numbers, got {raw!r}", field)
    return tuple(_float(p, field) for p in parts)


def _ints(raw, field):
    return tuple(_int(p, field) for p in str(raw).replace(",", " ").split() if p)


def scenario_from_mapping(mapping) -> Scenario:
    """Build a Scenario from {section: {key: raw string}}; every default is
    resolved here so the echo is complete. Raises ScenarioError with the
    offending section.key on any problem."""
    if isinstance(mapping, configparser.ConfigParser):
        mapping = {s: dict(mapping[s]) for s in mapping.sections()}
    for section, keys in mapping.items():
        if section not in _SECTIONS:
            raise ScenarioError(
                f"unknown section [{section}]{_hint(section, _SECTIONS)}", section)
        for key in keys:
            if key not in _SECTIONS[section]:
                raise ScenarioError(
                    f"{section}.{key}: unknown key"
                    f"{_hint(key, _SECTIONS[section])}", f"{section}.{key}")

    system = _get(mapping, "units", "system")
    if system is None:
        raise ScenarioError("units.system is required (natural)", "units.system")
    if system.strip() != "natural":
        raise ScenarioError(
            f"units.system: only 'natural' is supported, got {system!r}",
            "units.system")

    name = (_get(mapping, "scenario", "name") or "").strip()
    if not name:
        raise ScenarioError("scenario.name is required", "scenario.name")
    kind = (_get(mapping, "scenario", "kind") or "").strip()
    if kind not in ("statistical", "determinist"):
        raise ScenarioError(
            f"scenario.kind: expected statistical or determinist, got {kind!r}",
            "scenario.kind")
    seed_raw = _get(mapping, "scenario", "seed")
    if seed_raw is None:
        raise ScenarioError("scenario.seed is required; sweeps are seed-paired "
                            "and refuse to pick one silently", "scenario.seed")
    seed = _int(seed_raw, "scenario.seed", minimum=0)
    t_final = _float(_get(mapping, "scenario", "t_final"),
                     "scenario.t_final", positive=True)
    n_outputs = _int(_get(mapping, "scenario", "n_outputs", 40),
                     "scenario.n_outputs", minimum=1)
    n_particles = _int(_get(mapping, "scenario", "n_particles", 0),
                       "scenario.n_particles", minimum=0)

    divisors_raw = _get(mapping, "scenario", "hbar_divisors")
    if divisors_raw is None:
        divisors = DEFAULT_DIVISORS
    else:
        divisors = _floats(divisors_raw, "scenario.hbar_divisors")
    for d in divisors:
        if not d > 0:
            raise ScenarioError("scenario.hbar_divisors: must be positive",
                                "scenario.hbar_divisors")
    if any(b <= a for a, b in zip(divisors, divisors[1:])):
        raise ScenarioError("scenario.hbar_divisors: must be strictly increasing",
                            "scenario.hbar_divisors")

    pot_kind = (_get(mapping, "potential", "kind") or "").strip()
    if pot_kind not in KINDS:
        raise ScenarioError(
            f"potential.kind: expected one of {', '.join(KINDS)}, got {pot_kind!r}"
            f"{_hint(pot_kind, KINDS)}", "potential.kind")
    mass = _float(_get(mapping, "potential", "mass"), "potential.mass",
                  positive=True)
    allowed = _POTENTIAL_PARAMS[pot_kind]
    for key in mapping.get("potential", {}):
        if key in ("kind", "mass"):
            continue
        if key not in allowed:
            raise ScenarioError(
                f"potential.{key}: not a parameter of kind {pot_kind!r}",
                f"potential.{key}")
    params = {}
    if pot_kind == "harmonic":
        params["omega"] = _float(_get(mapping, "potential", "omega"),
                                 "potential.omega", positive=True)
    elif pot_kind == "linear":
        params["force"] = _floats(_get(mapping, "potential", "force"),
                                  "potential.force")
    elif pot_kind == "double_slit":
        for key in ("height", "separation", "slit_width", "thickness"):
            params[key] = _float(_get(mapping, "potential", key),
                                 f"potential.{key}", positive=True)
        params["center_x"] = _float(
            _get(mapping, "potential", "center_x", 0.0), "potential.center_x")
        params["smoothing"] = _float(
            _get(mapping, "potential", "smoothing", 0.5),
            "potential.smoothing", positive=True)
    # tuples keep PotentialSpec equality well defined for round-trip tests
    potential = PotentialSpec(pot_kind, mass, params)

    initial_type = (_get(mapping, "initial", "type") or "").strip()
    if initial_type not in ("gaussian", "coherent"):
        raise ScenarioError(
            f"initial.type: expected gaussian or coherent, got {initial_type!r}",
            "initial.type")
    if kind == "statistical" and initial_type != "gaussian":
        raise ScenarioError(
            "statistical scenarios need an hbar-independent initial density; "
            "use initial.type = gaussian", "initial.type")
    if kind == "determinist":
        if initial_type != "coherent":
            raise ScenarioError(
                "determinist scenarios follow a coherent state; "
                "use initial.type = coherent", "initial.type")
        if pot_kind != "harmonic":
            raise ScenarioError(
                "determinist scenarios need potential.kind = harmonic",
                "potential.kind")

    center = sigma = velocity = None
    x0 = v0 = None
    if initial_type == "gaussian":
        center = _floats(_get(mapping, "initial", "center"), "initial.center")
        sigma = _float(_get(mapping, "initial", "sigma"), "initial.sigma",
                       positive=True)
        vel_raw = _get(mapping, "initial", "velocity")
        velocity = (_floats(vel_raw, "initial.velocity") if vel_raw is not None
                    else (0.0,) * len(center))
        if len(velocity) != len(center):
            raise ScenarioError("initial.velocity: length must match center",
                                "initial.velocity")
    else:
        x0 = _floats(_get(mapping, "initial", "x0"), "initial.x0")
        v0 = _floats(_get(mapping, "initial", "v0"), "initial.v0")
        if len(x0) != 2 or len(v0) != 2:
            raise ScenarioError("initial.x0/v0: coherent states are 2-d",
                                "initial.x0")

    # grid; determinist scenarios may leave both to auto-sizing
    extents_raw = _get(mapping, "grid", "extents")
    points_raw = _get(mapping, "grid", "points")
    if points_raw is not None and str(points_raw).strip() == "auto":
        points_raw = None
    if kind == "statistical":
        if extents_raw is None or points_raw is None:
            raise ScenarioError("grid.extents and grid.points are required for "
                                "statistical scenarios", "grid.extents")
    if extents_raw is not None:
        extents = _floats(extents_raw, "grid.extents")
        for e in extents:
            if not e > 0:
                raise ScenarioError("grid.extents: must be positive",
                                    "grid.extents")
    else:
        extents = None
    points = _ints(points_raw, "grid.points") if points_raw is not None else ()
    if points:
        for p in points:
            if p < 8 or p % 2:
                raise ScenarioError("grid.points: counts must be even and >= 8",
                                    "grid.points")

    hbar_raw = _get(mapping, "scenario", "hbar_base")
    if hbar_raw is not None:
        hbar_base = _float(hbar_raw, "scenario.hbar_base", positive=True)
    elif initial_type == "gaussian" and any(v != 0.0 for v in velocity):
        # packet spans ~20 de Broglie wavelengths at the base rung
        speed = math.hypot(*velocity)
        hbar_base = 3.0 * sigma * mass * speed / (20.0 * math.pi)
    else:
        hbar_base = 1.0

    if initial_type == "coherent":
        dim = 2
    else:
        dim = len(center)
    if dim not in (1, 2):
        raise ScenarioError("initial.center: only 1-d and 2-d supported",
                            "initial.center")
    if pot_kind == "double_slit" and dim != 2:
        raise ScenarioError("potential.kind double_slit needs a 2-d scenario",
                            "potential.kind")
    if pot_kind == "linear" and len(params["force"]) != dim:
        raise ScenarioError("potential.force: length must match the dimension",
                            "potential.force")

    if extents is None:
        # cover the orbit plus 6 sigma of the widest rung
        cs = coh.CoherentState(params["omega"], mass, hbar_base, x0, v0)
        reach = (math.hypot(*x0) + math.hypot(*v0) / params["omega"]
                 + 6.0 * cs.sigma)
        side = 0.5 * math.ceil(4.0 * reach)
        extents = (side, side)
    if len(extents) != dim:
        raise ScenarioError("grid.extents: length must match the dimension",
                            "grid.extents")
    if points and len(points) != dim:
        raise ScenarioError("grid.points: length must match extents",
                            "grid.points")
    if kind == "statistical" and not points:
        raise ScenarioError("grid.points is required for statistical scenarios",
                            "grid.points")

    dt_raw = _get(mapping, "solver", "dt", "auto")
    if str(dt_raw).strip() == "auto":
        dt = 0.0
    else:
        dt = _float(dt_raw, "solver.dt", positive=True)
    absorbing = _float(_get(mapping, "solver", "absorbing_width", 0.0),
                       "solver.absorbing_width", nonnegative=True)
    if absorbing >= min(extents) / 2:
        raise ScenarioError("solver.absorbing_width: must be smaller than half "
                            "the narrowest extent", "solver.absorbing_width")

    if kind == "determinist" and n_particles > 0 and n_outputs % 2:
        raise ScenarioError("scenario.n_outputs: must be even when determinist "
                            "runs carry particles (half-period histogram)",
                            "scenario.n_outputs")

    return Scenario(
        name=name, kind=kind, seed=seed, hbar_base=hbar_base,
        hbar_divisors=tuple(float(d) for d in divisors),
        t_final=t_final, n_outputs=n_outputs, n_particles=n_particles,
        extents=tuple(extents), points=tuple(points), potential=potential,
        initial_type=initial_type,
        center=tuple(center) if center else (),
        sigma=float(sigma) if sigma else 0.0,
        velocity=tuple(velocity) if velocity else (),
        x0=tuple(x0) if x0 else (), v0=tuple(v0) if v0 else (),
        dt=dt, absorbing_width=absorbing,
    )


def _fmt(values):
    return ", ".join(repr(float(v)) for v in values)


def scenario_echo(sc: Scenario) -> str:
    """Canonical resolved scenario text; parses back to an equal Scenario."""
    lines = ["[units]", "system = natural", "", "[scenario]",
             f"name = {sc.name}", f"kind = {sc.kind}", f"seed = {sc.seed}",
             f"hbar_base = {sc.hbar_base!r}",
             f"hbar_divisors = {_fmt(sc.hbar_divisors)}",
             f"t_final = {sc.t_final!r}", f"n_outputs = {sc.n_outputs}",
             f"n_particles = {sc.n_particles}", "", "[grid]",
             f"extents = {_fmt(sc.extents)}"]
    if sc.points:
        lines.append(f"points = {', '.join(str(p) for p in sc.points)}")
    else:
        lines.append("points = auto")
    lines += ["", "[potential]", f"kind = {sc.potential.kind}",
              f"mass = {sc.potential.mass!r}"]
    if sc.potential.kind == "harmonic":
        lines.append(f"omega = {sc.potential.params['omega']!r}")
    elif sc.potential.kind == "linear":
        lines.append(f"force = {_fmt(sc.potential.params['force'])}")
    elif sc.potential.kind == "double_slit":
        p = sc.potential.params
        for key in ("height", "separation", "slit_width", "thickness",
                    "center_x", "smoothing"):
            lines.append(f"{key} = {p[key]!r}")
    lines += ["", "[initial]", f"type = {sc.initial_type}"]
    if sc.initial_type == "gaussian":
        lines += [f"center = {_fmt(sc.center)}", f"sigma = {sc.sigma!r}",
                  f"velocity = {_fmt(sc.velocity)}"]
    else:
        lines += [f"x0 = {_fmt(sc.x0)}", f"v0 = {_fmt(sc.v0)}"]
    lines += ["", "[solver]",
              "dt = auto" if sc.dt == 0.0 else f"dt = {sc.dt!r}",
              f"absorbing_width = {sc.absorbing_width!r}", ""]
    return "\n".join(lines)


# -- per-rung planning ---------------------------------------------------------


@dataclass(frozen=True)
class RungPlan:
    divisor: float
    hbar: float
    grid: Grid
    required: tuple           # de Broglie minimum per axis
    dt: float
    steps_per_output: int


def _coherent_state(sc: Scenario, hbar: float) -> coh.CoherentState:
    return coh.CoherentState(sc.potential.params["omega"], sc.potential.mass,
                             hbar, sc.x0, sc.v0)


def _v_max_estimate(sc: Scenario, hbar: float) -> float:
    m = sc.potential.mass
    if sc.initial_type == "coherent":
        cs = _coherent_state(sc, hbar)
        omega = sc.potential.params["omega"]
        orbit = omega * math.hypot(*sc.x0) + math.hypot(*sc.v0)
        return orbit + 3.0 * cs.sigma * omega
    spread = 3.0 * hbar / (2.0 * m * sc.sigma)
    return math.hypot(*sc.velocity) + spread


def _even(n: int) -> int:
    return n + (n % 2)


def _rung_points(sc: Scenario, hbar: float, divisor: float, v_max: float):
    if sc.kind == "statistical":
        return sc.points  # the grid is part of the hbar-independent data
    if sc.points:
        # explicit counts fix the base rung; sigma ~ sqrt(hbar) sets the rest
        scale = math.sqrt(divisor)
        return tuple(_even(int(math.ceil(p * scale))) for p in sc.points)
    cs = _coherent_state(sc, hbar)
    pts = []
    for extent in sc.extents:
        width_rule = int(math.ceil(4.0 * extent / cs.sigma))
        debroglie = required_points(extent, sc.potential.mass, v_max, hbar)
        pts.append(_even(max(width_rule, debroglie, 64)))
    return tuple(pts)


def _rung_dt(sc: Scenario, grid: Grid, hbar: float):
    per = sc.t_final / sc.n_outputs
    limit = aliasing_limit_dt(grid, hbar, sc.potential.mass)
    if sc.dt > 0.0:
        k = max(1, int(math.ceil(per / sc.dt - 1e-9)))
        dt = per / k
        if dt >= limit:
            raise ScenarioError(
                f"solver.dt: {dt:g} is at or beyond the kinetic aliasing limit "
                f"{limit:g} for hbar={hbar:g}; shrink dt or coarsen the grid",
                "solver.dt")
        return dt, k
    target = min(0.5 * limit, per)
    k = max(1, int(math.ceil(per / target)))
    return per / k, k


def rung_plans(sc: Scenario):
    """Grid, node requirement and time step per rung; everything a run
    derives from configuration happens here, so a scenario that plans
    cleanly cannot fail on configuration later."""
    plans = []
    for divisor in sc.hbar_divisors:
        hbar = sc.hbar_base / divisor
        v_max = _v_max_estimate(sc, hbar)
        points = _rung_points(sc, hbar, divisor, v_max)
        required = tuple(
            required_points(e, sc.potential.mass, v_max, hbar) if v_max > 0
            else 0
            for e in sc.extents)
        grid = make_grid(sc.dim, sc.extents, points)
        try:
            check_resolution(grid, sc.potential.mass, hbar, v_max)
        except ResolutionError as err:
            raise ScenarioError(
                f"hbar={hbar:g} (divisor {divisor:g}) under-resolved: {err}",
                "grid.points") from err
        dt, spo = _rung_dt(sc, grid, hbar)
        plans.append(RungPlan(divisor=float(divisor), hbar=float(hbar),
                              grid=grid, required=required, dt=dt,
                              steps_per_output=spo))
    return plans


# -- initial data ---------------------------------------------------------------


def _gaussian_at(mesh, center, sigma):
    dim = len(mesh)
    norm = (2.0 * math.pi * sigma * sigma) ** (-dim / 2.0)
    q = sum((m - c) ** 2 for m, c in zip(mesh, center))
    return norm * np.exp(-q / (2.0 * sigma * sigma))


def initial_density(sc: Scenario, grid: Grid, hbar: float = None) -> RealField:
    if sc.initial_type == "gaussian":
        return RealField(grid, _gaussian_at(grid.mesh(), sc.center, sc.sigma),
                         DENSITY)
    cs = _coherent_state(sc, hbar)
    pts = np.stack(grid.mesh(), axis=-1)
    return RealField(grid, cs.density(pts, 0.0).reshape(grid.shape), DENSITY)


def initial_action(sc: Scenario, grid: Grid) -> RealField:
    mesh = grid.mesh()
    m = sc.potential.mass
    vals = sum(m * v * x for v, x in zip(sc.velocity, mesh))
    if np.isscalar(vals):
        vals = np.zeros(grid.shape)
    return RealField(grid, vals, ACTION)


def initial_wavefield(sc: Scenario, grid: Grid, hbar: float) -> WaveField:
    if sc.initial_type == "coherent":
        return coh.wavefield(_coherent_state(sc, hbar), grid, 0.0)
    amp = np.sqrt(initial_density(sc, grid).values)
    if any(v != 0.0 for v in sc.velocity):
        vals = amp * np.exp(1j * initial_action(sc, grid).values / hbar)
    else:
        vals = amp.astype(complex)
    return WaveField(grid, vals, hbar=hbar, mass=sc.potential.mass,
                     time=0.0).normalized()


def absorbing_mask(grid: Grid, width: float) -> np.ndarray:
    """cos^2 ramp to zero over `width` at every box edge."""
    mask = np.ones(grid.shape)
    for a in range(grid.dim):
        ax = grid.axes[a]
        lo, hi = ax[0], ax[0] + grid.extents[a]
        dist = np.minimum(ax - lo, hi - ax)
        ramp = np.where(dist < width,
                        np.sin(0.5 * math.pi * dist / width) ** 2, 1.0)
        shape = [1] * grid.dim
        shape[a] = ax.size
        mask = mask * ramp.reshape(shape)
    return mask


# -- metric helpers -------------------------------------------------------------


def _loglog_fit(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    if keep.sum() < 2:
        return None
    lx, ly = np.log(x[keep]), np.log(y[keep])
    coeffs = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((np.polyval(coeffs, lx) - ly) ** 2)))
    return {"slope": float(coeffs[0]), "residual": resid, "n": int(keep.sum())}


def histogram_l1(rho: RealField, positions, center, half_width,
                 bins_per_axis) -> float:
    """L1 distance between an empirical histogram and the gridded density.

    Bins are blocks of whole grid cells inside a window of +-half_width
    around center (clamped to the box); mass outside the window counts as
    one extra bin on each side of the comparison.
    """
    g = rho.grid
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    edges, starts, cells = [], [], []
    for a in range(g.dim):
        h = g.spacings[a]
        cpb = max(1, int(round(2.0 * half_width / (bins_per_axis * h))))
        cpb = min(cpb, g.points[a] // bins_per_axis)
        total = cpb * bins_per_axis
        face0 = g.axes[a][0] - 0.5 * h
        i0 = int(round((center[a] - 0.5 * total * h - face0) / h))
        i0 = min(max(i0, 0), g.points[a] - total)
        edges.append(face0 + h * (i0 + cpb * np.arange(bins_per_axis + 1)))
        starts.append(i0)
        cells.append(cpb)
    counts, _ = np.histogramdd(positions, bins=edges)
    emp = counts / positions.shape[0]
    mass = rho.values * g.cell_volume
    sub = mass
    for a, (i0, cpb) in enumerate(zip(starts, cells)):
        sub = np.take(sub, np.arange(i0, i0 + cpb * bins_per_axis), axis=a)
    shape = []
    for cpb in cells:
        shape += [bins_per_axis, cpb]
    blocks = sub.reshape(shape)
    for a in range(len(cells)):
        blocks = blocks.sum(axis=a + 1)
    outside = (float(mass.sum()) - float(blocks.sum()),
               1.0 - float(emp.sum()))
    return float(np.abs(emp - blocks).sum() + abs(outside[1] - outside[0]))


def fringe_channel_count(ys, min_fraction=0.02) -> int:
    """Clusters of a 1-d sample, split at anomalously large gaps.

    The cut is median positive gap times log2(10 n), which keeps the expected
    number of spurious splits of a structureless sample near 0.1 whatever the
    sample size (consecutive spacings are roughly exponential, so a gap beats
    c medians with probability 2^-c). Fragments holding fewer than
    max(2, min_fraction * n) points do not count as channels.
    """
    ys = np.sort(np.asarray(ys, dtype=float))
    if ys.size == 0:
        return 0
    gaps = np.diff(ys)
    positive = gaps[gaps > 1e-12]
    if positive.size == 0:
        return 1
    cut = float(np.median(positive)) * math.log2(10.0 * ys.size)
    sizes = np.diff(np.concatenate([[0], np.where(gaps > cut)[0] + 1,
                                    [ys.size]]))
    return int(np.sum(sizes >= max(2.0, min_fraction * ys.size)))


def axis_crossing_count(positions, axis=1, tol=1e-12) -> int:
    """Sign changes of one coordinate along each path, summed over paths."""
    total = 0
    coord = positions[:, :, axis]
    for row in coord:
        signs = np.sign(row[np.abs(row) > tol])
        if signs.size > 1:
            total += int(np.sum(signs[1:] * signs[:-1] < 0))
    return total


def mean_heading_change(positions, alive) -> float:
    """Mean over surviving paths of the summed turning angle (radians)."""
    steps = np.diff(positions[alive], axis=1)
    norms = np.linalg.norm(steps, axis=-1)
    sums = []
    for path, nrm in zip(steps, norms):
        ok = nrm > 1e-9
        idx = np.where(ok[1:] & ok[:-1])[0]
        if idx.size == 0:
            sums.append(0.0)
            continue
        a, b = path[idx], path[idx + 1]
        cosang = np.einsum("ij,ij->i", a, b) / (nrm[idx] * nrm[idx + 1])
        sums.append(float(np.arccos(np.clip(cosang, -1.0, 1.0)).sum()))
    return float(np.mean(sums)) if sums else 0.0


def classical_density_closed_form(sc: Scenario, grid: Grid, t: float):
    """Push the gaussian initial density through the classical flow where the
    map is an explicit affine one; None when no closed form applies."""
    if sc.initial_type != "gaussian":
        return None
    kind = sc.potential.kind
    if kind not in ("free", "linear", "harmonic"):
        return None
    m = sc.potential.mass
    mesh = grid.mesh()
    v = np.asarray(sc.velocity, dtype=float)
    if kind == "harmonic":
        w = sc.potential.params["omega"]
        c, s = math.cos(w * t), math.sin(w * t)
        if abs(c) < 1e-6:
            return None  # focal time, density degenerates
        pulled = [(x - (vi / w) * s) / c for x, vi in zip(mesh, v)]
        jac = abs(c) ** grid.dim
    else:
        shift = v * t
        if kind == "linear":
            f = np.asarray(sc.potential.params["force"], dtype=float)
            shift = shift + f * t * t / (2.0 * m)
        pulled = [x - sh for x, sh in zip(mesh, shift)]
        jac = 1.0
    vals = _gaussian_at(pulled, sc.center, sc.sigma) / jac
    return RealField(grid, vals, DENSITY)


def _rho_center_width(grid: Grid, rho_vals):
    total = float(rho_vals.sum())
    mesh = grid.mesh()
    center = [float((m * rho_vals).sum() / total) for m in mesh]
    widths = [math.sqrt(max(float(((m - c) ** 2 * rho_vals).sum() / total),
                            1e-300))
              for m, c in zip(mesh, center)]
    return center, max(widths)


def _window_interp(grid: Grid, vals, point, half_width):
    """Cubic interpolation of a 2-d array at one point, fit on a local window."""
    sl = []
    for a in range(2):
        ax = grid.axes[a]
        lo = int(np.searchsorted(ax, point[a] - half_width)) - 1
        hi = int(np.searchsorted(ax, point[a] + half_width)) + 1
        lo, hi = max(lo, 0), min(hi, ax.size)
        if hi - lo < 4:  # spline needs four nodes per axis
            lo = max(0, min(lo, ax.size - 4))
            hi = lo + 4
        sl.append(slice(lo, hi))
    window = vals[sl[0], sl[1]]
    if not np.all(np.isfinite(window)):
        return float("nan")
    spline = RectBivariateSpline(grid.axes[0][sl[0]], grid.axes[1][sl[1]],
                                 window, kx=3, ky=3)
    return float(spline.ev(point[0], point[1]))


def _pump(stream, hook):
    for snap in stream:
        hook(snap)
        yield snap


def _drain(stream, hook):
    for snap in stream:
        hook(snap)


def _decimate(n, cap=FIELD_DUMP_CAP):
    stride = max(1, int(math.ceil(n / cap)))
    return np.arange(0, n, stride)


def _head(ens: TrajectoryEnsemble, k: int) -> TrajectoryEnsemble:
    if ens.n_particles <= k:
        return ens
    return TrajectoryEnsemble(
        times=ens.times, positions=ens.positions[:k],
        velocities=ens.velocities[:k], kind=ens.kind,
        absorbed_step=ens.absorbed_step[:k])


def _core_region(rho_vals, extra=None):
    region = rho_vals >= CORE_FLOOR * float(rho_vals.max())
    if extra is not None:
        region = region & extra
    return region


def _sup(arr, region):
    sel = np.asarray(arr)[region]
    sel = sel[np.isfinite(sel)]
    return float(np.abs(sel).max()) if sel.size else float("nan")


def _hj_pair_metrics(final: WaveField, spec: PotentialSpec, dt: float,
                     energy: float):
    """Quantum and classical Hamilton-Jacobi sup-residuals from the final
    snapshot and one extra short step. The step length respects the
    phase-difference wrap |dS| < pi*hbar at every hbar."""
    scale = max(abs(energy) * 4.0, 1e-9)
    dtp = min(dt, 0.2 * math.pi * final.hbar / scale)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DisconnectedSupportWarning)
        fa = decompose(final)
        fb = decompose(step(final, spec, PropagatorConfig(dt=dtp)))
        res = madelung_residuals(fa, fb, spec)
    rho_mid = 0.5 * (fa.rho.values + fb.rho.values)
    region = _core_region(rho_mid) & np.isfinite(res.hj.values)
    qbar = 0.5 * (fa.qpotential.values + fb.qpotential.values)
    classical = res.hj.values - qbar
    return {
        "hj_quantum_sup": _sup(res.hj.values, region),
        "hj_classical_sup": _sup(classical, region & np.isfinite(classical)),
        "continuity_sup": _sup(res.continuity.values,
                               region & np.isfinite(res.continuity.values)),
    }, fa


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        return obj
    return obj


# -- reports --------------------------------------------------------------------


@dataclass
class ConvergenceReport:
    scenario: Scenario
    hbar_values: list
    rungs: list               # one metrics dict per rung, base hbar first
    sweep: dict               # cross-rung fits and ratios
    trajectories: list        # (TrajectoryEnsemble, hbar_divisor) pairs
    field_dumps: dict         # fields/<name>.csv -> (header, row array)
    runtimes: dict            # divisor repr -> seconds; manifest only

    def to_dict(self) -> dict:
        sc = self.scenario
        return _jsonable({
            "scenario": {
                "name": sc.name, "kind": sc.kind, "seed": sc.seed,
                "hbar_base": sc.hbar_base,
                "hbar_divisors": list(sc.hbar_divisors),
                "t_final": sc.t_final, "n_particles": sc.n_particles,
            },
            "hbar_values": list(self.hbar_values),
            "rungs": self.rungs,
            "sweep": self.sweep,
        })


# -- statistical sweep ------------------------------------------------------------


def _output_times(sc: Scenario):
    return np.linspace(0.0, sc.t_final, sc.n_outputs + 1)


def _statistical_shared(sc: Scenario, grid: Grid):
    shared = {}
    rho0 = initial_density(sc, grid)
    s0 = initial_action(sc, grid)
    shared["rho0"] = rho0
    shared["s0"] = s0
    shared["times"] = _output_times(sc)
    shared["mask"] = (absorbing_mask(grid, sc.absorbing_width)
                      if sc.absorbing_width > 0 else None)
    m = sc.potential.mass
    if sc.n_particles > 0:
        x0s = sample_initial_positions(rho0, sc.n_particles, sc.seed)
        v0s = np.broadcast_to(np.asarray(sc.velocity, dtype=float),
                              x0s.shape).copy()
        shared["x0s"] = x0s
        if sc.potential.has_classical_action:
            pos, vel = advance_ensemble(sc.potential, x0s, v0s,
                                        shared["times"])
            shared["classical"] = TrajectoryEnsemble(
                times=shared["times"], positions=pos, velocities=vel,
                kind="classical")
    if sc.potential.has_classical_action:
        shared["minplus"] = hopf_lax_solve(s0, sc.potential, sc.t_final)

        def grad_s0(pts):
            slope = m * np.asarray(sc.velocity, dtype=float)
            return np.broadcast_to(slope, np.atleast_2d(pts).shape)

        shared["grad_s0"] = grad_s0
    rho_cl = [classical_density_closed_form(sc, grid, t)
              for t in shared["times"]]
    shared["rho_cl"] = None if any(r is None for r in rho_cl) else rho_cl
    return shared


def _statistical_rung(sc: Scenario, plan: RungPlan, shared):
    t0 = time.perf_counter()
    grid = plan.grid
    psi0 = initial_wavefield(sc, grid, plan.hbar)
    cfg = PropagatorConfig(dt=plan.dt, steps_per_output=plan.steps_per_output,
                           boundary_mask=shared["mask"])
    energy_of = make_energy_observer(sc.potential)
    times = shared["times"]
    mid = sc.n_outputs // 2

    norms, energies = [], []
    stash = {}
    history = []
    l1_series = []
    xidx = _decimate(grid.points[0])

    def hook(snap):
        i = len(norms)
        norms.append(snap.norm())
        energies.append(energy_of(snap))
        rho = np.abs(snap.values) ** 2
        if shared["rho_cl"] is not None:
            l1_series.append(
                grid.integrate(np.abs(rho - shared["rho_cl"][i].values)))
        if grid.dim == 1:
            history.append(rho[xidx])
        if i == mid:
            stash["mid"] = snap
        stash["last"] = snap

    stream = evolve_stream(psi0, sc.potential, cfg, sc.t_final)
    ens = None
    if sc.n_particles > 0:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DisconnectedSupportWarning)
            ens = integrate_ensemble(shared["x0s"], _pump(stream, hook),
                                     substeps=4)
    else:
        _drain(stream, hook)

    final = stash["last"]
    rho_final = np.abs(final.values) ** 2
    norms_arr = np.asarray(norms)
    masked = shared["mask"] is not None

    metrics = {
        "divisor": plan.divisor,
        "hbar": plan.hbar,
        "grid_points": list(grid.points),
        "required_points": list(plan.required),
        "dt": plan.dt,
        "n_steps": plan.steps_per_output * sc.n_outputs,
        "norm_drift": (None if masked
                       else float(np.abs(norms_arr - 1.0).max())),
        "absorbed_probability": (max(0.0, 1.0 - float(norms_arr[-1]) ** 2)
                                 if masked else 0.0),
    }
    e = np.asarray(energies)
    if not masked:
        scale = max(abs(float(e[0])), 1e-30)
        metrics["energy_drift"] = float((e.max() - e.min()) / scale)
    else:
        metrics["energy_drift"] = None

    # paired trajectory deviations against the classical ensemble
    if ens is not None and "classical" in shared:
        diff = np.linalg.norm(
            ens.positions - shared["classical"].positions, axis=-1)
        dev = diff.max(axis=1)
        metrics["deviation_per_particle"] = [float(d) for d in dev]
        metrics["deviation_median"] = float(np.median(dev))
        metrics["deviation_mean"] = float(dev.mean())
        metrics["deviation_max"] = float(dev.max())
    else:
        metrics["deviation_per_particle"] = None
        metrics["deviation_median"] = None
        metrics["deviation_mean"] = None
        metrics["deviation_max"] = None

    # density distance to the classical transport at matched times
    cl_l1 = None
    if sc.potential.has_classical_action and sc.n_particles > 0:
        cl = evolve_classical_density(
            shared["rho0"], shared["s0"], sc.potential, [0.0, sc.t_final],
            sc.n_particles, sc.seed, grad_s0=shared["grad_s0"])[-1]
        cl_l1 = grid.integrate(np.abs(rho_final - cl.rho.values))
    metrics["density_l1_histogram"] = cl_l1
    if shared["rho_cl"] is not None:
        metrics["density_l1"] = float(l1_series[-1])
        metrics["density_l1_series"] = [[float(t), float(v)]
                                        for t, v in zip(times, l1_series)]
        metrics["density_reference"] = "closed_form"
    elif cl_l1 is not None:
        metrics["density_l1"] = cl_l1
        metrics["density_l1_series"] = None
        metrics["density_reference"] = "histogram"
    else:
        metrics["density_l1"] = None
        metrics["density_l1_series"] = None
        metrics["density_reference"] = None

    hj, f_final = _hj_pair_metrics(final, sc.potential, plan.dt,
                                   float(e[-1]))
    metrics.update(hj)

    # action distance to the min-plus solution, modulo one global constant
    minplus = shared.get("minplus")
    if minplus is not None and f_final.action is not None:
        diff = f_final.action.values - minplus.action.values
        region = (_core_region(rho_final) & f_final.defined
                  & minplus.trusted() & np.isfinite(diff))
        if region.sum() >= 8:
            offset = float(diff[region].mean())
            metrics["action_distance"] = _sup(diff - offset, region)
        else:
            metrics["action_distance"] = None
    else:
        metrics["action_distance"] = None

    # histogram equivariance at t = 0, T/2, T
    if ens is not None and not masked:
        bins = 25 if grid.dim == 1 else 5
        rows = []
        for idx, snap in ((0, psi0), (mid, stash["mid"]),
                          (sc.n_outputs, final)):
            rho = RealField(grid, np.abs(snap.values) ** 2, DENSITY)
            center, width = _rho_center_width(grid, rho.values)
            rows.append([float(times[idx]),
                         histogram_l1(rho, ens.positions[:, idx, :], center,
                                      2.5 * width, bins)])
        metrics["bohm_hist_l1"] = rows
    else:
        metrics["bohm_hist_l1"] = None

    # interference observables for barrier runs; the fringe system lives
    # past the barrier, so reflected particles are excluded from the count
    if sc.potential.kind == "double_slit" and ens is not None:
        alive = ens.alive()
        end = ens.positions[alive, -1, :]
        past = end[:, 0] > (sc.potential.params["center_x"]
                            + sc.potential.params["thickness"])
        metrics["fringe_channels"] = fringe_channel_count(end[past, 1])
        metrics["transmitted"] = int(past.sum())
        metrics["axis_crossings"] = axis_crossing_count(
            ens.positions[alive])
        metrics["mean_heading_change"] = mean_heading_change(
            ens.positions, alive)
        metrics["survivors"] = int(alive.sum())
    else:
        metrics["fringe_channels"] = None
        metrics["transmitted"] = None
        metrics["axis_crossings"] = None
        metrics["mean_heading_change"] = None
        metrics["survivors"] = None

    dumps = {}
    tag = repr(plan.divisor)
    if grid.dim == 1:
        rows = []
        for t, rho in zip(times, history):
            for x, v in zip(grid.axes[0][xidx], rho):
                rows.append((float(t), float(x), float(v)))
        dumps[f"density_history_div{tag}.csv"] = (("t", "x1", "value"), rows)
    else:
        ix = _decimate(grid.points[0])
        iy = _decimate(grid.points[1])
        xs = grid.axes[0][ix]
        ys = grid.axes[1][iy]
        sub = rho_final[np.ix_(ix, iy)]
        rows = [(float(xs[i]), float(ys[j]), float(sub[i, j]))
                for i in range(xs.size) for j in range(ys.size)]
        dumps[f"density_final_div{tag}.csv"] = (("x1", "x2", "value"), rows)

    return metrics, ens, dumps, time.perf_counter() - t0


def _run_all(runner, plans, jobs):
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=min(jobs, len(plans))) as pool:
            return list(pool.map(runner, plans))
    return [runner(p) for p in plans]


def run_statistical_sweep(sc: Scenario, jobs: int = 1) -> ConvergenceReport:
    if sc.kind != "statistical":
        raise ScenarioError("run_statistical_sweep needs a statistical "
                            "scenario", "scenario.kind")
    plans = rung_plans(sc)
    grid = plans[0].grid
    shared = _statistical_shared(sc, grid)

    results = _run_all(lambda p: _statistical_rung(sc, p, shared), plans, jobs)

    rungs = [r[0] for r in results]
    hbars = [p.hbar for p in plans]
    med = [m["deviation_median"] for m in rungs]
    l1s = [m["density_l1"] for m in rungs]
    sweep = {
        "divisors": [p.divisor for p in plans],
        "deviation_median_fit": (_loglog_fit(hbars, med)
                                 if all(v is not None for v in med) else None),
        "density_l1_fit": (_loglog_fit(hbars, l1s)
                           if all(v is not None for v in l1s) else None),
    }
    devs = [m["deviation_per_particle"] for m in rungs]
    if all(d is not None for d in devs) and len(devs) > 1:
        arr = np.asarray(devs)           # (rungs, particles)
        strict = np.all(arr[1:] < arr[:-1], axis=0)
        sweep["deviation_strictly_decreasing_fraction"] = float(strict.mean())
        first = np.median(arr[0])
        last = np.median(arr[-1])
        sweep["deviation_median_last_over_first"] = (
            float(last / first) if first > 0 else None)
    else:
        sweep["deviation_strictly_decreasing_fraction"] = None
        sweep["deviation_median_last_over_first"] = None
    if all(v is not None for v in l1s) and len(l1s) > 1:
        sweep["density_l1_decreasing"] = bool(
            all(b < a for a, b in zip(l1s, l1s[1:])))
    else:
        sweep["density_l1_decreasing"] = None

    trajectories = []
    if "classical" in shared:
        trajectories.append((_head(shared["classical"], TRAJECTORY_DUMP_CAP),
                             CLASSICAL_DIVISOR))
    for plan, res in zip(plans, results):
        if res[1] is not None:
            trajectories.append((_head(res[1], TRAJECTORY_DUMP_CAP),
                                 plan.divisor))

    dumps = {}
    runtimes = {}
    for plan, res in zip(plans, results):
        dumps.update(res[2])
        runtimes[repr(plan.divisor)] = res[3]

    return ConvergenceReport(
        scenario=sc, hbar_values=hbars, rungs=rungs, sweep=sweep,
        trajectories=trajectories, field_dumps=dumps, runtimes=runtimes)


# -- determinist sweep -------------------------------------------------------------

_BATTERY = (
    ("quadratic", lambda x, y: x ** 2 + y ** 2),
    ("gaussian", lambda x, y: np.exp(-(x ** 2 + y ** 2) / 8.0)),
    ("cosine", lambda x, y: np.cos(0.5 * x) * np.cos(0.5 * y)),
    ("lorentz", lambda x, y: 1.0 / (1.0 + (x ** 2 + y ** 2) / 4.0)),
    ("anisotropic", lambda x, y: x ** 2 - 0.3 * x * y + 2.0 * y ** 2),
)


def _determinist_rung(sc: Scenario, plan: RungPlan):
    t0 = time.perf_counter()
    grid = plan.grid
    hbar = plan.hbar
    cs = _coherent_state(sc, hbar)
    omega = cs.omega
    psi0 = coh.wavefield(cs, grid, 0.0)
    cfg = PropagatorConfig(dt=plan.dt, steps_per_output=plan.steps_per_output)
    energy_of = make_energy_observer(sc.potential)
    times = _output_times(sc)
    mid = sc.n_outputs // 2
    q_indices = sorted(set(int(round(i)) for i in
                           np.linspace(0, sc.n_outputs, 5)))

    mesh = grid.mesh()
    battery = [(name, f(mesh[0], mesh[1])) for name, f in _BATTERY]

    norms, energies = [], []
    weak_series = {name: [] for name, _ in _BATTERY}
    stash = {}

    def hook(snap):
        i = len(norms)
        norms.append(snap.norm())
        energies.append(energy_of(snap))
        rho = np.abs(snap.values) ** 2
        pt = coh.xi(cs, times[i])
        for (name, f), (_, vals) in zip(_BATTERY, battery):
            weak_series[name].append(
                grid.integrate(vals * rho) - float(f(pt[0], pt[1])))
        if i in q_indices or i in (0, mid, sc.n_outputs):
            stash[i] = snap

    stream = evolve_stream(psi0, sc.potential, cfg, sc.t_final)
    ens = None
    if sc.n_particles > 0:
        x0s = sample_initial_positions(psi0.density(), sc.n_particles, sc.seed)
        ens = integrate_ensemble(x0s, _pump(stream, hook), substeps=4)
    else:
        _drain(stream, hook)

    final = stash[sc.n_outputs]
    rho_final = np.abs(final.values) ** 2
    pts = np.stack(mesh, axis=-1)
    rho_oracle = coh.density(cs, pts, sc.t_final)
    norms_arr = np.asarray(norms)
    e = np.asarray(energies)

    metrics = {
        "divisor": plan.divisor,
        "hbar": hbar,
        "grid_points": list(grid.points),
        "required_points": list(plan.required),
        "dt": plan.dt,
        "n_steps": plan.steps_per_output * sc.n_outputs,
        "norm_drift": float(np.abs(norms_arr - 1.0).max()),
        "energy_drift": float((e.max() - e.min()) / max(abs(float(e[0])),
                                                        1e-30)),
        "absorbed_probability": 0.0,
        "density_oracle_linf": float(np.abs(rho_final - rho_oracle).max()
                                     / rho_oracle.max()),
    }

    # quantum potential on and off the trajectory
    q_rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DisconnectedSupportWarning)
        fields = {i: decompose(stash[i]) for i in stash}
    for i in q_indices:
        pt = coh.xi(cs, times[i])
        q_val = _window_interp(grid, fields[i].qpotential.values, pt,
                               3.0 * cs.sigma)
        q_rows.append([float(times[i]), q_val])
    hbar_omega = hbar * omega
    metrics["q_at_xi"] = q_rows
    metrics["q_at_xi_max_rel_err"] = float(
        max(abs(q - hbar_omega) / hbar_omega for _, q in q_rows))
    f_final = fields[sc.n_outputs]
    xi_T = coh.xi(cs, sc.t_final)
    r2 = sum((m - c) ** 2 for m, c in zip(mesh, xi_T))
    q_model = hbar_omega - 0.5 * cs.mass * omega ** 2 * r2
    region = _core_region(rho_final) & np.isfinite(f_final.qpotential.values)
    metrics["q_profile_rel_err"] = (
        _sup(f_final.qpotential.values - q_model, region)
        / max(_sup(q_model, region), 1e-300))

    # action against the closed form and against the hbar->0 limit
    s_oracle = coh.action(cs, pts, sc.t_final)
    diff = f_final.action.values - s_oracle
    reg_a = region & np.isfinite(diff)
    offset = float(diff[reg_a].mean())
    metrics["action_oracle_sup"] = _sup(diff - offset, reg_a)

    s_limit = coh.limit_fields(cs, sc.t_final).action(pts)
    r = f_final.action.values - s_limit
    branch = 2.0 * math.pi * hbar * round(
        float(np.nanmedian(r[reg_a])) / (2.0 * math.pi * hbar))
    r = r - branch
    # unwrapping folds the -hbar*omega*t offset into (-pi, pi] branches
    expected = -hbar * ((omega * sc.t_final + math.pi) % (2.0 * math.pi)
                        - math.pi)
    metrics["action_limit_sup"] = _sup(r, reg_a)
    metrics["action_limit_over_hbar_omega_t"] = (
        metrics["action_limit_sup"] / abs(expected) if expected != 0 else None)
    metrics["action_limit_residual"] = _sup(r - expected, reg_a)

    metrics["weak_errors"] = {name: float(series[-1])
                              for name, series in weak_series.items()}
    metrics["weak_errors_oracle"] = {
        name: float(coh.gauss_hermite_expectation(
            cs, lambda p, f=f: f(p[..., 0], p[..., 1]), sc.t_final)
            - f(xi_T[0], xi_T[1]))
        for name, f in _BATTERY}

    hj, _ = _hj_pair_metrics(final, sc.potential, plan.dt, float(e[-1]))
    metrics.update(hj)

    if ens is not None:
        rows = []
        for idx in (0, mid, sc.n_outputs):
            rho = RealField(grid, np.abs(stash[idx].values) ** 2, DENSITY)
            center = coh.xi(cs, times[idx])
            rows.append([float(times[idx]),
                         histogram_l1(rho, ens.positions[:, idx, :], center,
                                      2.5 * cs.sigma, 5)])
        metrics["bohm_hist_l1"] = rows
    else:
        metrics["bohm_hist_l1"] = None

    dumps = {}
    tag = repr(plan.divisor)
    ix = _decimate(grid.points[0])
    iy = _decimate(grid.points[1])
    xs = grid.axes[0][ix]
    ys = grid.axes[1][iy]
    sub = rho_final[np.ix_(ix, iy)]
    rows = [(float(xs[i]), float(ys[j]), float(sub[i, j]))
            for i in range(xs.size) for j in range(ys.size)]
    dumps[f"density_final_div{tag}.csv"] = (("x1", "x2", "value"), rows)

    return metrics, ens, dumps, time.perf_counter() - t0


def run_determinist_sweep(sc: Scenario, jobs: int = 1) -> ConvergenceReport:
    if sc.kind != "determinist":
        raise ScenarioError("run_determinist_sweep needs a determinist "
                            "scenario", "scenario.kind")
    plans = rung_plans(sc)
    results = _run_all(lambda p: _determinist_rung(sc, p), plans, jobs)

    rungs = [r[0] for r in results]
    hbars = [p.hbar for p in plans]
    weak_fits = {}
    for name, _ in _BATTERY:
        weak_fits[name] = _loglog_fit(
            hbars, [abs(m["weak_errors"][name]) for m in rungs])
    slopes = [f["slope"] for f in weak_fits.values() if f is not None]
    sweep = {
        "divisors": [p.divisor for p in plans],
        "weak_error_fits": weak_fits,
        "weak_error_mean_slope": (float(np.mean(slopes)) if slopes else None),
        "q_at_xi_max_rel_err": max(m["q_at_xi_max_rel_err"] for m in rungs),
        "density_oracle_linf_max": max(m["density_oracle_linf"]
                                       for m in rungs),
    }

    times = _output_times(sc)
    trajectories = [(classical_trajectory(sc.potential, sc.x0, sc.v0, times),
                     CLASSICAL_DIVISOR)]
    for plan, res in zip(plans, results):
        if res[1] is not None:
            trajectories.append((_head(res[1], TRAJECTORY_DUMP_CAP),
                                 plan.divisor))

    dumps = {}
    runtimes = {}
    for plan, res in zip(plans, results):
        dumps.update(res[2])
        runtimes[repr(plan.divisor)] = res[3]

    return ConvergenceReport(
        scenario=sc, hbar_values=hbars, rungs=rungs, sweep=sweep,
        trajectories=trajectories, field_dumps=dumps, runtimes=runtimes)


def run_sweep(sc: Scenario, jobs: int = 1) -> ConvergenceReport:
    if sc.kind == "statistical":
        return run_statistical_sweep(sc, jobs=jobs)
    return run_determinist_sweep(sc, jobs=jobs)


# -- run directory ---------------------------------------------------------------


def _package_version() -> str:
    try:
        from importlib.metadata import version

        return version("semiclassical")
    except Exception:
        return "unknown"


def write_run_dir(report: ConvergenceReport, out_dir, started=None,
                  finished=None) -> list:
    """Write scenario.echo, metrics.json, trajectories.csv and fields/*.csv,
    then the manifest once everything else is on disk. Returns the written
    paths relative to out_dir."""
    out = Path(out_dir)
    (out / "fields").mkdir(parents=True, exist_ok=True)
    written = []

    echo = scenario_echo(report.scenario)
    (out / "scenario.echo").write_text(echo)
    written.append("scenario.echo")

    metrics_text = json.dumps(report.to_dict(), sort_keys=True, indent=2)
    (out / "metrics.json").write_text(metrics_text + "\n")
    written.append("metrics.json")

    lines = []
    header = None
    for ens, divisor in report.trajectories:
        h, rows = ens.to_rows(hbar_divisor=divisor)
        if header is None:
            header = h
            lines.append(",".join(header))
        for row in rows:
            lines.append(",".join(str(c) for c in row))
    if header is None:
        lines.append("kind,hbar_divisor,particle,t,x1,absorbed")
    (out / "trajectories.csv").write_text("\n".join(lines) + "\n")
    written.append("trajectories.csv")

    for name in sorted(report.field_dumps):
        head, rows = report.field_dumps[name]
        with open(out / "fields" / name, "w") as fh:
            fh.write(",".join(head) + "\n")
            for row in rows:
                fh.write(",".join(repr(c) for c in row) + "\n")
        written.append(f"fields/{name}")

    now = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
    manifest = {
        "scenario_sha256": hashlib.sha256(echo.encode()).hexdigest(),
        "seed": report.scenario.seed,
        "tool": "semiclassical",
        "version": _package_version(),
        "numpy_version": np.__version__,
        "scipy_version": __import__("scipy").__version__,
        "started": started or now,
        "finished": finished or now,
        "runtimes_seconds": {k: round(v, 3)
                             for k, v in sorted(report.runtimes.items())},
        "outputs": sorted(written),
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    written.append("manifest.json")
    return written
