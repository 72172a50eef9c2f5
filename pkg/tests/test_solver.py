import numpy as np
import pytest
from numpy.testing import assert_allclose

from semiclassical.coherent import CoherentState, wavefield
from semiclassical.grids import WaveField, make_grid
from semiclassical.potentials import free, harmonic
from semiclassical.solver import (
    AliasingError,
    PropagatorConfig,
    ResolutionError,
    aliasing_limit_dt,
    check_resolution,
    evolve,
    evolve_stream,
    make_centroid_observer,
    make_energy_observer,
    max_kinetic_phase,
    norm_observer,
    required_points,
    step,
    validate_config,
)


def free_packet(x, t, hbar, m, x0, v0, sigma0):
    """Exact free-particle Gaussian; validated against the Schrodinger
    equation by finite differences (residual at the FD floor) before the
    values were trusted here."""
    z = 1.0 + 1j * hbar * t / (2 * m * sigma0**2)
    env = (2 * np.pi * sigma0**2) ** (-0.25) / np.sqrt(z)
    arg = -((x - x0 - v0 * t) ** 2) / (4 * sigma0**2 * z)
    phase = (m * v0 * x - 0.5 * m * v0**2 * t) / hbar
    return env * np.exp(arg + 1j * phase)


def packet_field(grid, t, hbar=1.0, m=1.0, x0=-5.0, v0=1.5, sigma0=1.0):
    return WaveField(
        grid, free_packet(grid.axes[0], t, hbar, m, x0, v0, sigma0),
        hbar=hbar, mass=m, time=t,
    )


def test_free_evolution_matches_closed_form():
    # with V = 0 the splitting commutes, so step count cannot matter: the
    # result must match the closed form to spectral accuracy
    g = make_grid(1, [60.0], [1024])
    psi0 = packet_field(g, 0.0)
    cfg = PropagatorConfig(dt=2e-3, steps_per_output=1000)
    out = evolve(psi0, free(mass=1.0), cfg, t_final=2.0, keep="ends")
    want = free_packet(g.axes[0], 2.0, 1.0, 1.0, -5.0, 1.5, 1.0)
    err = np.sqrt(g.integrate(np.abs(out.final.values - want) ** 2))
    assert err < 1e-12
    assert_allclose(out.final.time, 2.0, atol=1e-12)


def test_coherent_state_is_reproduced_in_2d():
    cs = CoherentState(omega=1.0, mass=1.0, hbar=1.0, x0=[2.0, 0.0], v0=[0.0, 2.0])
    g = make_grid(2, [20.0, 20.0], [128, 128])
    psi0 = wavefield(cs, g, 0.0)
    cfg = PropagatorConfig(dt=2e-3)
    t_final = 0.2
    out = evolve(psi0, harmonic(mass=1.0, omega=1.0), cfg, t_final, keep="ends")
    want = wavefield(cs, g, t_final)
    err = np.sqrt(g.integrate(np.abs(out.final.values - want.values) ** 2))
    assert err < 1e-5


def test_norm_is_conserved():
    g = make_grid(1, [40.0], [512])
    psi0 = packet_field(g, 0.0)
    cfg = PropagatorConfig(dt=1e-3, steps_per_output=1000)
    out = evolve(psi0, harmonic(mass=1.0, omega=0.7), cfg, t_final=1.0,
                 observers={"norm": norm_observer})
    drift = np.abs(out.observables["norm"] - 1.0).max()
    assert drift < 1e-12


def test_energy_is_conserved():
    g = make_grid(1, [40.0], [512])
    spec = harmonic(mass=1.0, omega=0.7)
    psi0 = packet_field(g, 0.0, v0=0.5)
    cfg = PropagatorConfig(dt=1e-3, steps_per_output=500)
    out = evolve(psi0, spec, cfg, t_final=3.0,
                 observers={"e": make_energy_observer(spec)})
    e = out.observables["e"]
    assert np.abs(e - e[0]).max() / abs(e[0]) < 1e-5


def test_strang_splitting_is_second_order():
    # halving dt must cut the error against a fine-dt reference by ~4
    g = make_grid(1, [16.0], [256])
    spec = harmonic(mass=1.0, omega=1.0)
    psi0 = packet_field(g, 0.0, x0=-2.0, v0=0.0, sigma0=1.0 / np.sqrt(2))
    t_final = 1.0

    def final_values(dt):
        out = evolve(psi0, spec, PropagatorConfig(dt=dt), t_final, keep="ends")
        return out.final.values

    ref = final_values(1.0 / 65536)
    errs = []
    for dt in (1.0 / 1024, 1.0 / 2048, 1.0 / 4096):
        diff = final_values(dt) - ref
        errs.append(np.sqrt(g.integrate(np.abs(diff) ** 2)))
    for coarse, fine in zip(errs, errs[1:]):
        assert 3.5 < coarse / fine < 4.5


def test_centroid_tracks_classical_motion():
    g = make_grid(1, [60.0], [512])
    psi0 = packet_field(g, 0.0, x0=-5.0, v0=1.5)
    cfg = PropagatorConfig(dt=5e-3, steps_per_output=200)
    out = evolve(psi0, free(mass=1.0), cfg, t_final=3.0,
                 observers={"x": make_centroid_observer(0)})
    assert_allclose(out.observables["x"], -5.0 + 1.5 * out.times, atol=1e-6)


def test_aliasing_guard():
    g = make_grid(1, [20.0], [256])
    psi = packet_field(g, 0.0)
    limit = aliasing_limit_dt(g, 1.0, 1.0)
    assert max_kinetic_phase(g, 1.0, 1.0, limit) == pytest.approx(np.pi)
    with pytest.raises(AliasingError):
        validate_config(PropagatorConfig(dt=1.01 * limit), psi)
    with pytest.raises(AliasingError):
        step(psi, free(mass=1.0), PropagatorConfig(dt=1.01 * limit))
    # just below the limit is allowed
    validate_config(PropagatorConfig(dt=0.99 * limit), psi)


def test_resolution_guard():
    # 8 points per de Broglie wavelength 2 pi hbar / (m v): 8*10/(pi) -> 26 even
    assert required_points(10.0, 1.0, 2.0, 1.0) == 26
    assert required_points(10.0, 1.0, 2.0, 0.1) == 256
    g = make_grid(1, [10.0], [16])
    with pytest.raises(ResolutionError) as info:
        check_resolution(g, mass=1.0, hbar=1.0, v_max=2.0)
    assert info.value.required_points == 26
    check_resolution(make_grid(1, [10.0], [26]), 1.0, 1.0, 2.0)
    check_resolution(g, mass=1.0, hbar=1.0, v_max=0.0)  # no flow, no bound


def test_boundary_mask_absorbs_probability():
    g = make_grid(1, [40.0], [512])
    x = g.axes[0]
    # absorbing ramps over the outer 20% on each side
    edge = 0.8 * 20.0
    ramp = np.clip((np.abs(x) - edge) / (20.0 - edge), 0.0, 1.0)
    mask = np.cos(0.5 * np.pi * ramp) ** 2
    psi0 = packet_field(g, 0.0, x0=0.0, v0=4.0)
    cfg = PropagatorConfig(dt=2e-3, boundary_mask=mask)
    out = evolve(psi0, free(mass=1.0), cfg, t_final=8.0, keep="ends")
    assert out.absorbed_probability > 0.9
    assert_allclose(
        out.absorbed_probability, 1.0 - out.final.norm() ** 2, atol=1e-12
    )


def test_mask_shape_is_checked():
    g = make_grid(1, [40.0], [512])
    psi = packet_field(g, 0.0)
    cfg = PropagatorConfig(dt=1e-3, boundary_mask=np.ones(100))
    with pytest.raises(ValueError):
        validate_config(cfg, psi)
    with pytest.raises(ValueError):
        PropagatorConfig(dt=1e-3, boundary_mask=2 * np.ones(8))


def test_output_cadence_and_keep():
    g = make_grid(1, [40.0], [256])
    psi0 = packet_field(g, 0.0)
    cfg = PropagatorConfig(dt=0.01, steps_per_output=10)
    out = evolve(psi0, free(mass=1.0), cfg, t_final=0.5)
    assert len(out.snapshots) == 6  # t = 0 plus 5 outputs
    assert_allclose(out.times, np.arange(6) * 0.1, atol=1e-12)
    ends = evolve(psi0, free(mass=1.0), cfg, t_final=0.5, keep="ends",
                  observers={"norm": norm_observer})
    assert len(ends.snapshots) == 2
    assert ends.observables["norm"].shape == (6,)


def test_time_grid_validation():
    g = make_grid(1, [40.0], [256])
    psi0 = packet_field(g, 0.0)
    with pytest.raises(ValueError):
        list(evolve_stream(psi0, free(mass=1.0), PropagatorConfig(dt=0.3), 1.0))
    with pytest.raises(ValueError):
        list(evolve_stream(psi0, free(mass=1.0),
                           PropagatorConfig(dt=0.1, steps_per_output=3), 1.0))
    with pytest.raises(ValueError):
        PropagatorConfig(dt=-0.1)
    with pytest.raises(ValueError):
        PropagatorConfig(dt=0.1, steps_per_output=0)


def test_single_step_advances_time():
    g = make_grid(1, [40.0], [256])
    psi0 = packet_field(g, 0.0)
    nxt = step(psi0, free(mass=1.0), PropagatorConfig(dt=0.01))
    assert nxt.time == pytest.approx(0.01)
    assert nxt.grid is psi0.grid
