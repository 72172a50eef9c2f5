import numpy as np
import pytest
from numpy.testing import assert_allclose

from semiclassical.classical import (
    MultivaluedWarning,
    determinist_solution,
    evolve_classical_density,
    hj_residual,
    hopf_lax_solve,
)
from semiclassical.coherent import CoherentState, g_closed
from semiclassical.grids import RealField, make_grid
from semiclassical.potentials import (
    UnsupportedPotentialError,
    double_slit,
    free,
    harmonic,
)


def quadratic_min_plus(a, b, c, d, m, t, x):
    """Exact min over x0 of a (x0-b)^2 + d x0 + c + m (x-x0)^2 / 2t.

    Pure algebra, nothing shared with the scanning solver: the cost is
    quadratic in x0, so the stationary point is the global minimum.
    """
    w = m / t
    x0 = (2 * a * b - d + w * x) / (2 * a + w)
    val = a * (x0 - b) ** 2 + d * x0 + c + 0.5 * w * (x - x0) ** 2
    return val, x0


def test_min_plus_matches_exact_quadratic_instances():
    g = make_grid(1, [24.0], [512])
    x = g.axes[0]
    rng = np.random.default_rng(42)
    spec = free(mass=1.0)
    inner = np.abs(x) <= 4.0
    for _ in range(20):
        a = rng.uniform(0.2, 2.0)
        b, d = rng.uniform(-2.0, 2.0, size=2)
        c = rng.uniform(-1.0, 1.0)
        t = rng.uniform(0.3, 1.5)
        s0 = RealField(g, a * (x - b) ** 2 + d * x + c, "action")
        sol = hopf_lax_solve(s0, spec, t)
        want, want_x0 = quadratic_min_plus(a, b, c, d, 1.0, t, x)
        use = inner & sol.trusted()
        assert use.sum() > 100
        assert_allclose(sol.action.values[use], want[use], atol=1e-8)
        assert_allclose(sol.argmin[use, 0], want_x0[use], atol=1e-6)


def test_min_plus_quadratic_2d():
    g = make_grid(2, [16.0, 16.0], [48, 48])
    xx, yy = g.mesh()
    a1, a2, b1, b2 = 0.7, 1.1, 0.4, -0.8
    s0 = RealField(g, a1 * (xx - b1) ** 2 + a2 * (yy - b2) ** 2, "action")
    t = 0.6
    sol = hopf_lax_solve(s0, free(mass=1.3), t)
    wx, x0x = quadratic_min_plus(a1, b1, 0.0, 0.0, 1.3, t, xx)
    wy, x0y = quadratic_min_plus(a2, b2, 0.0, 0.0, 1.3, t, yy)
    use = sol.trusted() & (np.abs(xx) <= 3) & (np.abs(yy) <= 3)
    assert use.sum() > 100
    assert_allclose(sol.action.values[use], (wx + wy)[use], atol=1e-8)
    assert_allclose(sol.argmin[..., 0][use], x0x[use], atol=1e-5)
    assert_allclose(sol.argmin[..., 1][use], x0y[use], atol=1e-5)


def test_min_plus_harmonic_point_value():
    # S0 = 0, omega = m = 1: at x = 1, t = pi/4 the minimizer sits at
    # x0 = sqrt(2) and the value is -1/2 (frozen from the closed-form
    # stationarity conditions)
    g = make_grid(1, [16.0], [512])
    s0 = RealField(g, np.zeros(g.shape), "action")
    sol = hopf_lax_solve(s0, harmonic(mass=1.0, omega=1.0), np.pi / 4)
    i = int(np.argmin(np.abs(g.axes[0] - 1.0)))
    assert abs(g.axes[0][i] - 1.0) < 1e-12  # 1.0 is exactly a node
    assert_allclose(sol.action.values[i], -0.5, atol=1e-9)
    assert_allclose(sol.argmin[i, 0], np.sqrt(2.0), atol=1e-6)
    assert sol.trusted()[i]


def test_min_plus_affine_initial_action():
    # affine S0 shifts rigidly: S(x, t) = p x + c - p^2 t / 2m, exactly
    g = make_grid(1, [30.0], [256])
    x = g.axes[0]
    p, cnst, m, t = 1.3, 0.4, 1.0, 0.8
    s0 = RealField(g, p * x + cnst, "action")
    sol = hopf_lax_solve(s0, free(mass=m), t)
    use = sol.trusted() & (np.abs(x) <= 8)
    assert_allclose(sol.action.values[use], (p * x + cnst - p**2 * t / (2 * m))[use],
                    atol=1e-9)
    assert_allclose(sol.argmin[use, 0], (x - p * t / m)[use], atol=1e-6)
    assert not sol.multivalued[use].any()


def test_min_plus_semigroup_property():
    g = make_grid(1, [24.0], [512])
    x = g.axes[0]
    s0 = RealField(g, 0.5 * x**2, "action")
    spec = free(mass=1.0)
    once = hopf_lax_solve(s0, spec, 0.7)
    first = hopf_lax_solve(s0, spec, 0.4)
    second = hopf_lax_solve(first.action, spec, 0.3)
    use = once.trusted() & second.trusted() & (np.abs(x) <= 6)
    assert use.sum() > 100
    assert_allclose(second.action.values[use], once.action.values[use], atol=1e-7)


def test_min_plus_short_time_recovers_initial_action():
    g = make_grid(1, [20.0], [512])
    x = g.axes[0]
    s0 = RealField(g, np.sin(x), "action")
    sol = hopf_lax_solve(s0, free(mass=1.0), 1e-3)
    use = sol.trusted() & (np.abs(x) <= 8)
    # S - S0 = -t |grad S0|^2 / 2m + o(t)
    assert np.abs(sol.action.values[use] - np.sin(x)[use]).max() < 1e-3


def test_crossing_characteristics_are_flagged():
    # S0 = cos(x0) with the free flow focuses after t = 1; at x = 0 two
    # symmetric interior minimizers tie exactly
    g = make_grid(1, [20.0], [256])
    x = g.axes[0]
    s0 = RealField(g, np.cos(x), "action")
    with pytest.warns(MultivaluedWarning):
        sol = hopf_lax_solve(s0, free(mass=1.0), 1.5)
    i0 = int(np.argmin(np.abs(x)))
    assert abs(x[i0]) < 1e-12
    assert sol.multivalued[i0]
    assert not sol.trusted()[i0]
    # before focusing the same data is clean
    early = hopf_lax_solve(s0, free(mass=1.0), 0.5)
    assert not early.multivalued[np.abs(x) <= 8].any()


def test_min_plus_gradient_matches_argmin_velocity():
    # envelope theorem: grad S(x) = m (x - x0*) / t for the free flow;
    # quadratic data keeps interior centered differences exact
    g = make_grid(1, [24.0], [512])
    x = g.axes[0]
    s0 = RealField(g, 0.8 * (x - 0.5) ** 2, "action")
    t = 0.6
    sol = hopf_lax_solve(s0, free(mass=1.0), t)
    grad = np.gradient(sol.action.values, g.axes[0])
    use = sol.trusted() & (np.abs(x) <= 6)
    assert_allclose(grad[use], (x[use] - sol.argmin[use, 0]) / t, atol=1e-6)


@pytest.mark.parametrize(
    "spec,t",
    [(free(mass=1.0), 0.8), (harmonic(mass=1.0, omega=1.0), np.pi / 4)],
    ids=["free", "harmonic"],
)
def test_min_plus_solution_solves_hamilton_jacobi(spec, t):
    g = make_grid(1, [16.0], [512])
    x = g.axes[0]
    s0 = RealField(g, 0.5 * x**2 + 0.3 * x, "action")
    sol = hopf_lax_solve(s0, spec, t)
    res = hj_residual(sol, spec)
    vals = res.values[np.abs(x) <= 4]
    vals = vals[np.isfinite(vals)]
    assert vals.size > 100
    assert np.abs(vals).max() < 1e-6


def test_min_plus_input_validation():
    g = make_grid(1, [20.0], [64])
    s0 = RealField(g, np.zeros(64), "action")
    with pytest.raises(ValueError):
        hopf_lax_solve(s0, free(mass=1.0), 0.0)
    with pytest.raises(ValueError):
        hopf_lax_solve(s0, free(mass=1.0), 0.5, x0_axes=np.linspace(-30, 30, 64))
    with pytest.raises(ValueError):
        hopf_lax_solve(s0, free(mass=1.0), 0.5, x0_axes=np.array([0.0, 0.1, 0.5]))
    with pytest.raises(UnsupportedPotentialError):
        ds = double_slit(mass=1.0, height=5.0, separation=2.0, slit_width=0.5,
                         thickness=0.5)
        hopf_lax_solve(s0, ds, 0.5)


def test_classical_density_translates_rigidly():
    g = make_grid(1, [40.0], [256])
    x = g.axes[0]
    rho0 = RealField(g, np.exp(-(x**2) / 2) / np.sqrt(2 * np.pi), "density")
    s0 = RealField(g, 2.0 * x, "action")
    spec = free(mass=1.0)
    out = evolve_classical_density(rho0, s0, spec, [0.0, 0.5, 1.0], n=20_000, seed=5)
    assert [o.time for o in out] == [0.0, 0.5, 1.0]
    for o in out:
        assert_allclose(o.rho.grid.integrate(o.rho.values), 1.0, atol=1e-3)
        assert o.method == "characteristics_histogram"
    want = np.exp(-((x - 2.0) ** 2) / 2) / np.sqrt(2 * np.pi)
    l1 = g.integrate(np.abs(out[-1].rho.values - want))
    assert l1 < 0.07


def test_classical_density_analytic_and_sampled_gradients_agree():
    # linear S0: centered differences are exact, so both velocity routes
    # must produce identical ensembles for the same seed
    g = make_grid(1, [40.0], [256])
    x = g.axes[0]
    rho0 = RealField(g, np.exp(-(x**2) / 2) / np.sqrt(2 * np.pi), "density")
    s0 = RealField(g, 2.0 * x, "action")
    spec = free(mass=1.0)
    a = evolve_classical_density(rho0, s0, spec, [0.0, 1.0], n=4000, seed=9)
    b = evolve_classical_density(rho0, s0, spec, [0.0, 1.0], n=4000, seed=9,
                                 grad_s0=lambda pts: np.full_like(pts, 2.0))
    assert np.array_equal(a[-1].rho.values, b[-1].rho.values)


def test_classical_density_harmonic_breathing():
    # resting Gaussian under the oscillator contracts coherently:
    # rho(x, t) is Gaussian with sigma(t) = sigma |cos wt|
    g = make_grid(1, [40.0], [256])
    x = g.axes[0]
    rho0 = RealField(g, np.exp(-(x**2) / 2) / np.sqrt(2 * np.pi), "density")
    s0 = RealField(g, np.zeros_like(x), "action")
    out = evolve_classical_density(rho0, s0, harmonic(mass=1.0, omega=1.0),
                                   [0.0, np.pi / 3], n=20_000, seed=13)
    sig = abs(np.cos(np.pi / 3))
    want = np.exp(-(x**2) / (2 * sig**2)) / np.sqrt(2 * np.pi * sig**2)
    l1 = g.integrate(np.abs(out[-1].rho.values - want))
    assert l1 < 0.1


def test_classical_density_rejects_escaping_mass():
    g = make_grid(1, [20.0], [128])
    x = g.axes[0]
    rho0 = RealField(g, np.exp(-(x**2) / 2) / np.sqrt(2 * np.pi), "density")
    s0 = RealField(g, 6.0 * x, "action")
    with pytest.raises(ValueError, match="histogram mass"):
        evolve_classical_density(rho0, s0, free(mass=1.0), [0.0, 2.0], n=2000, seed=3)


def test_determinist_solution_along_harmonic_path():
    spec = harmonic(mass=0.8, omega=1.3)
    x0, v0 = [1.1, -0.4], [0.3, 0.9]
    t_grid = np.linspace(0.0, 3.0, 31)
    sol = determinist_solution(spec, x0, v0, t_grid)
    assert sol.path.kind == "classical"
    assert np.abs(sol.residual).max() < 1e-7
    # the accumulated phase matches the closed-form antiderivative route
    cs = CoherentState(omega=1.3, mass=0.8, hbar=1.0, x0=x0, v0=v0)
    assert_allclose(sol.g, g_closed(cs, t_grid), atol=1e-10)
    # the action is affine with slope m xi_dot
    pts = np.array([[0.2, 0.1], [-1.0, 0.7]])
    i = 17
    want = pts @ (0.8 * sol.path.velocities[0, i]) + sol.g[i]
    assert_allclose(sol.action_at(pts, i, 0.8), want, atol=1e-12)


def test_determinist_solution_requires_harmonic():
    with pytest.raises(UnsupportedPotentialError):
        determinist_solution(free(mass=1.0), [0, 0], [1, 0], np.linspace(0, 1, 5))
