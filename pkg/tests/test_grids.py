import numpy as np
import pytest
from numpy.testing import assert_allclose

from semiclassical.grids import (
    Grid,
    RealField,
    WaveField,
    gradient,
    laplacian,
    make_grid,
    spectral_gradient,
    spectral_laplacian,
)


def test_make_grid_1d_layout():
    g = make_grid(1, [2.0 * np.pi], [8])
    assert g.dim == 1
    assert g.shape == (8,)
    assert_allclose(g.spacings[0], np.pi / 4)
    # nodes start at -L/2 and stop one spacing short of +L/2
    assert_allclose(g.axes[0][0], -np.pi)
    assert_allclose(g.axes[0][-1], np.pi - np.pi / 4)
    assert_allclose(g.cell_volume, np.pi / 4)


def test_wavenumbers_on_unit_box():
    # integer wavenumbers on a 2*pi box, Nyquist reported as +n/2
    g = make_grid(1, [2.0 * np.pi], [8])
    assert_allclose(np.sort(g.k[0]), [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0])


@pytest.mark.parametrize("n,extent", [(8, 2 * np.pi), (16, 5.0), (64, 12.5)])
def test_gradient_wavenumbers_sum_to_zero(n, extent):
    g = make_grid(1, [extent], [n])
    assert g.k_grad[0].shape == (n,)
    assert abs(g.k_grad[0].sum()) < 1e-12 * np.abs(g.k_grad[0]).max()
    # the two ladders agree everywhere except the Nyquist slot
    assert_allclose(np.delete(g.k[0], n // 2), np.delete(g.k_grad[0], n // 2))
    assert g.k_grad[0][n // 2] == 0.0


@pytest.mark.parametrize(
    "dim,extents,points",
    [
        (1, [4.0], [6]),      # too few points
        (1, [4.0], [9]),      # odd points
        (1, [-4.0], [16]),    # negative extent
        (2, [4.0], [16, 16]), # mismatched lengths
        (3, [4.0, 4.0, 4.0], [16, 16, 16]),  # unsupported dimension
    ],
)
def test_make_grid_rejects_bad_input(dim, extents, points):
    with pytest.raises(ValueError):
        make_grid(dim, extents, points)


def test_integrate_gaussian_1d():
    g = make_grid(1, [40.0], [512])
    x = g.axes[0]
    sigma = 1.3
    rho = np.exp(-(x**2) / (2 * sigma**2)) / np.sqrt(2 * np.pi * sigma**2)
    assert_allclose(g.integrate(rho), 1.0, atol=1e-12)


def test_parseval_identity():
    # grid L2 norm equals spectral L2 norm for random band-limited data
    rng = np.random.default_rng(7)
    g = make_grid(2, [7.0, 5.0], [32, 24])
    f = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    grid_l2 = g.integrate(np.abs(f) ** 2)
    fk = np.fft.fftn(f)
    spec_l2 = np.sum(np.abs(fk) ** 2) * g.cell_volume / f.size
    assert_allclose(grid_l2, spec_l2, rtol=1e-12)


def test_spectral_gradient_is_linear():
    rng = np.random.default_rng(11)
    g = make_grid(1, [6.0], [64])
    f1 = rng.standard_normal(g.shape)
    f2 = rng.standard_normal(g.shape)
    a, b = 1.7, -0.4
    lhs = spectral_gradient(g, a * f1 + b * f2)
    rhs = [a * d1 + b * d2 for d1, d2 in zip(spectral_gradient(g, f1), spectral_gradient(g, f2))]
    for got, want in zip(lhs, rhs):
        assert_allclose(got, want, atol=1e-12)


def test_spectral_gradient_gaussian_2d():
    # d/dx exp(-|x|^2/2) = -x exp(-|x|^2/2); tails below 1e-13 at the box edge
    g = make_grid(2, [16.0, 16.0], [128, 128])
    xx, yy = g.mesh()
    f = np.exp(-(xx**2 + yy**2) / 2)
    dfdx, dfdy = spectral_gradient(g, f)
    assert_allclose(dfdx, -xx * f, atol=1e-10)
    assert_allclose(dfdy, -yy * f, atol=1e-10)
    assert np.isrealobj(dfdx)
    # frozen point check at the node x = (1, 0)
    i = np.argmin(np.abs(g.axes[0] - 1.0))
    j = np.argmin(np.abs(g.axes[1]))
    assert_allclose(dfdx[i, j], -np.exp(-0.5), atol=1e-11)


def test_spectral_laplacian_on_band_limited_field():
    # exact for trigonometric polynomials: both routes multiply by -|k|^2
    g = make_grid(2, [12.0, 10.0], [64, 64])
    xx, yy = g.mesh()
    kx, ky = 2 * np.pi / 12.0, 2 * np.pi / 10.0
    f = np.sin(kx * xx) * np.cos(2 * ky * yy) + 0.3 * np.cos(3 * kx * xx)
    grads = spectral_gradient(g, f)
    div = sum(spectral_gradient(g, d)[i] for i, d in enumerate(grads))
    lap = spectral_laplacian(g, f)
    assert_allclose(lap, div, atol=1e-12)
    want = -(kx**2 + 4 * ky**2) * np.sin(kx * xx) * np.cos(2 * ky * yy) - 0.3 * (
        3 * kx
    ) ** 2 * np.cos(3 * kx * xx)
    assert_allclose(lap, want, atol=1e-11)


def test_spectral_gradient_sawtooth_artifact():
    # a linear ramp is discontinuous across the periodic seam; its spectral
    # derivative rings instead of returning the slope, which is why phases
    # are never differentiated this way
    g = make_grid(1, [2.0 * np.pi], [256])
    (df,) = spectral_gradient(g, g.axes[0].copy())
    err = np.abs(df - 1.0)
    n = g.shape[0]
    mid = slice(n // 2 - 8, n // 2 + 8)
    assert err[0] > 0.5 or err[-1] > 0.5
    assert err[mid].max() > 1e-8  # pollution reaches the interior too


def test_real_field_units_and_checks():
    g = make_grid(1, [4.0], [16])
    with pytest.raises(ValueError):
        RealField(g, -np.ones(g.shape), "density")
    with pytest.raises(ValueError):
        RealField(g, np.zeros(g.shape), "voltage")
    f = RealField(g, np.zeros(g.shape), "action")
    assert f.units == "action"


def test_gradient_wrapper_units():
    g = make_grid(1, [8.0], [64])
    x = g.axes[0]
    s = RealField(g, np.sin(2 * np.pi * x / 8.0), "action")
    parts = gradient(s)
    assert len(parts) == 1
    assert parts[0].units == "action"
    lap = laplacian(s)
    assert lap.units == "action"


def test_wavefield_norm_and_density():
    g = make_grid(1, [20.0], [256])
    x = g.axes[0]
    psi = np.exp(-(x**2) / 4) * np.exp(1j * 0.3 * x)
    wf = WaveField(g, psi.astype(complex), hbar=1.0, mass=1.0, time=0.0)
    unit = wf.normalized()
    assert_allclose(unit.norm(), 1.0, atol=1e-12)
    rho = unit.density()
    assert rho.units == "density"
    assert_allclose(g.integrate(rho.values), 1.0, atol=1e-12)
    with pytest.raises(ValueError):
        WaveField(g, np.zeros(g.shape, dtype=complex), 1.0, 1.0, 0.0).normalized()


def test_wavefield_shape_mismatch_rejected():
    g = make_grid(2, [4.0, 4.0], [16, 16])
    with pytest.raises(ValueError):
        WaveField(g, np.zeros((16, 8), dtype=complex), 1.0, 1.0, 0.0)


def test_same_layout():
    a = make_grid(1, [4.0], [16])
    b = make_grid(1, [4.0], [16])
    c = make_grid(1, [4.0], [32])
    assert a.same_layout(b)
    assert not a.same_layout(c)


def test_nodes_ordering_matches_mesh():
    g = make_grid(2, [4.0, 6.0], [8, 12])
    xx, yy = g.mesh()
    nodes = g.nodes()
    assert nodes.shape == (8 * 12, 2)
    assert_allclose(nodes[:, 0], xx.ravel())
    assert_allclose(nodes[:, 1], yy.ravel())
