import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlslab.radial import RadialGrid, sphere_area
from nlslab.spectral import FieldState, Grid, gaussian_state, read_field, write_field, zero_state


def test_laplacian_of_constant():
    g = Grid(2, 32, 5.0)
    assert np.max(np.abs(g.laplacian(np.ones(g.shape)))) < 1e-12


def test_laplacian_eigenfunction():
    g = Grid(1, 128, 7.0)
    k = np.pi / g.L
    u = np.sin(k * g.x)
    assert np.max(np.abs(g.laplacian(u) + k ** 2 * u)) < 1e-12


def test_laplacian_gaussian():
    g = Grid(1, 512, 20.0)
    x = g.x
    exact = (4 * x ** 2 - 2) * np.exp(-x ** 2)
    assert np.max(np.abs(g.laplacian(np.exp(-x ** 2)) - exact)) < 1e-10


def test_integrals():
    g = Grid(1, 512, 20.0)
    assert g.integrate(np.ones(g.shape)) == pytest.approx(40.0, rel=1e-14)
    assert abs(g.integrate(1 / np.cosh(g.x) ** 2) - 2.0) < 1e-12
    assert abs(g.integrate(np.exp(-g.x ** 2)) - np.sqrt(np.pi)) < 1e-12
    g2 = Grid(2, 32, 3.0)
    assert g2.integrate(np.ones(g2.shape)) == pytest.approx(36.0, rel=1e-14)


def test_gradient_norm():
    g = Grid(1, 256, 5.0)
    assert g.gradient_norm_sq(np.ones(g.shape)) == 0.0
    k = np.pi / g.L
    assert g.gradient_norm_sq(np.sin(k * g.x)) == pytest.approx(k ** 2 * g.L, rel=1e-12)
    g = Grid(1, 1024, 20.0)
    assert abs(g.gradient_norm_sq(np.sqrt(2) / np.cosh(g.x)) - 4 / 3) < 1e-10


def test_gradient_consistent_with_norm():
    g = Grid(2, 64, 8.0)
    u = np.exp(-g.r2) * (1 + 0.3 * g.coords[0])
    grads = g.gradient(u)
    direct = sum(g.integrate(d ** 2) for d in grads)
    assert direct == pytest.approx(g.gradient_norm_sq(u), rel=1e-10)


def test_shape_mismatch():
    g = Grid(1, 64, 5.0)
    with pytest.raises(ValueError):
        g.laplacian(np.zeros(32))


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(1, 100, 5.0)
    with pytest.raises(ValueError):
        Grid(4, 16, 5.0)


smooth_coeffs = st.lists(st.floats(-1, 1, allow_nan=False), min_size=6, max_size=6)


def _smooth(g, c):
    x = g.x
    return (c[0] + c[1] * x + c[2] * x ** 2) * np.exp(-(1 + c[3] ** 2) * x ** 2) \
        + 1j * (c[4] + c[5] * x) * np.exp(-x ** 2)


@settings(max_examples=30, deadline=None)
@given(c=smooth_coeffs)
def test_parseval(c):
    g = Grid(1, 256, 10.0)
    u = _smooth(g, c)
    space = g.integrate(np.abs(u) ** 2)
    freq = np.sum(np.abs(g.fft(u)) ** 2) * g.cell_volume / g.N
    assert abs(space - freq) <= 1e-12 * (1 + space)


@settings(max_examples=30, deadline=None)
@given(a=smooth_coeffs, b=smooth_coeffs)
def test_laplacian_symmetric(a, b):
    g = Grid(1, 256, 10.0)
    u, v = _smooth(g, a), _smooth(g, b)
    lhs = g.integrate(g.laplacian(u) * np.conj(v))
    rhs = g.integrate(u * np.conj(g.laplacian(v)))
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(lhs))


def test_dilation_matches_closed_form():
    g = Grid(2, 64, 10.0)
    u = np.exp(-g.r2)
    d = g.dilate(u, 1.5)
    assert np.max(np.abs(d - np.exp(-g.r2 / 1.5 ** 2))) < 1e-10


def test_helmholtz_inverse():
    g = Grid(1, 256, 10.0)
    rhs = np.exp(-g.x ** 2)
    u = g.solve_helmholtz(rhs, 2.0, 0.5)
    assert np.max(np.abs(g.helmholtz(u, 2.0, 0.5) - rhs)) < 1e-12


def test_field_round_trip(tmp_path):
    g = Grid(2, 16, 4.0)
    s = FieldState(g, (np.exp(-g.r2) * (1 + 2j), g.coords[0] + 0j), t=0.25)
    write_field(tmp_path / "a.nlsfld", s)
    back = read_field(tmp_path / "a.nlsfld")
    assert back.grid == g and back.t == 0.25
    for a, b in zip(s.components, back.components):
        assert np.array_equal(a, b)


def test_field_truncated(tmp_path):
    g = Grid(1, 16, 4.0)
    write_field(tmp_path / "a.nlsfld", zero_state(g, 1))
    raw = (tmp_path / "a.nlsfld").read_bytes()
    (tmp_path / "b.nlsfld").write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        read_field(tmp_path / "b.nlsfld")


def test_gaussian_state():
    g = Grid(1, 64, 8.0)
    s = gaussian_state(g, [1.0, 0.5j], 2.0)
    assert s.l == 2 and s.sup_norm() == pytest.approx(1.0)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_radial_gaussian_mass(n):
    g = RadialGrid(n, 4000, 12.0)
    mass = g.integrate(np.exp(-g.r2))
    assert mass == pytest.approx(np.pi ** (n / 2), rel=1e-5)


@pytest.mark.parametrize("n", [1, 3, 5])
def test_radial_summation_by_parts(n):
    g = RadialGrid(n, 2000, 10.0)
    u = np.exp(-g.r2) * (1 + g.r)
    assert g.gradient_norm_sq(u) == pytest.approx(-g.integrate(g.laplacian(u) * u), rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_radial_laplacian_gaussian(n):
    g = RadialGrid(n, 8000, 10.0)
    u = np.exp(-g.r2)
    exact = (4 * g.r2 - 2 * n) * u
    # second-order scheme
    assert np.max(np.abs(g.laplacian(u) - exact)[:-10]) < 20 * g.h ** 2


def test_radial_helmholtz_inverse():
    g = RadialGrid(3, 1000, 10.0)
    rhs = np.exp(-g.r2)
    u = g.solve_helmholtz(rhs, 1.0, 2.0)
    assert np.max(np.abs(g.helmholtz(u, 1.0, 2.0) - rhs)) < 1e-10


def test_sphere_area():
    assert sphere_area(2) == pytest.approx(2 * np.pi)
    assert sphere_area(3) == pytest.approx(4 * np.pi)
