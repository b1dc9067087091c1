import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlslab.nonlinearity import (Monomial, Potential, build_spec, check_mass_resonance, derive_f,
                                 eval_f, find_sigma, gauge_identity_residual, growth_constant,
                                 hypotheses_ok, monomial_dict, random_points, validate_hypotheses)
from nlslab.specfile import cubic, quadratic, single_cubic

finite = st.floats(-2.0, 2.0, allow_nan=False)
point2 = st.tuples(finite, finite, finite, finite).map(
    lambda v: np.array([v[0] + 1j * v[1], v[2] + 1j * v[3]]))


def as_dict(comp):
    return {e: c for e, c in monomial_dict(comp).items()}


def test_quadratic_f_matches_closed_form():
    f = quadratic(0.5).f
    assert as_dict(f.components[0]) == {((0, 1), (1, 0)): 2.0}
    assert as_dict(f.components[1]) == {((2, 0), (0, 0)): 1.0}


def test_cubic_f_matches_closed_form():
    f = cubic(3.0, 1.0).f
    expected1 = {((2, 1), (0, 0)): 1 / 9, ((1, 0), (1, 1)): 2.0, ((0, 2), (1, 0)): 1 / 3}
    expected2 = {((0, 0), (2, 1)): 9.0, ((1, 1), (1, 0)): 2.0, ((3, 0), (0, 0)): 1 / 9}
    for comp, expected in zip(f.components, (expected1, expected2)):
        got = as_dict(comp)
        assert set(got) == set(expected)
        for e, c in expected.items():
            assert got[e] == pytest.approx(c, rel=1e-15)


def test_empty_potential_rejected():
    with pytest.raises(ValueError, match="nontrivial potential required"):
        build_spec(1, (1.0,), (1.0,), (0.0,), [])


def test_zero_potential_gives_zero_f():
    F = Potential(l=2, p=2, terms=(Monomial(0.0, ((0, 2), (1, 0))),))
    f = derive_f(F)
    assert all(len(comp) == 0 for comp in f.components)
    z = [np.array([1 + 1j]), np.array([2.0 + 0j])]
    assert all(np.all(v == 0) for v in eval_f(f, z))


def test_sigma_values():
    assert find_sigma(quadratic(0.5).potential) == pytest.approx((2.0, 4.0))
    assert find_sigma(cubic(3.0, 1.0).potential) == pytest.approx((2.0, 6.0))
    assert find_sigma(single_cubic().potential) == pytest.approx((2.0,))


def test_no_positive_sigma():
    # z1 * conj(z2) * |z1|^2 has charge (2, -1) ... combined with z1 z2 conj(z1) conj(z2)^... kept simple:
    # a term with all-positive charge admits no positive null vector
    F = Potential(l=2, p=1, terms=(Monomial(1.0, ((1, 0), (1, 0))),))
    assert find_sigma(F) is None


@pytest.mark.parametrize("kappa,expected", [(0.3, False), (0.45, False), (0.5, True), (0.55, False), (1.0, False)])
def test_mass_resonance_quadratic(kappa, expected):
    assert check_mass_resonance(quadratic(kappa)) is expected


@pytest.mark.parametrize("sigma,expected", [(2.0, False), (2.9, False), (3.0, True), (3.1, False), (4.0, False)])
def test_mass_resonance_cubic(sigma, expected):
    assert check_mass_resonance(cubic(sigma, 1.0)) is expected


def test_eval_quadratic_at_one():
    f1, f2 = eval_f(quadratic(0.5).f, [np.array(1 + 0j), np.array(1 + 0j)])
    assert f1 == pytest.approx(2.0)
    assert f2 == pytest.approx(1.0)


@pytest.mark.parametrize("spec", [quadratic(0.5), cubic(3.0, 1.0), single_cubic()], ids=lambda s: s.name)
def test_f_vanishes_at_origin(spec):
    z = [np.zeros(3, complex) for _ in range(spec.l)]
    assert all(np.all(v == 0) for v in eval_f(spec.f, z))


@pytest.mark.parametrize("spec", [quadratic(0.5), cubic(3.0, 1.0)], ids=lambda s: s.name)
def test_gauge_rotation(spec, rng):
    sigma = np.asarray(spec.sigma)
    z = random_points(spec.l, 32, rng)
    theta = rng.uniform(0, 2 * np.pi, 32)
    rotated = [np.exp(1j * sigma[k] * theta / 2) * z[k] for k in range(spec.l)]
    lhs = eval_f(spec.f, rotated)
    rhs = eval_f(spec.f, z)
    for k in range(spec.l):
        np.testing.assert_allclose(lhs[k], np.exp(1j * sigma[k] * theta / 2) * rhs[k], rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("spec", [quadratic(0.5), cubic(3.0, 1.0)], ids=lambda s: s.name)
def test_gauge_identity(spec, rng):
    z = random_points(spec.l, 256, rng)
    res = gauge_identity_residual(spec, spec.sigma, z)
    assert np.all(res < 1e-12 * np.sum(np.abs(z), axis=0) ** (spec.p + 1))


@pytest.mark.parametrize("spec", [quadratic(0.5), cubic(3.0, 1.0)], ids=lambda s: s.name)
def test_resonance_implies_gauge_with_ratios(spec, rng):
    assert check_mass_resonance(spec)
    z = random_points(spec.l, 256, rng)
    res = gauge_identity_residual(spec, spec.ratios, z)
    assert np.all(res < 1e-12 * np.sum(np.abs(z), axis=0) ** (spec.p + 1))


@settings(max_examples=50, deadline=None)
@given(z=point2, lam=st.floats(0.1, 5.0))
def test_homogeneity(z, lam):
    for spec in (quadratic(0.5), cubic(3.0, 1.0)):
        zz = [np.array(v) for v in z]
        scaled = [lam * v for v in zz]
        F0, F1 = spec.potential(zz), spec.potential(scaled)
        assert abs(F1 - lam ** (spec.p + 1) * F0) <= 1e-12 * lam ** (spec.p + 1) * (1 + abs(F0))
        for a, b in zip(eval_f(spec.f, scaled), eval_f(spec.f, zz)):
            assert abs(a - lam ** spec.p * b) <= 1e-12 * lam ** spec.p * (1 + abs(b))


@settings(max_examples=50, deadline=None)
@given(z=point2)
def test_wirtinger_consistency(z):
    # f_k = 2 d(Re F)/d conj(z_k) = d(Re F)/dx_k + i d(Re F)/dy_k
    h = 1e-6
    for spec in (quadratic(0.5), cubic(3.0, 1.0)):
        f = eval_f(spec.f, [np.array(v) for v in z])

        def reF(w):
            return float(spec.potential([np.array(v) for v in w]).real)

        for k in range(2):
            e = np.zeros(2, complex)
            e[k] = h
            dx = (reF(z + e) - reF(z - e)) / (2 * h)
            dy = (reF(z + 1j * e) - reF(z - 1j * e)) / (2 * h)
            scale = 1 + np.sum(np.abs(z)) ** spec.p
            assert abs(f[k] - (dx + 1j * dy)) <= 1e-6 * scale


def test_growth_bound(rng):
    spec = cubic(3.0, 1.0)
    C = growth_constant(spec.f)
    z = random_points(2, 200, rng)
    fz = eval_f(spec.f, z)
    bound = np.sum(np.abs(z), axis=0) ** spec.p
    for k in range(2):
        assert np.all(np.abs(fz[k]) <= C[k] * bound * (1 + 1e-12))


@pytest.mark.parametrize("spec", [quadratic(0.5), cubic(3.0, 1.0)], ids=lambda s: s.name)
def test_presets_pass_hypotheses(spec):
    report = validate_hypotheses(spec, samples=64)
    assert hypotheses_ok(report)
    assert report["H8"]["status"] == "heuristic-pass"
    assert all(report[k]["status"] == "pass" for k in ("H1", "H2*", "H3", "H4*", "H5*", "H7"))


def test_imaginary_coefficient_fails_h7():
    spec = build_spec(1, (1.0, 1.0), (1.0, 1.0), (0.0, 0.0), [Monomial(1j, ((0, 2), (1, 0)))])
    report = validate_hypotheses(spec, samples=32)
    assert report["H7"]["status"] == "fail"
    assert not hypotheses_ok(report)


def test_declared_p_mismatch():
    with pytest.raises(ValueError, match="declared p"):
        build_spec(1, (1.0,), (1.0,), (0.0,), [Monomial(0.25, ((2, 2),))], p=2)


def test_nonhomogeneous_potential_rejected():
    with pytest.raises(ValueError, match="non-homogeneous"):
        Potential(l=1, p=3, terms=(Monomial(1.0, ((2, 2),)), Monomial(1.0, ((1, 1),))))
