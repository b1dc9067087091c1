import numpy as np
import pytest

from nlslab.diagnostics import variance
from nlslab.evolution import (BLOW_UP, INVALID, REACHED_T_END, EvolveConfig, Stepper, evolve,
                              exact_pseudo_conformal, exact_pseudo_conformal_K, kinetic,
                              pseudo_conformal_data, relative_l2_error, step, suggest_half_length)
from nlslab.groundstate import core_quantities, elliptic_params, solve_ground_state
from nlslab.nonlinearity import Potential, SystemSpec
from nlslab.spectral import FieldState, Grid, gaussian_state, zero_state
from nlslab.specfile import cubic, quadratic, single_cubic


def free_spec(n=1):
    return SystemSpec(n=n, l=1, p=3, alpha=(1.0,), gamma=(1.0,), beta=(0.0,),
                      potential=Potential(l=1, p=3, terms=()), sigma=(2.0,))


@pytest.fixture(scope="module")
def pc_setup():
    spec = cubic(3.0, 1.0, n=2).with_beta((0.0, 0.0))
    grid = Grid(2, 256, 6.0)
    gs = solve_ground_state(elliptic_params(spec), grid, residual_tol=1e-6)
    assert gs.converged
    return spec, gs


def test_config_validation():
    with pytest.raises(ValueError):
        EvolveConfig(dt=1e-3, t_end=1.0, dt_min=1e-2)
    with pytest.raises(ValueError):
        EvolveConfig(dt=1e-3, t_end=1.0, blowup_factor=1.0)
    with pytest.raises(ValueError):
        EvolveConfig(dt=1e-3, t_end=1.0, snapshot_stride=0)


def test_free_evolution_unitary():
    g = Grid(1, 256, 20.0)
    u0 = FieldState(g, (np.exp(-g.x ** 2) * (1 + 0.5j * g.x),))
    out = evolve(u0, free_spec(), EvolveConfig(dt=1e-2, t_end=1.0))
    n0 = g.integrate(np.abs(u0.components[0]) ** 2)
    n1 = g.integrate(np.abs(out.final.components[0]) ** 2)
    assert abs(n1 / n0 - 1) < 1e-14


def test_linear_step_unitary_and_reversible():
    g = Grid(2, 64, 8.0)
    spec = quadratic(0.5, n=2)
    st = Stepper(g, spec)
    u = [np.exp(-g.r2) * (1 + 1j * g.coords[0]), np.exp(-2 * g.r2) + 0j]
    fw = st.linear(u, 1e-2)
    for a, b in zip(u, fw):
        assert abs(g.integrate(np.abs(b) ** 2) / g.integrate(np.abs(a) ** 2) - 1) < 1e-13
    back = st.linear(fw, -1e-2)
    assert max(np.max(np.abs(a - b)) for a, b in zip(u, back)) < 1e-13


def test_compiled_kernel_matches_numpy():
    g = Grid(1, 128, 10.0)
    spec = cubic(3.0, 1.0)
    u = [np.exp(-g.x ** 2) * (1 + 0.3j), 0.5 * np.exp(-g.x ** 2) * (1 - 0.2j)]
    a = Stepper(g, spec, compiled=True).nonlinear(u, 1e-2)
    b = Stepper(g, spec, compiled=False).nonlinear(u, 1e-2)
    assert max(np.max(np.abs(x - y)) for x, y in zip(a, b)) < 1e-14


def test_evolve_matches_repeated_steps():
    g = Grid(1, 256, 20.0)
    spec = quadratic(0.5)
    u0 = gaussian_state(g, [1.0, 0.5])
    s = u0
    for _ in range(50):
        s = step(s, 1e-2, spec)
    out = evolve(u0, spec, EvolveConfig(dt=1e-2, t_end=0.5))
    assert out.status == REACHED_T_END and out.final.t == pytest.approx(0.5)
    assert max(np.max(np.abs(a - b)) for a, b in zip(s.components, out.final.components)) < 1e-13


def test_zero_data():
    g = Grid(1, 64, 10.0)
    out = evolve(zero_state(g, 2), quadratic(0.5), EvolveConfig(dt=1e-2, t_end=0.5))
    assert out.status == REACHED_T_END
    assert all(np.all(c == 0) for c in out.final.components)


def test_non_finite_initial_data():
    g = Grid(1, 64, 10.0)
    bad = FieldState(g, (np.full(g.shape, np.nan, complex),))
    assert evolve(bad, single_cubic(), EvolveConfig(dt=1e-2, t_end=0.1)).status == INVALID


def test_step_raises_on_overflow():
    g = Grid(1, 64, 10.0)
    huge = FieldState(g, (1e120 * np.exp(-g.x ** 2) + 0j,))
    with np.errstate(all="ignore"), pytest.raises(FloatingPointError):
        step(huge, 1e-2, single_cubic())


def test_timestamps_increase_and_end_at_t_end():
    g = Grid(1, 128, 15.0)
    out = evolve(gaussian_state(g, [1.0]), single_cubic(), EvolveConfig(dt=3e-3, t_end=0.1, snapshot_stride=7))
    ts = [r.t for r in out.series]
    assert all(b > a for a, b in zip(ts, ts[1:]))
    assert ts[-1] == pytest.approx(0.1, abs=1e-12)


def test_fields_out(tmp_path):
    g = Grid(1, 64, 10.0)
    evolve(gaussian_state(g, [1.0]), single_cubic(), EvolveConfig(dt=1e-2, t_end=0.05, snapshot_stride=1),
           fields_out=tmp_path)
    assert len(list(tmp_path.glob("snap_*.nlsfld"))) == 6


def test_soliton_modulus_stationary():
    g = Grid(1, 1024, 20.0)
    spec = single_cubic().with_beta((1.0,))
    gs = solve_ground_state(elliptic_params(single_cubic()), g)
    u0 = FieldState(g, tuple(c + 0j for c in gs.psi.components))
    dev = []
    out = evolve(u0, spec, EvolveConfig(dt=1e-3, t_end=1.0, snapshot_stride=50),
                 observer=lambda s, r: dev.append(np.max(np.abs(np.abs(s.components[0]) - gs.psi.components[0]))))
    assert out.status == REACHED_T_END
    assert max(dev) < 1e-6


def test_blowup_detected_by_growth():
    g = Grid(2, 64, 8.0)
    spec = single_cubic(n=2)
    u0 = gaussian_state(g, [3.0])
    out = evolve(u0, spec, EvolveConfig(dt=1e-3, t_end=1.0, blowup_factor=20.0))
    assert out.status == BLOW_UP and out.t_stop < 1.0
    assert out.status_label().startswith("BlowUpDetected(")


def test_adaptive_dt_floor():
    g = Grid(2, 64, 8.0)
    u0 = gaussian_state(g, [3.0])
    out = evolve(u0, single_cubic(n=2), EvolveConfig(dt=1e-3, t_end=1.0, dt_min=2e-4, adaptive=True))
    assert out.status == BLOW_UP


def test_pseudo_conformal_requires_critical_power():
    spec = quadratic(0.5, n=2)
    g = Grid(2, 32, 8.0)
    gs = solve_ground_state(elliptic_params(spec), g, residual_tol=1e-6)
    with pytest.raises(ValueError, match="1 \\+ 4/n"):
        pseudo_conformal_data(gs, 1.0, spec)


def test_pseudo_conformal_requires_resonance(pc_setup):
    _, gs = pc_setup
    with pytest.raises(ValueError, match="mass resonance"):
        pseudo_conformal_data(gs, 1.0, cubic(4.0, 1.0, n=2).with_beta((0.0, 0.0)))


def test_pseudo_conformal_requires_zero_beta(pc_setup):
    _, gs = pc_setup
    with pytest.raises(ValueError, match="beta = 0"):
        pseudo_conformal_data(gs, 1.0, cubic(3.0, 1.0, n=2))


def test_pseudo_conformal_unit_T(pc_setup):
    spec, gs = pc_setup
    g = gs.psi.grid
    v = pseudo_conformal_data(gs, 1.0, spec)
    for k in range(2):
        expected = np.exp(-1j * spec.ratios[k] * g.r2 / 4) * gs.psi.components[k]
        assert np.max(np.abs(v.components[k] - expected)) < 1e-14
    assert relative_l2_error(v, exact_pseudo_conformal(gs, 1.0, 0.0, spec)) == 0.0


def test_pseudo_conformal_mass_and_energy(pc_setup):
    spec, gs = pc_setup
    Qpsi = core_quantities(gs.psi, spec)[3]
    for t in (0.0, 0.3):
        v = exact_pseudo_conformal(gs, 1.0, t, spec)
        assert core_quantities(v, spec)[3] == pytest.approx(Qpsi, rel=1e-10)
        assert kinetic(v, spec) == pytest.approx(exact_pseudo_conformal_K(gs, 1.0, t, spec), rel=1e-6)


def test_pseudo_conformal_inward_phase(pc_setup):
    spec, gs = pc_setup
    g = gs.psi.grid
    T = 2.0
    v = pseudo_conformal_data(gs, T, spec)
    _, Vdot = variance(v, spec, warn=False)
    # for the dilated profile the moment of psi(x/T) is T^{n+2} times that of psi
    moment = sum(a * a / gm * g.integrate(g.r2 * np.abs(c) ** 2)
                 for a, gm, c in zip(spec.alpha, spec.gamma, v.components))
    assert Vdot < 0
    assert Vdot == pytest.approx(-2.0 / T * moment, rel=1e-6)


def test_suggest_half_length(pc_setup):
    _, gs = pc_setup
    assert suggest_half_length(gs, eps=1e-12) > suggest_half_length(gs, eps=1e-6) > 0
