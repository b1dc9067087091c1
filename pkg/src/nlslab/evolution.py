"""Split-step time integration, blow-up detection and exact pseudo-conformal solutions."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from . import _kernels
from .diagnostics import BOUNDARY_WARN, DiagnosticsRecord, attach_fd, make_record
from .groundstate import GroundStateResult, core_quantities
from .nonlinearity import SystemSpec, check_mass_resonance, eval_f
from .spectral import FieldState, Grid, write_field

log = logging.getLogger(__name__)

REACHED_T_END = "ReachedTEnd"
BLOW_UP = "BlowUpDetected"
INVALID = "Invalid"


@dataclass(frozen=True)
class EvolveConfig:
    dt: float
    t_end: float
    dt_min: float = 1e-8
    blowup_factor: float = 1e6
    snapshot_stride: int = 10
    adaptive: bool = False
    recover_steps: int = 100

    def __post_init__(self) -> None:
        if not self.dt > self.dt_min > 0:
            raise ValueError("need dt > dt_min > 0")
        if not self.blowup_factor > 1:
            raise ValueError("blowup_factor must exceed 1")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")
        if not self.t_end >= 0:
            raise ValueError("t_end must be nonnegative")


@dataclass(frozen=True)
class EvolveOutcome:
    final: FieldState
    status: str
    t_stop: float
    series: list[DiagnosticsRecord] = field(repr=False)
    reason: str = ""
    steps: int = 0

    @property
    def blew_up(self) -> bool:
        return self.status == BLOW_UP

    def status_label(self) -> str:
        if self.status == REACHED_T_END:
            return REACHED_T_END
        return f"{self.status}({self.t_stop:.6g})"


class Stepper:
    """Strang splitting: half linear step, RK4 nonlinear step, half linear step."""

    def __init__(self, grid: Grid, spec: SystemSpec, compiled: bool = True):
        if spec.l < 1:
            raise ValueError("empty system")
        self.grid = grid
        self.spec = spec
        structure, self._coeffs = _kernels.pack(spec.f.components)
        self._kernel = _kernels.rk4_kernel(structure) if compiled else None
        self._scale = np.array([1j / a for a in spec.alpha])
        self.last_K: float | None = None
        self._phase = [-(g * grid.ksq + b) / a for a, g, b in zip(spec.alpha, spec.gamma, spec.beta)]
        self._cache: dict[float, list[np.ndarray]] = {}
        self._inv_alpha = [1.0 / a for a in spec.alpha]

    def _multipliers(self, h: float) -> list[np.ndarray]:
        m = self._cache.get(h)
        if m is None:
            if len(self._cache) > 8:
                self._cache.clear()
            m = [np.exp(1j * h * ph) for ph in self._phase]
            self._cache[h] = m
        return m

    def linear(self, comps: list[np.ndarray], h: float, track_K: bool = False) -> list[np.ndarray]:
        g = self.grid
        out = []
        K = 0.0
        for m, c, gm in zip(self._multipliers(h), comps, self.spec.gamma):
            ch = g.fft(c)
            if track_K:
                # the multiplier is unimodular, so |DFT| and hence K are unchanged
                K += gm * float(np.sum(g.ksq * (ch.real ** 2 + ch.imag ** 2)))
            out.append(g.ifft(m * ch))
        if track_K:
            self.last_K = K * g.cell_volume / g.N ** g.n
        return out

    def _rhs(self, comps: list[np.ndarray]) -> list[np.ndarray]:
        f = eval_f(self.spec.f, comps)
        return [1j * ia * fk for ia, fk in zip(self._inv_alpha, f)]

    def nonlinear(self, comps: list[np.ndarray], h: float) -> list[np.ndarray]:
        if self._kernel is not None:
            Z = np.stack([np.ravel(c) for c in comps]).astype(complex)
            self._kernel(Z, self._coeffs, self._scale, h)
            return [Z[k].reshape(self.grid.shape) for k in range(len(comps))]
        k1 = self._rhs(comps)
        k2 = self._rhs([c + 0.5 * h * k for c, k in zip(comps, k1)])
        k3 = self._rhs([c + 0.5 * h * k for c, k in zip(comps, k2)])
        k4 = self._rhs([c + h * k for c, k in zip(comps, k3)])
        return [c + h / 6.0 * (a + 2 * b + 2 * cc + d) for c, a, b, cc, d in zip(comps, k1, k2, k3, k4)]

    def __call__(self, state: FieldState, dt: float) -> FieldState:
        comps = [np.asarray(c, dtype=complex) for c in state.components]
        comps = self.linear(comps, 0.5 * dt)
        comps = self.nonlinear(comps, dt)
        comps = self.linear(comps, 0.5 * dt, track_K=True)
        return FieldState(self.grid, tuple(comps), state.t + dt)


_STEPPERS: dict[tuple, Stepper] = {}


def step(state: FieldState, dt: float, spec: SystemSpec) -> FieldState:
    """One Strang step of size ``dt``; raises FloatingPointError on a non-finite result."""
    key = (state.grid, spec)
    st = _STEPPERS.get(key)
    if st is None:
        if len(_STEPPERS) > 16:
            _STEPPERS.clear()
        st = _STEPPERS[key] = Stepper(state.grid, spec)
    out = st(state, dt)
    if not out.is_finite():
        raise FloatingPointError(f"non-finite state at t={out.t:g}")
    return out


def kinetic(state: FieldState, spec: SystemSpec) -> float:
    g = state.grid
    return float(sum(gm * g.gradient_norm_sq(c) for gm, c in zip(spec.gamma, state.components)))


def evolve(u0: FieldState, spec: SystemSpec, cfg: EvolveConfig,
           fields_out: str | Path | None = None,
           observer: Callable[[FieldState, DiagnosticsRecord], None] | None = None) -> EvolveOutcome:
    """Integrate from ``u0.t`` to ``cfg.t_end``, recording diagnostics every ``snapshot_stride`` steps.

    ``observer`` is called with each recorded state and its diagnostics.
    """
    if not u0.is_finite():
        return EvolveOutcome(u0, INVALID, u0.t, [], "non-finite initial data")
    stepper = Stepper(u0.grid, spec)
    state = FieldState(u0.grid, tuple(np.asarray(c, dtype=complex) for c in u0.components), u0.t)
    K0 = kinetic(state, spec)
    # largest K the grid can represent at this mass; growth beyond it is never seen
    K_cap = float(np.max(u0.grid.ksq)) * sum(
        g * u0.grid.integrate(np.abs(c) ** 2) for g, c in zip(spec.gamma, state.components))
    if K0 > 0 and cfg.blowup_factor * K0 > K_cap:
        log.info("blowup_factor * K(u0) = %.3g exceeds the grid's resolvable K = %.3g; "
                    "growth-based blow-up detection cannot trigger", cfg.blowup_factor * K0, K_cap)
    series: list[DiagnosticsRecord] = []
    warned = [False]
    snap = [0]

    def record(s: FieldState) -> None:
        rec = make_record(s, spec)
        if rec.boundary_mass > BOUNDARY_WARN and not warned[0]:
            warned[0] = True
            log.warning("boundary mass fraction %.2e at t=%g exceeds %.0e; tails are not resolved",
                        rec.boundary_mass, s.t, BOUNDARY_WARN)
        series.append(rec)
        if observer is not None:
            observer(s, rec)
        if fields_out is not None:
            write_field(Path(fields_out) / f"snap_{snap[0]:06d}.nlsfld", s)
            snap[0] += 1

    record(state)
    grid = state.grid
    dt = cfg.dt
    K_ref = K0
    stable = 0
    nsteps = 0
    status, reason = REACHED_T_END, ""
    t = state.t
    t_anchor, fixed_count = t, 0  # drift-free time stamps between changes of dt
    # Consecutive half linear steps are merged: v holds the state pre-advanced by
    # half a linear step, and the physical state is recovered only when needed.
    v_dt = dt
    v = stepper.linear(list(state.components), 0.5 * v_dt)

    def physical(at: float) -> FieldState:
        return FieldState(grid, tuple(stepper.linear(v, -0.5 * v_dt)), at)

    while cfg.t_end - t > 1e-12 * max(1.0, abs(cfg.t_end)):
        h = min(dt, cfg.t_end - t)
        if h != v_dt:
            v = stepper.linear(stepper.linear(v, -0.5 * v_dt), 0.5 * h)
            v_dt = h
        w = stepper.nonlinear(v, h)
        v_new = stepper.linear(w, h, track_K=True)
        nsteps += 1
        K = stepper.last_K
        if not (math.isfinite(K) and all(np.all(np.isfinite(c)) for c in v_new)):
            status, reason = INVALID, f"non-finite state at t={t + h:.6g}"
            break
        v = v_new
        if h == dt:
            fixed_count += 1
            t = t_anchor + fixed_count * dt
        else:
            t = cfg.t_end
        if K0 > 0 and K > cfg.blowup_factor * K0:
            status, reason = BLOW_UP, f"K grew beyond {cfg.blowup_factor:g} K(u0)"
            break
        if cfg.adaptive and K0 > 0:
            if K > 2.0 * K_ref:
                dt *= 0.5
                K_ref, stable = K, 0
                t_anchor, fixed_count = t, 0
                if dt < cfg.dt_min:
                    status, reason = BLOW_UP, f"time step fell below dt_min={cfg.dt_min:g}"
                    break
            else:
                stable += 1
                if stable >= cfg.recover_steps and dt < cfg.dt:
                    dt = min(2.0 * dt, cfg.dt)
                    K_ref, stable = K, 0
                    t_anchor, fixed_count = t, 0
        if nsteps % cfg.snapshot_stride == 0:
            record(physical(t))
    state = physical(t)
    if status != INVALID and series[-1].t != t:
        record(state)
    if status == INVALID:
        log.warning("evolution stopped: %s", reason)
    return EvolveOutcome(state, status, t, attach_fd(series), reason, nsteps)


# --------------------------------------------------------------------------
# pseudo-conformal blow-up

def _check_pseudo_conformal(spec: SystemSpec, n: int) -> None:
    if Fraction(spec.p) != 1 + Fraction(4, n):
        raise ValueError(f"pseudo-conformal transform needs p = 1 + 4/n (p={spec.p}, n={n})")
    if not check_mass_resonance(spec):
        raise ValueError("pseudo-conformal transform needs mass resonance")
    if any(b != 0 for b in spec.beta):
        raise ValueError("pseudo-conformal transform is implemented for beta = 0 only")


def standing_frequencies(gs: GroundStateResult) -> np.ndarray:
    """nu_k = b_k / alpha_k, the phase rates of the standing wave with beta = 0."""
    return np.asarray(gs.params.b) / np.asarray(gs.params.spec.alpha)


def _transform(gs: GroundStateResult, spec: SystemSpec, T: float, t: float) -> FieldState:
    grid = gs.psi.grid
    n = grid.n
    _check_pseudo_conformal(spec, n)
    if not T > 0:
        raise ValueError("T must be positive")
    tau = T - t
    if not tau > 0:
        raise ValueError("t must be smaller than T")
    nu = standing_frequencies(gs)
    comps = []
    for k, psi in enumerate(gs.psi.components):
        prof = grid.dilate(np.real(psi), tau)
        phase = -spec.ratios[k] * grid.r2 / (4.0 * tau) + nu[k] * t / (T * tau)
        comps.append(tau ** (-n / 2.0) * np.exp(1j * phase) * prof)
    return FieldState(grid, tuple(comps), t)


def pseudo_conformal_data(gs: GroundStateResult, T: float, spec: SystemSpec) -> FieldState:
    """Initial data T^{-n/2} e^{-i(alpha/gamma)|x|^2/(4T)} ψ(x/T) of the explicit blow-up solution."""
    return _transform(gs, spec, T, 0.0)


def exact_pseudo_conformal(gs: GroundStateResult, T: float, t: float, spec: SystemSpec) -> FieldState:
    """Closed-form blow-up solution at time t < T, built from the standing wave with beta = 0."""
    return _transform(gs, spec, T, t)


def exact_pseudo_conformal_K(gs: GroundStateResult, T: float, t: float, spec: SystemSpec) -> float:
    """K(v(t)) = K(ψ)/(T-t)^2 + (1/4) sum gamma (alpha/gamma)^2 int |x|^2 ψ^2, from the closed form."""
    grid = gs.psi.grid
    K_psi = core_quantities(gs.psi, spec)[0]
    moment = sum(g * r * r * grid.integrate(grid.r2 * np.real(c) ** 2)
                 for g, r, c in zip(spec.gamma, spec.ratios, gs.psi.components))
    return K_psi / (T - t) ** 2 + 0.25 * moment


def relative_l2_error(a: FieldState, b: FieldState) -> float:
    g = a.grid
    num = sum(g.integrate(np.abs(x - y) ** 2) for x, y in zip(a.components, b.components))
    den = sum(g.integrate(np.abs(y) ** 2) for y in b.components)
    return math.sqrt(num / den) if den > 0 else math.sqrt(num)


def suggest_half_length(gs: GroundStateResult, eps: float = 1e-12, dilation: float = 1.0) -> float:
    """Box half-length so that the ground-state tails fall below ``eps`` at the boundary."""
    spec = gs.params.spec
    decay = min(math.sqrt(b / g) for b, g in zip(gs.params.b, spec.gamma))
    amp = max(gs.psi.sup_norm(), 1.0)
    return dilation * (math.log(amp / eps) + 2.0) / decay
