"""Conserved and virial quantities along trajectories, and the global / blow-up classifier."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .groundstate import (GroundStateResult, core_quantities, optimal_gn_constant,
                          weinstein_exponents)
from .nonlinearity import SystemSpec, check_mass_resonance
from .spectral import FieldState, Grid

log = logging.getLogger(__name__)

BOUNDARY_WARN = 1e-10

L2_SUBCRITICAL = "L2Subcritical"
L2_CRITICAL = "L2Critical"
INTERCRITICAL = "Intercritical"
H1_CRITICAL_OR_BEYOND = "H1CriticalOrBeyond"


def critical_index(n: int, p: int | float) -> tuple[float, str]:
    """Critical Sobolev index s_c = n/2 - 2/(p-1) and the regime it selects."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    pf = Fraction(p).limit_denominator(10 ** 6)
    sc = Fraction(n, 2) - 2 / (pf - 1)
    if sc < 0:
        regime = L2_SUBCRITICAL
    elif sc == 0:
        regime = L2_CRITICAL
    elif sc < 1:
        regime = INTERCRITICAL
    else:
        regime = H1_CRITICAL_OR_BEYOND
    return float(sc), regime


# --------------------------------------------------------------------------
# trajectory records

@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    Q: float
    E: float
    K: float
    L: float
    P: float
    V: float
    Vdot: float
    Vddot_formula: float | None
    Vddot_fd: float | None
    sup_norm: float
    boundary_mass: float

    def with_fd(self, value: float | None) -> "DiagnosticsRecord":
        d = asdict(self)
        d["Vddot_fd"] = value
        return DiagnosticsRecord(**d)


def variance(u: FieldState, spec: SystemSpec, warn: bool = True) -> tuple[float, float]:
    """V = sum (alpha^2/gamma) int |x|^2 |u|^2 and V' = 4 sum alpha Im int (x . grad u) conj(u)."""
    grid = u.grid
    weights = np.asarray(spec.alpha) ** 2 / np.asarray(spec.gamma)
    V = sum(w * grid.integrate(grid.r2 * np.abs(c) ** 2) for w, c in zip(weights, u.components))
    Vdot = 0.0
    for a, c in zip(spec.alpha, u.components):
        if not np.iscomplexobj(c):
            continue
        grads = grid.gradient(c)
        xg = sum(x * g for x, g in zip(grid.coords, grads))
        Vdot += 4.0 * a * grid.integrate(np.imag(xg * np.conj(c)))
    frac = boundary_mass(u) if warn else 0.0
    if frac > BOUNDARY_WARN:
        log.warning("variance: boundary mass fraction %.2e exceeds %.0e", frac, BOUNDARY_WARN)
    return float(V), float(Vdot)


def boundary_mass(u: FieldState) -> float:
    density = sum(np.abs(c) ** 2 for c in u.components)
    return u.grid.boundary_fraction(density)


def virial_rhs(u: FieldState, spec: SystemSpec, force: bool = False) -> float | None:
    """2n(p-1)(E - L) + 2(4 - np + n) K, the second derivative of the variance.

    The identity needs mass resonance. For non-resonant systems ``None`` is
    returned unless ``force`` is set, in which case the same expression is
    evaluated (and differs from the true V'' by the non-resonant flux term).
    """
    if not force and not check_mass_resonance(spec):
        log.info("virial_rhs absent: system is not mass-resonant")
        return None
    n, p = u.grid.n, spec.p
    K, L, P, _, _ = core_quantities(u, spec)
    E = K + L - 2.0 * P
    return float(2 * n * (p - 1) * (E - L) + 2 * (4 - n * p + n) * K)


def make_record(u: FieldState, spec: SystemSpec, force_formula: bool = True) -> DiagnosticsRecord:
    K, L, P, Q, _ = core_quantities(u, spec)
    V, Vdot = variance(u, spec, warn=False)
    n, p = u.grid.n, spec.p
    rhs = None
    if force_formula or check_mass_resonance(spec):
        rhs = float(2 * n * (p - 1) * (K - 2.0 * P) + 2 * (4 - n * p + n) * K)
    return DiagnosticsRecord(t=float(u.t), Q=Q, E=K + L - 2.0 * P, K=K, L=L, P=P, V=V, Vdot=Vdot,
                             Vddot_formula=rhs, Vddot_fd=None, sup_norm=u.sup_norm(),
                             boundary_mass=boundary_mass(u))


def second_difference(t: Sequence[float], y: Sequence[float]) -> list[float | None]:
    """Three-point second derivative on a possibly non-uniform mesh; ends are None."""
    out: list[float | None] = [None] * len(t)
    for i in range(1, len(t) - 1):
        h1 = t[i] - t[i - 1]
        h2 = t[i + 1] - t[i]
        if h1 <= 0 or h2 <= 0:
            continue
        out[i] = 2.0 * ((y[i + 1] - y[i]) / h2 - (y[i] - y[i - 1]) / h1) / (h1 + h2)
    return out


def attach_fd(series: Sequence[DiagnosticsRecord]) -> list[DiagnosticsRecord]:
    fd = second_difference([r.t for r in series], [r.V for r in series])
    return [r.with_fd(v) for r, v in zip(series, fd)]


def virial_residuals(series: Sequence[DiagnosticsRecord]) -> list[float | None]:
    return [None if r.Vddot_fd is None or r.Vddot_formula is None
            else r.Vddot_fd - r.Vddot_formula for r in series]


# --------------------------------------------------------------------------
# localized virial

# septic smoothstep: 0 -> 1 on [0, 1] with three vanishing derivatives at both ends
_SMOOTH = Polynomial([0, 0, 0, 0, 35, -84, 70, -20])
_S = _SMOOTH(Polynomial([-0.5, 0.5]))          # s = (r - 1) / 2 on the bridge [1, 3]
_R = Polynomial([0.0, 1.0])
_CHI_P = 2 * _R * (1 - _S)                     # chi'
_CHI = _CHI_P.integ(lbnd=1.0, k=1.0)           # chi(1) = 1
_CHI_PP = _CHI_P.deriv()
CHI_PLATEAU = float(_CHI(3.0))


def _laplacian_chi(n: int) -> Polynomial:
    # chi'/r = 2 (1 - S) is polynomial, so the radial Laplacian stays polynomial
    return _CHI_PP + (n - 1) * 2 * (1 - _S)


def chi_profile(r: np.ndarray, n: int) -> dict[str, np.ndarray]:
    """chi, chi'', Δchi, Δ²chi of the unit cutoff at radii ``r``."""
    r = np.asarray(r, dtype=float)
    inner, bridge = r <= 1.0, (r > 1.0) & (r < 3.0)
    g = _laplacian_chi(n)
    chi = np.full(r.shape, CHI_PLATEAU)
    chi2 = np.zeros(r.shape)
    lap = np.zeros(r.shape)
    bil = np.zeros(r.shape)
    chi[inner] = r[inner] ** 2
    chi2[inner] = 2.0
    lap[inner] = 2.0 * n
    rb = r[bridge]
    chi[bridge] = _CHI(rb)
    chi2[bridge] = _CHI_PP(rb)
    lap[bridge] = g(rb)
    bil[bridge] = g.deriv(2)(rb) + (n - 1) * g.deriv()(rb) / rb
    return {"chi": chi, "chi2": chi2, "lap": lap, "bilap": bil}


def chi_R(r: np.ndarray, n: int, R: float) -> dict[str, np.ndarray]:
    """Scaled cutoff chi_R(r) = R^2 chi(r/R) and its derivatives."""
    c = chi_profile(np.asarray(r) / R, n)
    return {"chi": R ** 2 * c["chi"], "chi2": c["chi2"], "lap": c["lap"], "bilap": c["bilap"] / R ** 2}


def radial_deviation(u: FieldState) -> float:
    """Largest |u - u(axis, |x|)| relative to sup|u|, using spectral interpolation along an axis."""
    grid = u.grid
    if not isinstance(grid, Grid):
        return 0.0
    scale = max(u.sup_norm(), 1e-300)
    worst = 0.0
    for c in u.components:
        if grid.n == 1:
            mirror = np.roll(c[::-1], 1)          # x_i -> -x_i on the periodic grid
            worst = max(worst, float(np.max(np.abs(c - mirror))))
            continue
        mid = grid.N // 2                        # x = 0 sits at index N/2
        line = c[(slice(None),) + (mid,) * (grid.n - 1)]
        r = np.sqrt(grid.r2)
        inside = r < grid.L - grid.h
        radii, inverse = np.unique(np.round(r[inside], 12), return_inverse=True)
        prof = grid.sample_line(line, radii)
        worst = max(worst, float(np.max(np.abs(c[inside] - prof[inverse]))))
        worst = max(worst, float(np.max(np.abs(c[~inside]), initial=0.0)))
    return worst / scale


def localized_virial(u: FieldState, spec: SystemSpec, R: float, radial_tol: float = 1e-8,
                     check_resonance: bool = True) -> tuple[float, float]:
    """(V_R, V_R'') with V_R = ½ ∫ chi_R sum (alpha^2/gamma) |u|^2.

    For large R the cutoff is inactive and V_R'' equals half of ``virial_rhs``.
    """
    if check_resonance and not check_mass_resonance(spec):
        raise ValueError("localized virial requires mass resonance")
    dev = radial_deviation(u)
    if dev > radial_tol:
        raise ValueError(f"input is not radially symmetric (deviation {dev:.2e})")
    grid = u.grid
    c = chi_R(np.sqrt(grid.r2), grid.n, R)
    weights = np.asarray(spec.alpha) ** 2 / np.asarray(spec.gamma)
    VR = 0.5 * sum(w * grid.integrate(c["chi"] * np.abs(v) ** 2) for w, v in zip(weights, u.components))
    grad_term = 0.0
    mass_term = 0.0
    for g, v in zip(spec.gamma, u.components):
        grads = grid.gradient(v)
        grad_term += g * grid.integrate(c["chi2"] * sum(np.abs(d) ** 2 for d in grads))
        mass_term += g * grid.integrate(c["bilap"] * np.abs(v) ** 2)
    F = spec.potential(u.components).real
    Vdd = 2.0 * grad_term - 0.5 * mass_term + (1 - spec.p) * grid.integrate(c["lap"] * F)
    return float(VR), float(Vdd)


# --------------------------------------------------------------------------
# classifier

GLOBAL_1I = "GlobalByTheorem1i"
GLOBAL_1II = "GlobalByTheorem1ii"
GLOBAL_2I = "GlobalByTheorem2i"
BLOWUP_2II = "BlowUpCandidateByTheorem2ii"
INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class Verdict:
    regime: str
    s_c: float
    thresholds: dict
    gamma_threshold: float | None
    mass_resonant: bool
    classification: str
    assume: str = "finite-variance"
    notes: tuple[str, ...] = field(default=())

    def as_dict(self) -> dict:
        d = asdict(self)
        d["notes"] = list(self.notes)
        return d


def threshold_relations(gs: GroundStateResult) -> dict:
    """Relative residuals of K(ψ) = n/(2(1-s_c)) Q(ψ) and 𝓔(ψ) = s_c/(1-s_c) Q(ψ)."""
    fun = gs.functionals
    n, p = gs.psi.grid.n, gs.params.spec.p
    sc, _ = critical_index(n, p)
    Qpsi = fun.Q
    Kpred = n / (2 * (1 - sc)) * Qpsi
    Epsi = fun.K - 2.0 * fun.P  # energy with beta = 0
    Epred = sc / (1 - sc) * Qpsi
    return {
        "K_psi": fun.K, "K_predicted": Kpred, "K_relation": abs(fun.K - Kpred) / abs(Kpred),
        "Ecal_psi": Epsi, "Ecal_predicted": Epred,
        "E_relation": abs(Epsi - Epred) / abs(Qpsi),
    }


def gamma_forms(n: int, p: int, Q0: float, Qpsi: float, c_opt: float) -> tuple[float, float]:
    """Both closed forms of the comparison threshold γ: (bq)^{-1/(q-1)} and the mass form."""
    sc, _ = critical_index(n, p)
    a_exp, q = weinstein_exponents(n, p)
    b = 2.0 * c_opt * Q0 ** a_exp
    g1 = (b * q) ** (-1.0 / (q - 1.0))
    g2 = n / (2 * (1 - sc)) * Qpsi ** (1 / sc) / Q0 ** ((1 - sc) / sc)
    return g1, g2


def classification_from_thresholds(regime: str, thr: dict, mass_resonant: bool, assume: str,
                                   n: int, p: int) -> str:
    """Pure decision rule over a thresholds record."""
    if regime == L2_SUBCRITICAL:
        return GLOBAL_1I
    if regime == L2_CRITICAL:
        return GLOBAL_1II if thr["Q_u0"] < thr["Q_psi"] else INDETERMINATE
    if regime != INTERCRITICAL:
        return INDETERMINATE
    if not thr["sharp1"]:
        return INDETERMINATE
    if thr["sharp2_lhs"] < thr["sharp2_rhs"]:
        return GLOBAL_2I
    if thr["sharp2_lhs"] > thr["sharp2_rhs"] and mass_resonant:
        if assume == "finite-variance":
            return BLOWUP_2II
        if assume == "radial" and n >= 2 and radial_blowup_range(n, p):
            return BLOWUP_2II
    return INDETERMINATE


def radial_blowup_range(n: int, p: int) -> bool:
    """1 + 4/n < p < min((n+2)/(n-2), 5)."""
    upper = Fraction(5) if n <= 2 else min(Fraction(n + 2, n - 2), Fraction(5))
    return Fraction(n + 4, n) < p < upper


def classify(u0: FieldState, spec: SystemSpec, gs: GroundStateResult,
             assume: str = "finite-variance", gate: float = 1e-3) -> Verdict:
    """Place initial data in the global-existence or blow-up regime of the dichotomy theorems."""
    if assume not in ("finite-variance", "radial"):
        raise ValueError("assume must be 'finite-variance' or 'radial'")
    if not gs.converged:
        raise ValueError("ground state did not converge")
    if gs.params.omega != 1.0 or any(b != 0.0 for b in gs.params.beta):
        raise ValueError("classifier needs the ground state at omega = 1, beta = 0")
    n, p = u0.grid.n, spec.p
    sc, regime = critical_index(n, p)
    resonant = check_mass_resonance(spec)
    notes = []
    K0, L0, P0, Q0, _ = core_quantities(u0, spec)
    E0 = K0 + L0 - 2.0 * P0
    fun = gs.functionals
    Qpsi, Kpsi = fun.Q, fun.K
    thr: dict = {"Q_u0": Q0, "Q_psi": Qpsi, "E_u0": E0, "K_u0": K0,
                 "Ecal_psi": fun.K - 2.0 * fun.P, "K_psi": Kpsi}
    gamma = None
    if regime == H1_CRITICAL_OR_BEYOND:
        notes.append("p is H1-critical or beyond; no theorem applies")
    if regime == L2_CRITICAL:
        thr["mass_margin"] = (Qpsi - Q0) / Qpsi
    if regime == INTERCRITICAL:
        rel = threshold_relations(gs)
        worst = max(rel["K_relation"], rel["E_relation"])
        if worst >= gate:
            raise ValueError(f"ground-state threshold relations off by {worst:.2e} (gate {gate:g})")
        thr["threshold_relations"] = rel
        Epsi = thr["Ecal_psi"]
        rhs1 = Qpsi ** (1 - sc) * Epsi ** sc
        lhs1 = Q0 ** (1 - sc) * E0 ** sc if E0 > 0 else None
        thr["sharp1_lhs"] = lhs1
        thr["sharp1_rhs"] = rhs1
        thr["sharp1"] = bool(E0 <= 0 or lhs1 < rhs1)
        if E0 <= 0:
            notes.append("E(u0) <= 0: the energy condition holds trivially")
        thr["sharp2_lhs"] = Q0 ** (1 - sc) * K0 ** sc
        thr["sharp2_rhs"] = Qpsi ** (1 - sc) * Kpsi ** sc
        c_opt = optimal_gn_constant(gs)
        g1, g2 = gamma_forms(n, p, Q0, Qpsi, c_opt)
        gamma = g1
        thr["gamma_mass_form"] = g2
        thr["gamma_forms_rel_diff"] = abs(g1 - g2) / abs(g2)
        if thr["gamma_forms_rel_diff"] > 1e-8:
            notes.append("the two closed forms of gamma disagree beyond 1e-8")
        q = weinstein_exponents(n, p)[1]
        thr["energy_level"] = E0
        thr["energy_bound"] = (1 - 1 / q) * g1
        thr["sharp1_slack"] = 1.0 - E0 / thr["energy_bound"]
        thr["sharp2_slack"] = 1.0 - K0 / g1
        notes.append("finite variance is automatic on a grid; the analytic hypothesis is asserted")
    cls = classification_from_thresholds(regime, thr, resonant, assume, n, p)
    if regime == INTERCRITICAL and cls == INDETERMINATE and thr["sharp1"] and \
            thr["sharp2_lhs"] > thr["sharp2_rhs"] and not resonant:
        notes.append("blow-up branch needs mass resonance")
    return Verdict(regime=regime, s_c=sc, thresholds=thr, gamma_threshold=gamma,
                   mass_resonant=resonant, classification=cls, assume=assume, notes=tuple(notes))
