"""Ground states of the stationary system and the variational functionals around them.

Profiles solve ``-gamma_k Δψ_k + b_k ψ_k = f_k(ψ)`` with
``b_k = sigma_k alpha_k omega / 2 + beta_k``. They are computed with a
Petviashvili iteration that works on any grid exposing ``solve_helmholtz``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .nonlinearity import SystemSpec, eval_f
from .spectral import FieldState

log = logging.getLogger(__name__)


class GroundStateError(ValueError):
    pass


def sobolev_index(n: int, p: float) -> float:
    return n / 2.0 - 2.0 / (p - 1.0)


def h1_subcritical(n: int, p: float) -> bool:
    return n <= 2 or p * (n - 2) < n + 2


@dataclass(frozen=True)
class EllipticParams:
    spec: SystemSpec
    omega: float
    beta: tuple[float, ...]
    b: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(bk <= 0 for bk in self.b):
            raise GroundStateError(
                f"b_k = sigma_k alpha_k omega/2 + beta_k must be positive, got {self.b}")


def elliptic_params(spec: SystemSpec, omega: float = 1.0,
                    beta: Sequence[float] | None = None) -> EllipticParams:
    """Frequency data for the stationary problem; ``beta=None`` means beta = 0."""
    if spec.sigma is None:
        raise GroundStateError("no gauge weights sigma exist; standing waves are undefined")
    beta = tuple(0.0 for _ in range(spec.l)) if beta is None else tuple(float(v) for v in beta)
    b = tuple(s * a * omega / 2.0 + bt for s, a, bt in zip(spec.sigma, spec.alpha, beta))
    return EllipticParams(spec, float(omega), beta, b)


@dataclass(frozen=True)
class Functionals:
    K: float
    L: float
    Qcal: float
    P: float
    I: float
    J: float | None
    Q: float
    E: float

    def as_dict(self) -> dict:
        return {"K": self.K, "L": self.L, "Qcal": self.Qcal, "P": self.P,
                "I": self.I, "J": self.J, "Q": self.Q, "E": self.E}


def core_quantities(u: FieldState, spec: SystemSpec, beta: Sequence[float] | None = None):
    """(K, L, P, Q, per-component L² norms²) for a state; ``beta`` defaults to the system's."""
    grid = u.grid
    beta = spec.beta if beta is None else beta
    norms = np.array([grid.integrate(np.abs(c) ** 2) for c in u.components])
    K = float(sum(g * grid.gradient_norm_sq(c) for g, c in zip(spec.gamma, u.components)))
    L = float(np.dot(beta, norms))
    P = grid.integrate(spec.potential(u.components).real)
    Q = float(np.dot(spec.mass_weights, norms)) if spec.sigma is not None else float("nan")
    return K, L, P, Q, norms


def weinstein_exponents(n: int, p: float) -> tuple[float, float]:
    """Exponents (of the frequency mass, of K) in the Weinstein quotient J."""
    sc = sobolev_index(n, p)
    return (p - 1) * (1 - sc) / 2.0, (p - 1) * sc / 2.0 + 1.0


def functionals(u: FieldState, params: EllipticParams) -> Functionals:
    spec = params.spec
    K, L, P, Q, norms = core_quantities(u, spec, params.beta)
    Qcal = float(np.dot(params.b, norms))
    I = 0.5 * (K + Qcal) - P
    scale = max(K, Qcal, abs(P), 1e-300)
    J = None
    if abs(P) >= 1e-14 * scale and scale > 1e-300:
        a, c = weinstein_exponents(u.grid.n, spec.p)
        J = Qcal ** a * K ** c / P
    return Functionals(K=K, L=L, Qcal=Qcal, P=P, I=I, J=J, Q=Q, E=K + L - 2.0 * P)


@dataclass(frozen=True)
class GroundStateResult:
    psi: FieldState
    params: EllipticParams
    functionals: Functionals
    residual: float
    iterations: int
    converged: bool
    stabilizer: float
    history: tuple[float, ...] = field(default=(), repr=False)
    reason: str = ""

    @property
    def omega(self) -> float:
        return self.params.omega


def _real_components(init, grid, l):
    if isinstance(init, FieldState):
        return [np.real(np.asarray(c, dtype=complex)).copy() for c in init.components]
    return [np.real(np.asarray(c, dtype=complex)).copy() for c in init]


def elliptic_residual(psi: Sequence[np.ndarray], params: EllipticParams, grid) -> float:
    spec = params.spec
    fpsi = eval_f(spec.f, psi)
    return float(max(
        np.max(np.abs(grid.helmholtz(psi[k], spec.gamma[k], params.b[k]) - fpsi[k].real))
        for k in range(spec.l)
    ))


def solve_ground_state(params: EllipticParams, grid, init=None, tol: float = 1e-10,
                       max_iter: int = 5000, identity_tol: float = 1e-4,
                       residual_tol: float = 1e-8) -> GroundStateResult:
    """Petviashvili iteration for a real ground-state profile.

    ``init`` may be a FieldState, a sequence of arrays or ``None`` for the
    Gaussian e^{-|x|^2} on every component. Divergence of the stabilising
    factor returns a non-converged result rather than raising.

    Convergence requires the sup-norm update to fall below ``tol``, the
    elliptic residual below ``residual_tol`` and the Pohozaev identities to
    hold within ``identity_tol``.

    Some systems have a linearised eigenvalue at exactly -1 (for the quadratic
    coupling the direction (ψ_1, -2ψ_2) is one), which makes the plain
    iteration cycle with period two. When the update stops shrinking the
    step is averaged with the previous iterate, mapping that eigenvalue to 0.
    """
    spec = params.spec
    n, p = grid.n, spec.p
    if not h1_subcritical(n, p):
        raise GroundStateError(f"p={p} is not H1-subcritical in dimension n={n}")
    if init is None:
        g = np.exp(-grid.r2)
        u = [g.copy() for _ in range(spec.l)]
    else:
        u = _real_components(init, grid, spec.l)
        if len(u) != spec.l:
            raise GroundStateError(f"initial guess has {len(u)} components, expected {spec.l}")
    P0 = grid.integrate(spec.potential(u).real)
    if not P0 > 0:
        raise GroundStateError("initial guess outside P: P(psi_0) <= 0")

    power = p / (p - 1.0)
    relax = 1.0
    history = []
    converged_update = False
    reason = ""
    M = float("nan")
    it = 0
    for it in range(1, max_iter + 1):
        fu = [c.real for c in eval_f(spec.f, u)]
        num = sum(grid.integrate(grid.helmholtz(u[k], spec.gamma[k], params.b[k]) * u[k])
                  for k in range(spec.l))
        den = sum(grid.integrate(fu[k] * u[k]) for k in range(spec.l))
        M = num / den if den != 0 else float("inf")
        if not (1e-8 <= M <= 1e8) or not math.isfinite(M):
            reason = f"stabilising factor left [1e-8, 1e8]: M={M:g}"
            log.warning("Petviashvili diverged at iteration %d: %s", it, reason)
            break
        factor = M ** power
        new = [factor * grid.solve_helmholtz(fu[k], spec.gamma[k], params.b[k]) for k in range(spec.l)]
        if relax != 1.0:
            new = [relax * new[k] + (1.0 - relax) * u[k] for k in range(spec.l)]
        update = max(float(np.max(np.abs(new[k] - u[k]))) for k in range(spec.l))
        u = new
        history.append(update)
        if not math.isfinite(update):
            reason = "non-finite iterate"
            break
        if update < tol:
            converged_update = True
            break
        if relax == 1.0 and it >= 40 and history[-1] > 0.5 * history[-21]:
            relax = 0.5
            log.info("Petviashvili stalled at iteration %d; averaging successive iterates", it)
    else:
        reason = f"max_iter={max_iter} reached"

    psi = FieldState(grid, tuple(u))
    fun = functionals(psi, params)
    res = elliptic_residual(u, params, grid) if all(np.all(np.isfinite(c)) for c in u) else float("inf")
    converged = converged_update and res < residual_tol
    if converged_update and not converged:
        reason = f"update below tol but residual {res:.3e} >= {residual_tol:.1e}"
    result = GroundStateResult(psi, params, fun, res, it, converged, M, tuple(history), reason)
    if converged:
        errs = verify_pohozaev(result)
        worst = max(errs.P_rel, errs.K_rel, errs.Q_rel)
        if worst >= identity_tol:
            reason = f"Pohozaev relative error {worst:.2e} >= {identity_tol:g}"
            result = GroundStateResult(psi, params, fun, res, it, False, M, tuple(history), reason)
    return result


@dataclass(frozen=True)
class PohozaevReport:
    applicable: bool
    P_rel: float = float("nan")
    K_rel: float = float("nan")
    Q_rel: float = float("nan")
    J_rel: float = float("nan")
    P_over_I: float = float("nan")
    K_over_I: float = float("nan")
    Q_over_I: float = float("nan")

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def weinstein_at_solution(I: float, n: int, p: float) -> float:
    """Value of J at a solution with action I (from the Pohozaev relations)."""
    sc = sobolev_index(n, p)
    a, c = weinstein_exponents(n, p)
    return (p - 1) * n ** c / 2.0 * (2 * (1 - sc)) ** a * I ** ((p - 1) / 2.0)


def weinstein_infimum(Qcal: float, n: int, p: float) -> float:
    """Infimum of J written through the frequency mass of a ground state.

    Equals 1 / C_opt; obtained from ``weinstein_at_solution`` with
    I = Qcal / (2 (1 - s_c)).
    """
    sc = sobolev_index(n, p)
    return (p - 1) * n ** ((p - 1) * sc / 2 + 1) / 2.0 * (2 * (1 - sc)) ** (-(p - 1) * sc / 2) \
        * Qcal ** ((p - 1) / 2.0)


def verify_pohozaev(result: GroundStateResult) -> PohozaevReport:
    fun = result.functionals
    n, p = result.psi.grid.n, result.params.spec.p
    if not abs(fun.I) > 0 or fun.J is None:
        return PohozaevReport(applicable=False)
    sc = sobolev_index(n, p)
    I = fun.I
    Jsol = weinstein_at_solution(I, n, p)
    return PohozaevReport(
        applicable=True,
        P_rel=abs(fun.P - 2 * I / (p - 1)) / abs(I),
        K_rel=abs(fun.K - n * I) / abs(I),
        Q_rel=abs(fun.Qcal - 2 * (1 - sc) * I) / abs(I),
        J_rel=abs(fun.J - Jsol) / abs(Jsol),
        P_over_I=fun.P / I,
        K_over_I=fun.K / I,
        Q_over_I=fun.Qcal / I,
    )


def optimal_gn_constant(result: GroundStateResult) -> float:
    """Sharp constant of P(u) <= C Qcal(u)^a K(u)^c, from the ground-state frequency mass."""
    n, p = result.psi.grid.n, result.params.spec.p
    sc = sobolev_index(n, p)
    Qcal = result.functionals.Qcal
    return 2.0 * (2 * (1 - sc)) ** ((p - 1) * sc / 2) / (
        (p - 1) * n ** ((p - 1) * sc / 2 + 1) * Qcal ** ((p - 1) / 2))


def gn_ratio(u: FieldState, params: EllipticParams, c_opt: float) -> float:
    """P(u) / (C_opt Qcal^a K^c); at most 1 for every u with P(u) > 0."""
    fun = functionals(u, params)
    a, c = weinstein_exponents(u.grid.n, params.spec.p)
    return fun.P / (c_opt * fun.Qcal ** a * fun.K ** c)


def compare_ground_states(results: Sequence[GroundStateResult], rtol: float = 1e-6) -> dict:
    """Flag distinct fixed points reached from different starts (uniqueness is not assumed)."""
    Js = [r.functionals.J for r in results if r.converged and r.functionals.J is not None]
    if not Js:
        return {"J_values": [], "discrepancy": False}
    ref = min(Js)
    spread = max(abs(j - ref) / abs(ref) for j in Js)
    return {"J_values": Js, "discrepancy": bool(spread > rtol), "relative_spread": spread}


def random_start(grid, l: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Positive Gaussian mixture near the origin, for multi-start solves."""
    out = []
    for _ in range(l):
        amp = rng.uniform(0.5, 1.5)
        width = rng.uniform(0.7, 1.5)
        out.append(amp * np.exp(-grid.r2 / width ** 2))
    return out
