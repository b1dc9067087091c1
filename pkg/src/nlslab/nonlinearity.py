"""Polynomial potentials F(z, z̄), their Wirtinger derivatives and structural checks.

A potential is a finite sum of monomials ``c * prod_j z_j**a_j * conj(z_j)**b_j``.
The nonlinearities of the coupled system are ``f_k = dF/dz̄_k + conj(dF/dz_k)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

Exps = tuple[tuple[int, int], ...]

# coefficients below this (relative to the largest one) are treated as cancelled
_COLLECT_RTOL = 1e-13


@dataclass(frozen=True)
class Monomial:
    coeff: complex
    exps: Exps

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeff", complex(self.coeff))
        exps = tuple((int(a), int(b)) for a, b in self.exps)
        if any(a < 0 or b < 0 for a, b in exps):
            raise ValueError(f"negative exponent in monomial {exps}")
        object.__setattr__(self, "exps", exps)

    @property
    def degree(self) -> int:
        return sum(a + b for a, b in self.exps)

    @property
    def charge(self) -> tuple[int, ...]:
        """Per-component winding ``a_j - b_j``."""
        return tuple(a - b for a, b in self.exps)

    def conj(self) -> "Monomial":
        return Monomial(self.coeff.conjugate(), tuple((b, a) for a, b in self.exps))


def collect(terms: Iterable[Monomial]) -> tuple[Monomial, ...]:
    """Sum coefficients of identical monomials and drop cancelled ones."""
    acc: dict[Exps, complex] = {}
    for t in terms:
        acc[t.exps] = acc.get(t.exps, 0j) + t.coeff
    if not acc:
        return ()
    scale = max(abs(c) for c in acc.values())
    out = [Monomial(c, e) for e, c in acc.items() if abs(c) > _COLLECT_RTOL * scale]
    out.sort(key=lambda m: m.exps, reverse=True)
    return tuple(out)


def conj_poly(terms: Iterable[Monomial]) -> tuple[Monomial, ...]:
    return tuple(t.conj() for t in terms)


class _Factors:
    """Lazily cached z_j^a conj(z_j)^b, written as |z_j|^{2 min(a,b)} times a pure power."""

    def __init__(self, z: Sequence[np.ndarray]):
        self.z = z
        self.cache: dict[tuple[int, int, int], np.ndarray] = {}
        self.mod: dict[int, np.ndarray] = {}

    def _modulus_sq(self, j: int) -> np.ndarray:
        m = self.mod.get(j)
        if m is None:
            zj = self.z[j]
            m = self.mod[j] = zj.real * zj.real + zj.imag * zj.imag
        return m

    def get(self, j: int, a: int, b: int):
        key = (j, a, b)
        val = self.cache.get(key)
        if val is not None:
            return val
        c = min(a, b)
        d = a - b
        if c:
            m = self._modulus_sq(j)
            val = m if c == 1 else m ** c
            if d:
                val = val * self.get(j, max(d, 0), max(-d, 0))
        elif d > 0:
            val = self.z[j] if d == 1 else self.get(j, d - 1, 0) * self.z[j]
        else:
            val = np.conj(self.z[j]) if d == -1 else self.get(j, 0, -d - 1) * np.conj(self.z[j])
        self.cache[key] = val
        return val


def _accumulate(terms: Sequence[Monomial], factors: _Factors, shape) -> np.ndarray:
    out = np.zeros(shape, dtype=complex)
    for t in terms:
        val = None
        for j, (a, b) in enumerate(t.exps):
            if a or b:
                fac = factors.get(j, a, b)
                val = fac if val is None else val * fac
        if val is None:
            out += t.coeff
        else:
            out += t.coeff * val
    return out


def eval_poly(terms: Sequence[Monomial], z: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate a monomial sum at ``z`` (a sequence of l arrays or scalars)."""
    z = [np.asarray(zj, dtype=complex) for zj in z]
    shape = np.broadcast_shapes(*(zj.shape for zj in z)) if z else ()
    return _accumulate(terms, _Factors(z), shape)


@dataclass(frozen=True)
class Potential:
    l: int
    p: int
    terms: tuple[Monomial, ...]

    def __post_init__(self) -> None:
        if self.l < 1:
            raise ValueError("component count l must be >= 1")
        terms = collect(self.terms)
        for t in terms:
            if len(t.exps) != self.l:
                raise ValueError(f"monomial has {len(t.exps)} exponent pairs, expected l={self.l}")
            if t.degree != self.p + 1:
                raise ValueError(
                    f"non-homogeneous term: degree {t.degree} != p+1 = {self.p + 1}"
                )
        object.__setattr__(self, "terms", terms)

    def __call__(self, z: Sequence[np.ndarray]) -> np.ndarray:
        return eval_poly(self.terms, z)

    def real_part_terms(self) -> tuple[Monomial, ...]:
        """Monomials of ``2 Re F = F + conj(F)`` after collection."""
        return collect(self.terms + conj_poly(self.terms))


@dataclass(frozen=True)
class Nonlinearity:
    components: tuple[tuple[Monomial, ...], ...]

    @property
    def l(self) -> int:
        return len(self.components)

    def __call__(self, z: Sequence[np.ndarray]) -> list[np.ndarray]:
        return eval_f(self, z)


def derive_f(F: Potential) -> Nonlinearity:
    """Wirtinger derivation ``f_k = dF/dz̄_k + conj(dF/dz_k)``, term by term."""
    comps = []
    for k in range(F.l):
        out: list[Monomial] = []
        for t in F.terms:
            a, b = t.exps[k]
            if b:
                e = list(t.exps)
                e[k] = (a, b - 1)
                out.append(Monomial(t.coeff * b, tuple(e)))
            if a:
                e = list(t.exps)
                e[k] = (a - 1, b)
                out.append(Monomial(t.coeff * a, tuple(e)).conj())
        comps.append(collect(out))
    return Nonlinearity(tuple(comps))


def eval_f(f: Nonlinearity, z: Sequence[np.ndarray]) -> list[np.ndarray]:
    z = [np.asarray(zj, dtype=complex) for zj in z]
    shape = np.broadcast_shapes(*(zj.shape for zj in z)) if z else ()
    factors = _Factors(z)  # shared across components
    return [_accumulate(comp, factors, shape) for comp in f.components]


def find_sigma(F: Potential) -> tuple[float, ...] | None:
    """Positive weights making every monomial of Re F phase-neutral, normalised to sigma_1 = 2.

    Returns ``None`` when the null space of the charge matrix holds no strictly
    positive vector.
    """
    rows = [m.charge for m in F.real_part_terms() if any(m.charge)]
    rows = sorted(set(rows))
    l = F.l
    if not rows:
        return (2.0,) * l
    from scipy.optimize import linprog

    R = np.array(rows, dtype=float)
    # maximise t subject to R s = 0, s_j >= t, sum s = 1
    c = np.zeros(l + 1)
    c[-1] = -1.0
    A_eq = np.hstack([R, np.zeros((R.shape[0], 1))])
    A_eq = np.vstack([A_eq, np.append(np.ones(l), 0.0)])
    b_eq = np.zeros(A_eq.shape[0])
    b_eq[-1] = 1.0
    A_ub = np.hstack([-np.eye(l), np.ones((l, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(l), A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0, None)] * l + [(None, None)], method="highs")
    if not res.success or res.x[-1] <= 1e-12:
        return None
    s = res.x[:l]
    sigma = 2.0 * s / s[0]
    # snap to small rationals when that keeps R sigma = 0 exactly
    fr = [Fraction(v).limit_denominator(1000) for v in sigma]
    if all(sum(Fraction(r[j]) * fr[j] for j in range(l)) == 0 for r in rows) and all(v > 0 for v in fr):
        sigma = np.array([float(v) for v in fr])
    return tuple(float(v) for v in sigma)


@dataclass(frozen=True)
class SystemSpec:
    n: int
    l: int
    p: int
    alpha: tuple[float, ...]
    gamma: tuple[float, ...]
    beta: tuple[float, ...]
    potential: Potential
    f: Nonlinearity = field(compare=False, repr=False, default=None)  # type: ignore[assignment]
    sigma: tuple[float, ...] | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        for key in ("alpha", "gamma", "beta"):
            vals = tuple(float(v) for v in getattr(self, key))
            if len(vals) != self.l:
                raise ValueError(f"{key} has length {len(vals)}, expected l={self.l}")
            object.__setattr__(self, key, vals)
        if any(a <= 0 for a in self.alpha):
            raise ValueError("alpha entries must be positive")
        if any(g <= 0 for g in self.gamma):
            raise ValueError("gamma entries must be positive")
        if any(b < 0 for b in self.beta):
            raise ValueError("beta entries must be nonnegative")
        if not 1 <= self.n:
            raise ValueError("dimension n must be >= 1")
        if self.potential.l != self.l or self.potential.p != self.p:
            raise ValueError("potential does not match (l, p) of the system")
        if self.f is None:
            object.__setattr__(self, "f", derive_f(self.potential))
        if self.sigma is not None:
            sig = tuple(float(s) for s in self.sigma)
            if len(sig) != self.l or any(s <= 0 for s in sig):
                raise ValueError("sigma must hold l positive entries")
            object.__setattr__(self, "sigma", sig)

    @property
    def ratios(self) -> np.ndarray:
        """alpha_k / gamma_k."""
        return np.asarray(self.alpha) / np.asarray(self.gamma)

    def with_dimension(self, n: int) -> "SystemSpec":
        return replace(self, n=int(n))

    def with_beta(self, beta: Sequence[float]) -> "SystemSpec":
        return replace(self, beta=tuple(beta))

    @property
    def mass_weights(self) -> np.ndarray:
        """sigma_k alpha_k / 2, the weights of the conserved mass."""
        if self.sigma is None:
            raise ValueError("system has no gauge weights sigma; mass is undefined")
        return np.asarray(self.sigma) * np.asarray(self.alpha) / 2.0


def build_spec(n, alpha, gamma, beta, terms, p=None, name="") -> SystemSpec:
    """Assemble a SystemSpec, inferring p and deriving f and sigma."""
    terms = tuple(terms)
    if not terms:
        raise ValueError("nontrivial potential required")
    l = len(alpha)
    degrees = {t.degree for t in terms}
    inferred = max(degrees) - 1
    if p is None:
        p = inferred
    elif p != inferred:
        raise ValueError(f"declared p={p} but terms imply p={inferred}")
    pot = Potential(l=l, p=int(p), terms=terms)
    if not pot.terms:
        raise ValueError("nontrivial potential required")
    return SystemSpec(n=n, l=l, p=int(p), alpha=tuple(alpha), gamma=tuple(gamma),
                      beta=tuple(beta), potential=pot, sigma=find_sigma(pot), name=name)


# --------------------------------------------------------------------------
# structural checks

def _weighted_flux(spec: SystemSpec, weights: Sequence[float]) -> tuple[Monomial, ...]:
    """Symbolic expansion of sum_k w_k f_k(z) conj(z_k)."""
    out = []
    for k, comp in enumerate(spec.f.components):
        for t in comp:
            e = list(t.exps)
            a, b = e[k]
            e[k] = (a, b + 1)
            out.append(Monomial(weights[k] * t.coeff, tuple(e)))
    return collect(out)


def _imag_terms(poly: Sequence[Monomial]) -> tuple[Monomial, ...]:
    """Monomials of ``2i Im G = G - conj(G)``."""
    neg = tuple(Monomial(-t.coeff, t.exps) for t in conj_poly(poly))
    return collect(tuple(poly) + neg)


def random_points(l: int, count: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """``count`` complex points in C^l, shape (l, count)."""
    return scale * (rng.standard_normal((l, count)) + 1j * rng.standard_normal((l, count)))


def check_mass_resonance(spec: SystemSpec, seed: int = 42) -> bool:
    """Whether Im sum_k (alpha_k/gamma_k) f_k(z) conj(z_k) vanishes identically."""
    G = _weighted_flux(spec, spec.ratios)
    symbolic = len(_imag_terms(G)) == 0 if G else True
    rng = np.random.default_rng(seed)
    z = random_points(spec.l, 64, rng)
    val = eval_poly(G, z)
    scale = np.sum(np.abs(z), axis=0) ** (spec.p + 1) * max(1.0, max((abs(t.coeff) for t in G), default=1.0))
    sampled = bool(np.all(np.abs(val.imag) < 1e-12 * scale))
    if symbolic != sampled:
        # the exact expansion decides; the sampled check only guards the arithmetic
        import logging
        logging.getLogger(__name__).warning(
            "mass-resonance: symbolic=%s disagrees with sampled=%s", symbolic, sampled)
    return symbolic


def gauge_identity_residual(spec: SystemSpec, sigma: Sequence[float], z: np.ndarray) -> np.ndarray:
    """|Im sum sigma_k f_k(z) conj(z_k)| at the columns of ``z``."""
    fz = eval_f(spec.f, z)
    s = sum(sigma[k] * fz[k] * np.conj(z[k]) for k in range(spec.l))
    return np.abs(np.imag(s))


def _real_restriction(terms: Sequence[Monomial]) -> dict[tuple[int, ...], complex]:
    """Coefficients of the polynomial obtained by restricting to real arguments."""
    acc: dict[tuple[int, ...], complex] = {}
    for t in terms:
        key = tuple(a + b for a, b in t.exps)
        acc[key] = acc.get(key, 0j) + t.coeff
    return acc


def _fd_mixed_partials(F: Potential, x: Sequence, h) -> list[tuple[int, int, object]]:
    import mpmath

    l = F.l
    real_poly = _real_restriction(F.terms)

    def Fr(y):
        s = mpmath.mpf(0)
        for e, c in real_poly.items():
            term = mpmath.mpf(c.real)
            for j, ej in enumerate(e):
                if ej:
                    term *= y[j] ** ej
            s += term
        return s

    out = []
    for i in range(l):
        for j in range(i + 1, l):
            def shifted(si, sj):
                y = list(x)
                y[i] += si * h
                y[j] += sj * h
                return Fr(y)

            d = (shifted(1, 1) - shifted(1, -1) - shifted(-1, 1) + shifted(-1, -1)) / (4 * h * h)
            out.append((i, j, d))
    return out


def validate_hypotheses(spec: SystemSpec, seed: int = 42, samples: int = 256) -> dict:
    """Per-hypothesis report: status is ``pass``, ``fail`` or ``heuristic-pass``."""
    import mpmath

    rng = np.random.default_rng(seed)
    F = spec.potential
    f = spec.f
    report: dict[str, dict] = {}

    degrees_f = sorted({t.degree for comp in f.components for t in comp})
    report["H1"] = {
        "status": "pass" if all(d >= 1 for d in degrees_f) else "fail",
        "method": "exact: every monomial of f_k has positive degree",
        "witness": {"f_degrees": degrees_f},
    }
    report["H2*"] = {
        "status": "pass" if spec.p >= 2 else "fail",
        "method": "structural: polynomial f_k homogeneous of degree p >= 2",
        "witness": {"p": spec.p},
    }
    report["H3"] = {"status": "pass", "method": "by construction: f derived from F", "witness": {}}

    sigma = find_sigma(F)
    if sigma is None:
        report["H4*"] = {"status": "fail", "method": "exact: null space of charge matrix",
                         "witness": {"sigma": None}}
    else:
        z = random_points(spec.l, samples, rng)
        res = gauge_identity_residual(spec, sigma, z)
        bound = 1e-12 * np.sum(np.abs(z), axis=0) ** (spec.p + 1) * max(1.0, max(abs(t.coeff) for t in F.terms))
        ok = bool(np.all(res < bound))
        report["H4*"] = {
            "status": "pass" if ok else "fail",
            "method": "exact: positive null vector of charge matrix; sampled identity check",
            "witness": {"sigma": list(sigma), "max_residual": float(res.max())},
        }

    bad = [t.exps for t in F.terms if t.degree != spec.p + 1]
    report["H5*"] = {"status": "fail" if bad else "pass", "method": "exact: degree check",
                     "witness": {"nonhomogeneous_terms": [list(map(list, e)) for e in bad]}}

    # H6: pointwise |Re F(z)| <= Re F(|z|); exact when every coefficient is real and >= 0
    z = random_points(spec.l, samples, rng)
    lhs = np.abs(F(z).real)
    rhs = F(np.abs(z)).real
    viol = lhs - rhs > 1e-12 * (np.abs(rhs) + 1.0)
    nonneg = all(abs(t.coeff.imag) == 0 and t.coeff.real >= 0 for t in F.terms)
    if np.any(viol):
        i = int(np.argmax(lhs - rhs))
        status6 = "fail"
        w6 = {"z": [[float(v.real), float(v.imag)] for v in z[:, i]], "lhs": float(lhs[i]), "rhs": float(rhs[i])}
    else:
        status6 = "pass" if nonneg else "heuristic-pass"
        w6 = {"nonnegative_coefficients": nonneg, "samples": samples}
    report["H6"] = {"status": status6, "method": "modulus reading F(|u_1|,...,|u_l|); sampled", "witness": w6}

    # H7: real on R^l, f_k >= 0 on the positive cone
    rp = _real_restriction(F.terms)
    scale = max(abs(c) for c in rp.values()) if rp else 1.0
    complex_coeffs = {str(list(e)): [c.real, c.imag] for e, c in rp.items() if abs(c.imag) > 1e-13 * scale}
    y = rng.uniform(0.0, 1.0, size=(spec.l, samples))
    fy = eval_f(f, y.astype(complex))
    Fy = F(y.astype(complex))
    real_ok = not complex_coeffs and bool(np.all(np.abs(Fy.imag) <= 1e-12 * (np.abs(Fy) + 1)))
    cone_min = min(float(np.min(v.real)) for v in fy)
    cone_exact = all(
        abs(c.imag) <= 1e-13 * scale and c.real >= 0
        for comp in f.components for c in _real_restriction(comp).values()
    )
    cone_ok = cone_min >= -1e-12
    if not real_ok or not cone_ok:
        status7 = "fail"
    elif cone_exact:
        status7 = "pass"
    else:
        status7 = "heuristic-pass"
    report["H7"] = {
        "status": status7,
        "method": "exact coefficient test on real restriction; sampled on positive cone",
        "witness": {"complex_real_coefficients": complex_coeffs, "min_f_on_cone": cone_min},
    }

    # H8: mixed second partials >= 0 on the positive cone (finite differences, 50 digits)
    with mpmath.workdps(50):
        h = mpmath.mpf("1e-12")
        worst = None
        pts = rng.uniform(0.0, 1.0, size=(samples, spec.l))
        for x in pts:
            xm = [mpmath.mpf(float(v)) for v in x]
            for i, j, d in _fd_mixed_partials(F, xm, h):
                if worst is None or d < worst[2]:
                    worst = (i, j, d, x)
    if worst is None:
        status8, w8 = "heuristic-pass", {"note": "single component: no mixed partials"}
    else:
        dmin = float(worst[2])
        status8 = "heuristic-pass" if dmin >= -1e-10 else "fail"
        w8 = {"min_mixed_partial": dmin, "pair": [worst[0], worst[1]],
              "at": [float(v) for v in worst[3]]}
    report["H8"] = {"status": status8, "method": "sampled finite-difference mixed partials",
                    "witness": w8}
    return report


def hypotheses_ok(report: dict) -> bool:
    return all(entry["status"] != "fail" for entry in report.values())


def growth_constant(f: Nonlinearity) -> list[float]:
    """Constants C_k with |f_k(z)| <= C_k * sum_j |z_j|**p."""
    out = []
    for comp in f.components:
        c = 0.0
        for t in comp:
            deg = t.degree
            # prod |z_j|^{e_j} <= (sum |z_j|)^deg <= l^{deg-1} sum |z_j|^deg
            c += abs(t.coeff) * len(t.exps) ** max(deg - 1, 0)
        out.append(c)
    return out


def format_monomial(t: Monomial, names: Sequence[str] | None = None) -> str:
    names = names or [f"z{j + 1}" for j in range(len(t.exps))]
    parts = []
    for j, (a, b) in enumerate(t.exps):
        if a:
            parts.append(names[j] + (f"^{a}" if a > 1 else ""))
        if b:
            parts.append(f"conj({names[j]})" + (f"^{b}" if b > 1 else ""))
    c = t.coeff
    cs = f"{c.real:g}" if c.imag == 0 else f"({c.real:g}{c.imag:+g}i)"
    return cs + ("*" + "*".join(parts) if parts else "")


def monomial_dict(terms: Iterable[Monomial]) -> dict[Exps, complex]:
    return {t.exps: t.coeff for t in terms}


def is_close_poly(a: Iterable[Monomial], b: Iterable[Monomial], rtol: float = 1e-12) -> bool:
    da, db = monomial_dict(a), monomial_dict(b)
    if set(da) != set(db):
        return False
    return all(math.isclose(abs(da[k] - db[k]), 0.0, abs_tol=rtol * max(1.0, abs(db[k]))) for k in da)
