"""Compiled pointwise RK4 for the nonlinear substep, generated per monomial structure.

Used when numba is importable; the evolution module falls back to numpy otherwise.
"""
from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None

_COMPILED: dict[tuple, object] = {}


def _power(var: str, k: int) -> list[str]:
    return [var] * k


def _rhs_source(structure, l: int, prefix: str) -> list[str]:
    """Straight-line statements computing r{k} = scale_k * f_k at the point {prefix}{j}."""
    lines = []
    for j in range(l):
        lines.append(f"c{j} = {prefix}{j}.conjugate()")
    t = 0
    for k, comp in enumerate(structure):
        terms = []
        for exps in comp:
            factors = [f"cf[{t}]"]
            for j, (a, b) in enumerate(exps):
                factors += _power(f"{prefix}{j}", a) + _power(f"c{j}", b)
            terms.append("*".join(factors))
            t += 1
        lines.append(f"r{k} = sc[{k}] * ({' + '.join(terms) if terms else '0j'})")
    return lines


def _build(structure, l: int):
    body = ["def kernel(Z, cf, sc, h):", "    M = Z.shape[1]", "    for i in range(M):"]
    ind = "        "
    for j in range(l):
        body.append(f"{ind}z{j} = Z[{j}, i]")
    stages = [("z", "k1"), ("w1_", "k2"), ("w2_", "k3"), ("w3_", "k4")]
    for s, (src, dst) in enumerate(stages):
        if s:
            coef = "h" if s == 3 else "0.5 * h"
            prev = stages[s - 1][1]
            for j in range(l):
                body.append(f"{ind}{src}{j} = z{j} + {coef} * {prev}_{j}")
        for line in _rhs_source(structure, l, src):
            body.append(ind + line)
        for k in range(l):
            body.append(f"{ind}{dst}_{k} = r{k}")
    for j in range(l):
        body.append(f"{ind}Z[{j}, i] = z{j} + h / 6.0 * (k1_{j} + 2.0 * k2_{j} + 2.0 * k3_{j} + k4_{j})")
    ns: dict = {}
    exec("\n".join(body), ns)
    return njit(ns["kernel"])


def pack(components) -> tuple[tuple, np.ndarray]:
    """Exponent structure (hashable) and the coefficient vector of a nonlinearity."""
    structure = tuple(tuple(t.exps for t in comp) for comp in components)
    coeffs = np.array([complex(t.coeff) for comp in components for t in comp], dtype=np.complex128)
    return structure, coeffs


def rk4_kernel(structure):
    """Compiled in-place RK4 for dz/dt = scale * f(z) over the columns of Z, or None."""
    if njit is None:
        return None
    fn = _COMPILED.get(structure)
    if fn is None:
        fn = _COMPILED[structure] = _build(structure, len(structure))
    return fn
