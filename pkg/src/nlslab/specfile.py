"""Text format for system specifications, and the built-in presets.

Format::

    [system]
    dimension = 1
    p = 2
    alpha = [1.0, 1.0]
    gamma = [1.0, 0.5]
    beta  = [0.0, 0.0]

    [potential]
    # coeff_re coeff_im : a1 b1 | a2 b2 | ...
    term = 1.0 0.0 : 0 2 | 1 0
"""
from __future__ import annotations

import hashlib
import re
from pathlib import Path

from .nonlinearity import Monomial, SystemSpec, build_spec


class SpecError(ValueError):
    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + msg)


_LIST_KEYS = ("alpha", "gamma", "beta")


def _parse_list(raw: str, lineno: int, col: int) -> list[float]:
    s = raw.strip()
    if not (s.startswith("[") and s.endswith("]")):
        raise SpecError("expected a bracketed list like [1.0, 2.0]", lineno, col)
    body = s[1:-1].strip()
    if not body:
        return []
    out = []
    offset = raw.index("[") + 1
    for item in body.split(","):
        try:
            out.append(float(item))
        except ValueError:
            lead = len(item) - len(item.lstrip())
            raise SpecError(f"not a number: {item.strip()!r}", lineno, col + offset + lead) from None
        offset += len(item) + 1
    return out


def _parse_term(raw: str, lineno: int, col: int) -> Monomial:
    if ":" not in raw:
        raise SpecError("term needs 'coeff_re coeff_im : a1 b1 | ...'", lineno, col)
    coeff_part, exp_part = raw.split(":", 1)
    nums = coeff_part.split()
    if len(nums) != 2:
        raise SpecError("coefficient must be two numbers (real imag)", lineno, col)
    try:
        c = complex(float(nums[0]), float(nums[1]))
    except ValueError:
        raise SpecError(f"bad coefficient {coeff_part.strip()!r}", lineno, col) from None
    exps = []
    ecol = col + len(coeff_part) + 1
    for chunk in exp_part.split("|"):
        pair = chunk.split()
        if len(pair) != 2 or not all(re.fullmatch(r"\d+", v) for v in pair):
            lead = len(chunk) - len(chunk.lstrip())
            raise SpecError(f"exponent pair must be two nonnegative integers, got {chunk.strip()!r}",
                            lineno, ecol + lead)
        exps.append((int(pair[0]), int(pair[1])))
        ecol += len(chunk) + 1
    return Monomial(c, tuple(exps))


def parse_spec(text: str, name: str = "") -> SystemSpec:
    """Parse the spec-file text into a validated SystemSpec."""
    section = None
    values: dict[str, object] = {}
    terms: list[tuple[Monomial, int]] = []
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        col = len(line) - len(line.lstrip()) + 1
        stripped = line.strip()
        if stripped.startswith("["):
            m = re.fullmatch(r"\[\s*(\w+)\s*\]", stripped)
            if not m or m.group(1) not in ("system", "potential"):
                raise SpecError(f"unknown section {stripped!r}", lineno, col)
            section = m.group(1)
            continue
        if "=" not in line:
            raise SpecError("expected 'key = value'", lineno, col)
        key, val = line.split("=", 1)
        key = key.strip()
        eq = line.index("=")
        vcol = eq + 2 + len(val) - len(val.lstrip())  # 1-based column of the value
        if section is None:
            raise SpecError("key outside of a section", lineno, col)
        if section == "system":
            if key == "dimension":
                try:
                    values["n"] = int(val)
                except ValueError:
                    raise SpecError("dimension must be an integer", lineno, vcol) from None
                if values["n"] not in (1, 2, 3, 4, 5, 6):
                    raise SpecError("dimension out of range", lineno, vcol)
            elif key == "p":
                try:
                    values["p"] = int(val)
                except ValueError:
                    raise SpecError("p must be an integer", lineno, vcol) from None
                if values["p"] < 2:
                    raise SpecError("p must be >= 2", lineno, vcol)
            elif key in _LIST_KEYS:
                values[key] = _parse_list(val.lstrip(), lineno, vcol)
            else:
                raise SpecError(f"unknown key {key!r} in [system]", lineno, col)
        else:
            if key != "term":
                raise SpecError(f"unknown key {key!r} in [potential]", lineno, col)
            terms.append((_parse_term(val.lstrip(), lineno, vcol), lineno))

    for req in ("n", "p", "alpha", "gamma", "beta"):
        if req not in values:
            label = "dimension" if req == "n" else req
            raise SpecError(f"missing required key {label!r}")
    alpha, gamma, beta = values["alpha"], values["gamma"], values["beta"]
    l = len(alpha)  # type: ignore[arg-type]
    if len(gamma) != l or len(beta) != l:  # type: ignore[arg-type]
        raise SpecError("alpha, gamma and beta must have the same length")
    if not terms:
        raise SpecError("nontrivial potential required")
    p = values["p"]
    for t, lineno in terms:
        if len(t.exps) != l:
            raise SpecError(f"dimension mismatch: term has {len(t.exps)} exponent pairs, l={l}", lineno, 1)
        if t.degree != p + 1:  # type: ignore[operator]
            raise SpecError(f"non-homogeneous term: degree {t.degree} != p+1 = {p + 1}", lineno, 1)
    if any(a <= 0 for a in alpha):  # type: ignore[union-attr]
        raise SpecError("alpha entries must be positive")
    if any(g <= 0 for g in gamma):  # type: ignore[union-attr]
        raise SpecError("gamma entries must be positive")
    if any(b < 0 for b in beta):  # type: ignore[union-attr]
        raise SpecError("beta entries must be nonnegative")
    try:
        return build_spec(values["n"], alpha, gamma, beta, [t for t, _ in terms], p=p, name=name)
    except ValueError as exc:
        raise SpecError(str(exc)) from None


def _fmt(x: float) -> str:
    return repr(float(x))


def serialize_spec(spec: SystemSpec) -> str:
    lines = [
        "[system]",
        f"dimension = {spec.n}",
        f"p = {spec.p}",
        "alpha = [" + ", ".join(_fmt(v) for v in spec.alpha) + "]",
        "gamma = [" + ", ".join(_fmt(v) for v in spec.gamma) + "]",
        "beta  = [" + ", ".join(_fmt(v) for v in spec.beta) + "]",
        "",
        "[potential]",
    ]
    for t in spec.potential.terms:
        exps = " | ".join(f"{a} {b}" for a, b in t.exps)
        lines.append(f"term = {_fmt(t.coeff.real)} {_fmt(t.coeff.imag)} : {exps}")
    return "\n".join(lines) + "\n"


def spec_hash(spec: SystemSpec) -> str:
    return hashlib.sha256(serialize_spec(spec).encode("utf-8")).hexdigest()


# --------------------------------------------------------------------------
# presets

def quadratic(kappa: float = 0.5, n: int = 1) -> SystemSpec:
    """i u_t + Δu = -2 ū v,  i v_t + κ Δv = -u²."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    terms = [Monomial(1.0, ((0, 2), (1, 0)))]
    return build_spec(n, (1.0, 1.0), (1.0, kappa), (0.0, 0.0), terms, p=2,
                      name=f"quadratic(kappa={kappa:g})")


def cubic(sigma: float = 3.0, mu: float = 1.0, n: int = 1) -> SystemSpec:
    """Kerr-type two-component system with alpha = (1, sigma), beta = (1, mu)."""
    if not (sigma > 0 and mu > 0):
        raise ValueError("sigma and mu must be positive")
    terms = [
        Monomial(1.0 / 36.0, ((2, 2), (0, 0))),
        Monomial(9.0 / 4.0, ((0, 0), (2, 2))),
        Monomial(1.0, ((1, 1), (1, 1))),
        Monomial(1.0 / 9.0, ((0, 3), (1, 0))),
    ]
    return build_spec(n, (1.0, sigma), (1.0, 1.0), (1.0, mu), terms, p=3,
                      name=f"cubic(sigma={sigma:g},mu={mu:g})")


def single_cubic(n: int = 1) -> SystemSpec:
    """Scalar focusing cubic NLS, F = |z|^4 / 4."""
    return build_spec(n, (1.0,), (1.0,), (0.0,), [Monomial(0.25, ((2, 2),))], p=3, name="single_cubic")


PRESETS = {
    "quadratic": (quadratic, ("kappa",)),
    "cubic": (cubic, ("sigma", "mu")),
    "single_cubic": (single_cubic, ()),
}


def parse_preset_call(text: str) -> tuple[str, dict[str, float]]:
    m = re.fullmatch(r"\s*(\w+)\s*(?:\((.*)\))?\s*", text)
    if not m:
        raise ValueError(f"malformed preset {text!r}")
    name, argstr = m.group(1), m.group(2)
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}")
    params = PRESETS[name][1]
    kwargs: dict[str, float] = {}
    if argstr and argstr.strip():
        for pos, item in enumerate(argstr.split(",")):
            item = item.strip()
            if "=" in item:
                k, v = (s.strip() for s in item.split("=", 1))
            else:
                if pos >= len(params):
                    raise ValueError(f"too many arguments for preset {name!r}")
                k, v = params[pos], item
            if k not in params:
                raise ValueError(f"preset {name!r} has no parameter {k!r}")
            kwargs[k] = float(v)
    return name, kwargs


def preset(text: str, n: int = 1) -> SystemSpec:
    """Build a preset from ``name(param=value, ...)``."""
    name, kwargs = parse_preset_call(text)
    return PRESETS[name][0](n=n, **kwargs)


def load_spec(source: str, n: int | None = None) -> SystemSpec:
    """Resolve a preset expression or a spec-file path; ``n`` overrides the dimension."""
    path = Path(source)
    if path.is_file():
        spec = parse_spec(path.read_text(encoding="utf-8"), name=path.stem)
        return spec.with_dimension(n) if n is not None else spec
    return preset(source, n=1 if n is None else n)
