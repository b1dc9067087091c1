"""Command-line interface: validate, ground-state, evolve, classify, pseudo-conformal, virial-check.

Exit codes: 0 success, 1 validation failure, 2 numerical failure, 3 usage error.
Errors are reported as a single ``nlslab: error kind=... reason=...`` line on stderr.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import (classify, critical_index, make_record, second_difference,
                          threshold_relations, virial_residuals)
from .evolution import (BLOW_UP, INVALID, EvolveConfig, evolve, exact_pseudo_conformal,
                        exact_pseudo_conformal_K, pseudo_conformal_data, relative_l2_error)
from .groundstate import (GroundStateError, elliptic_params, optimal_gn_constant,
                          solve_ground_state, verify_pohozaev, weinstein_infimum)
from .nonlinearity import (SystemSpec, check_mass_resonance, format_monomial, hypotheses_ok,
                           validate_hypotheses)
from .radial import RadialGrid
from .specfile import PRESETS, SpecError, load_spec, parse_preset_call, spec_hash
from .spectral import FieldState, Grid, gaussian_state, read_field, write_field

log = logging.getLogger("nlslab")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2, 3
MEMORY_ENV = "NLSLAB_MEMORY_CAP_MB"
DEFAULT_MEMORY_MB = 4096

EVOLVE_COLUMNS = ["t", "Q", "E", "K", "L", "P", "V", "Vdot", "Vddot_formula", "Vddot_fd", "sup_norm"]
VIRIAL_COLUMNS = ["t", "V", "Vdot", "Vddot_formula", "Vddot_fd", "residual"]


class CliError(Exception):
    def __init__(self, kind: str, reason: str, code: int):
        super().__init__(reason)
        self.kind = kind
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        raise CliError("usage", message, EXIT_USAGE)


# --------------------------------------------------------------------------
# output helpers

def _num(x):
    if x is None:
        return ""
    return repr(float(x))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def write_json(path: Path, payload: dict) -> None:
    _atomic_write(path, json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, columns: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_num(v) for v in row])
    _atomic_write(path, buf.getvalue())


def manifest_path(out: Path) -> Path:
    return out.with_name(out.stem + ".manifest.json")


def write_manifest(args, spec: SystemSpec | None, grid, outputs: list[Path], extra: dict | None = None) -> Path:
    options = {k: v for k, v in sorted(vars(args).items())
               if k not in ("func", "sweep", "log_level", "out") and not callable(v)}
    payload = {
        "tool": "nlslab",
        "version": __version__,
        "command": args.command,
        "spec_source": args.spec,
        "spec_hash": spec_hash(spec) if spec is not None else None,
        "grid": _grid_record(grid),
        "seed": args.seed,
        "options": options,
        "outputs": [str(p) for p in outputs],
    }
    if extra:
        payload.update(extra)
    path = manifest_path(Path(args.out))
    write_json(path, payload)
    return path


def _grid_record(grid) -> dict | None:
    if grid is None:
        return None
    if isinstance(grid, RadialGrid):
        return {"kind": "radial", "n": grid.n, "M": grid.M, "R": grid.R}
    return {"kind": "cartesian", "n": grid.n, "N": grid.N, "L": grid.L}


# --------------------------------------------------------------------------
# shared construction

def _load(args) -> SystemSpec:
    try:
        return load_spec(args.spec, n=args.n)
    except SpecError as exc:
        raise CliError("spec", str(exc), EXIT_VALIDATION) from None
    except (ValueError, TypeError) as exc:
        raise CliError("usage", f"cannot resolve spec {args.spec!r}: {exc}", EXIT_USAGE) from None


def _memory_cap() -> float:
    raw = os.environ.get(MEMORY_ENV)
    try:
        return float(raw) if raw else DEFAULT_MEMORY_MB
    except ValueError:
        raise CliError("usage", f"{MEMORY_ENV} must be a number of megabytes", EXIT_USAGE) from None


def _grid(args, spec: SystemSpec, allow_radial: bool = True):
    kind = args.grid
    if kind == "auto":
        kind = "radial" if spec.n > 3 else "cartesian"
    if kind == "radial":
        if not allow_radial:
            raise CliError("usage", "this command needs a Cartesian grid (n <= 3)", EXIT_USAGE)
        return RadialGrid(spec.n, args.M, args.R)
    if spec.n > 3:
        raise CliError("usage", "Cartesian grids support n <= 3; use --grid radial", EXIT_USAGE)
    need = args.N ** spec.n * spec.l * 16 / 2 ** 20
    cap = _memory_cap()
    if need >= cap:
        raise CliError("usage", f"grid needs {need:.0f} MB per state, above the {cap:g} MB cap "
                       f"({MEMORY_ENV})", EXIT_USAGE)
    try:
        return Grid(spec.n, args.N, args.L)
    except ValueError as exc:
        raise CliError("usage", str(exc), EXIT_USAGE) from None


def _ground_state(spec: SystemSpec, grid, args, omega: float = 1.0, beta=None):
    try:
        params = elliptic_params(spec, omega=omega, beta=beta)
        gs = solve_ground_state(params, grid, tol=args.tol, max_iter=args.max_iter,
                                residual_tol=args.residual_tol)
    except GroundStateError as exc:
        raise CliError("groundstate", str(exc), EXIT_NUMERICAL) from None
    return gs


def _initial_data(args, spec: SystemSpec, grid, gs=None):
    """Initial state from ``--init``; returns (state, ground state or None)."""
    if args.init == "gaussian":
        amps = args.amplitudes or [args.amplitude] * spec.l
        if len(amps) != spec.l:
            raise CliError("usage", f"--amplitudes needs {spec.l} values", EXIT_USAGE)
        if isinstance(grid, RadialGrid):
            g = np.exp(-grid.r2 / args.width ** 2)
            return FieldState(grid, tuple(complex(a) * g for a in amps)), gs
        return gaussian_state(grid, amps, args.width), gs
    if args.init == "groundstate":
        if gs is None:
            gs = _ground_state(spec, grid, args)
        if not gs.converged:
            raise CliError("groundstate", f"ground state did not converge: {gs.reason}", EXIT_NUMERICAL)
        comps = []
        for c in gs.psi.components:
            c = np.real(c)
            if args.dilation != 1.0:
                if isinstance(grid, RadialGrid):
                    c = np.interp(grid.r / args.dilation, grid.r, c, right=0.0)
                else:
                    c = grid.dilate(c, args.dilation)
            comps.append(args.amplitude * c.astype(complex))
        return FieldState(grid, tuple(comps)), gs
    path = Path(args.init)
    if not path.is_file():
        raise CliError("usage", f"--init must be gaussian, groundstate or a .nlsfld file, got {args.init!r}",
                       EXIT_USAGE)
    state = read_field(path)
    if state.grid != grid or state.l != spec.l:
        raise CliError("usage", "field file does not match the grid or the number of components", EXIT_USAGE)
    return state, gs


def _figure_path(out: Path, suffix: str) -> Path:
    return out.with_name(out.stem + suffix + ".png")


# --------------------------------------------------------------------------
# commands

def cmd_validate(args) -> tuple[int, list[Path], SystemSpec, object, dict]:
    spec = _load(args)
    report = validate_hypotheses(spec, seed=args.seed)
    sc, regime = critical_index(spec.n, spec.p)
    payload = {
        "spec": spec.name,
        "n": spec.n, "l": spec.l, "p": spec.p,
        "alpha": spec.alpha, "gamma": spec.gamma, "beta": spec.beta,
        "potential": [format_monomial(t) for t in spec.potential.terms],
        "f": [[format_monomial(t) for t in comp] for comp in spec.f.components],
        "sigma": spec.sigma,
        "mass_resonant": check_mass_resonance(spec, seed=args.seed),
        "s_c": sc, "regime": regime,
        "hypotheses": report,
        "all_pass": hypotheses_ok(report),
    }
    out = Path(args.out)
    write_json(out, payload)
    print(f"{spec.name}: n={spec.n} l={spec.l} p={spec.p} sigma={spec.sigma} "
          f"mass_resonant={str(payload['mass_resonant']).lower()} regime={regime}")
    for key, entry in report.items():
        print(f"  {key:4s} {entry['status']}")
    code = EXIT_OK if payload["all_pass"] else EXIT_VALIDATION
    return code, [out], spec, None, {}


def cmd_ground_state(args):
    spec = _load(args)
    grid = _grid(args, spec)
    beta = args.beta if args.beta is not None else None
    gs = _ground_state(spec, grid, args, omega=args.omega, beta=beta)
    poh = verify_pohozaev(gs)
    payload = {
        "converged": gs.converged,
        "reason": gs.reason,
        "iterations": gs.iterations,
        "residual": gs.residual,
        "omega": gs.omega,
        "b": gs.params.b,
        "functionals": gs.functionals.as_dict(),
        "pohozaev": poh.as_dict(),
        "min_value": float(min(np.min(np.real(c)) for c in gs.psi.components)),
        "boundary_sup": float(max(grid.boundary_sup(c) for c in gs.psi.components)),
    }
    if gs.converged and poh.applicable:
        c_opt = optimal_gn_constant(gs)
        payload["C_opt"] = c_opt
        payload["J_infimum"] = weinstein_infimum(gs.functionals.Qcal, grid.n, spec.p)
        if args.omega == 1.0 and not any(args.beta or []):
            payload["threshold_relations"] = threshold_relations(gs)
    out = Path(args.out)
    outputs = [out]
    if isinstance(grid, Grid):
        field_path = out.with_name(out.stem + ".nlsfld")
        write_field(field_path, gs.psi)
        outputs.append(field_path)
        payload["profile"] = str(field_path)
    write_json(out, payload)
    if args.figures:
        from .plotting import profile_figure
        outputs.append(profile_figure(gs.psi, _figure_path(out, "_profile"), spec.name))
    f = gs.functionals
    print(f"ground state {spec.name} n={grid.n}: converged={gs.converged} iterations={gs.iterations} "
          f"residual={gs.residual:.3e}")
    print(f"  K={f.K:.10g} Qcal={f.Qcal:.10g} P={f.P:.10g} I={f.I:.10g} J={f.J}")
    if poh.applicable:
        print(f"  Pohozaev relative errors: P {poh.P_rel:.2e}  K {poh.K_rel:.2e}  Qcal {poh.Q_rel:.2e}")
    code = EXIT_OK if gs.converged else EXIT_NUMERICAL
    return code, outputs, spec, grid, {}


def _evolve_config(args) -> EvolveConfig:
    try:
        return EvolveConfig(dt=args.dt, t_end=args.t_end, dt_min=args.dt_min,
                            blowup_factor=args.blowup_factor, snapshot_stride=args.snapshot_stride,
                            adaptive=args.adaptive)
    except ValueError as exc:
        raise CliError("usage", str(exc), EXIT_USAGE) from None


def cmd_evolve(args):
    spec = _load(args)
    grid = _grid(args, spec, allow_radial=False)
    cfg = _evolve_config(args)
    u0, _ = _initial_data(args, spec, grid)
    fields = Path(args.fields_out) if args.fields_out else None
    outcome = evolve(u0, spec, cfg, fields_out=fields)
    rows = [[getattr(r, c) for c in EVOLVE_COLUMNS] for r in outcome.series]
    out = Path(args.out)
    write_csv(out, EVOLVE_COLUMNS, rows)
    outputs = [out]
    if args.figures:
        from .plotting import series_figure
        outputs.append(series_figure(outcome.series, _figure_path(out, "_series"), spec.name))
    resonant = check_mass_resonance(spec, seed=args.seed)
    extra = {
        "status": outcome.status_label(),
        "reason": outcome.reason,
        "steps": outcome.steps,
        "mass_resonant": resonant,
        "notes": ["blow-up is detected numerically (K growth or time-step floor), not proved"]
        + ([] if resonant else ["system is not mass-resonant: Vddot_formula omits the flux term"]),
    }
    first, last = outcome.series[0], outcome.series[-1]
    print(f"evolve {spec.name} n={grid.n}: {outcome.status_label()} after {outcome.steps} steps")
    if first.Q:
        print(f"  Q drift {abs(last.Q / first.Q - 1):.3e}  K(t_end)/K(0) "
              f"{(last.K / first.K) if first.K else float('nan'):.4g}")
    code = EXIT_NUMERICAL if outcome.status == INVALID else EXIT_OK
    return code, outputs, spec, grid, extra


def cmd_classify(args):
    spec = _load(args)
    grid = _grid(args, spec)
    gs = _ground_state(spec, grid, args)
    if not gs.converged:
        raise CliError("groundstate", f"ground state did not converge: {gs.reason}", EXIT_NUMERICAL)
    u0, _ = _initial_data(args, spec, grid, gs=gs)
    try:
        verdict = classify(u0, spec, gs, assume=args.assume)
    except ValueError as exc:
        raise CliError("classify", str(exc), EXIT_NUMERICAL) from None
    out = Path(args.out)
    write_json(out, verdict.as_dict())
    print(f"classify {spec.name} n={grid.n}: {verdict.regime} s_c={verdict.s_c:g} -> {verdict.classification}")
    return EXIT_OK, [out], spec, grid, {"classification": verdict.classification}


def cmd_pseudo_conformal(args):
    spec = _load(args)
    spec = spec.with_beta([0.0] * spec.l)
    grid = _grid(args, spec, allow_radial=False)
    gs = _ground_state(spec, grid, args)
    if not gs.converged:
        raise CliError("groundstate", f"ground state did not converge: {gs.reason}", EXIT_NUMERICAL)
    T = args.T
    t_end = args.t_end if args.t_end is not None else 0.7 * T
    if not 0 < t_end < T:
        raise CliError("usage", "need 0 < t-end < T", EXIT_USAGE)
    try:
        v0 = pseudo_conformal_data(gs, T, spec)
    except ValueError as exc:
        raise CliError("validation", str(exc), EXIT_VALIDATION) from None
    cfg = _evolve_config(argparse.Namespace(**{**vars(args), "t_end": t_end, "adaptive": False}))
    rows = []

    def observe(state, rec):
        ex = exact_pseudo_conformal(gs, T, state.t, spec) if state.t < T else None
        rows.append([state.t, T - state.t, rec.Q, rec.K, exact_pseudo_conformal_K(gs, T, state.t, spec),
                     relative_l2_error(state, ex)])

    outcome = evolve(v0, spec, cfg, observer=observe)
    columns = ["t", "T_minus_t", "Q", "K", "K_exact", "rel_L2_error"]
    out = Path(args.out)
    write_csv(out, columns, rows)
    outputs = [out]
    tau = np.array([r[1] for r in rows])
    K = np.array([r[3] for r in rows])
    lo, hi = args.fit_window
    sel = (np.array([r[0] for r in rows]) >= lo * T - 1e-12) & (np.array([r[0] for r in rows]) <= hi * T + 1e-12)
    slope = float(np.polyfit(np.log(tau[sel]), np.log(K[sel]), 1)[0]) if sel.sum() >= 2 else None
    Qpsi = gs.functionals.Q
    extra = {
        "status": outcome.status_label(),
        "slope_logK_vs_log_T_minus_t": slope,
        "fit_window": [lo * T, hi * T],
        "Q_data_minus_Q_psi": rows[0][2] - Qpsi,
        "max_rel_L2_error": max(r[5] for r in rows),
    }
    if args.figures:
        from .plotting import blowup_figure
        outputs.append(blowup_figure(tau, K, [r[4] for r in rows], _figure_path(out, "_K"), spec.name))
    print(f"pseudo-conformal {spec.name}: {outcome.status_label()}, slope {slope}, "
          f"max relative L2 error {extra['max_rel_L2_error']:.3e}")
    code = EXIT_NUMERICAL if outcome.status == INVALID else EXIT_OK
    return code, outputs, spec, grid, extra


def cmd_virial_check(args):
    spec = _load(args)
    grid = _grid(args, spec, allow_radial=False)
    cfg = _evolve_config(args)
    u0, _ = _initial_data(args, spec, grid)
    outcome = evolve(u0, spec, cfg)
    res = virial_residuals(outcome.series)
    rows = [[r.t, r.V, r.Vdot, r.Vddot_formula, r.Vddot_fd, e] for r, e in zip(outcome.series, res)]
    out = Path(args.out)
    write_csv(out, VIRIAL_COLUMNS, rows)
    outputs = [out]
    resonant = check_mass_resonance(spec, seed=args.seed)
    K0 = outcome.series[0].K
    worst = max((abs(e) for e in res if e is not None), default=None)
    within = all(e is None or abs(e) <= max(1e-3 * abs(r.Vddot_formula), 1e-6 * K0)
                 for r, e in zip(outcome.series, res))
    extra = {"mass_resonant": resonant, "max_abs_residual": worst, "within_tolerance": within,
             "status": outcome.status_label()}
    if not resonant:
        extra["notes"] = ["not mass-resonant: the residual includes the flux term the formula omits"]
    if args.figures:
        from .plotting import virial_figure
        outputs.append(virial_figure(outcome.series, _figure_path(out, "_virial"), spec.name))
    print(f"virial-check {spec.name}: mass_resonant={str(resonant).lower()} max |residual| = {worst}")
    code = EXIT_NUMERICAL if outcome.status == INVALID else EXIT_OK
    return code, outputs, spec, grid, extra


COMMANDS = {
    "validate": (cmd_validate, "validate.json"),
    "ground-state": (cmd_ground_state, "groundstate.json"),
    "evolve": (cmd_evolve, "evolve.csv"),
    "classify": (cmd_classify, "verdict.json"),
    "pseudo-conformal": (cmd_pseudo_conformal, "pseudo_conformal.csv"),
    "virial-check": (cmd_virial_check, "virial.csv"),
}


# --------------------------------------------------------------------------
# parser

def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _window(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("expected two numbers lo,hi")
    return vals[0], vals[1]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nlslab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"nlslab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, grid=True):
        p.add_argument("--spec", required=True,
                       help="preset such as 'quadratic(kappa=0.5)' or a spec-file path")
        p.add_argument("--n", type=int, default=None, help="spatial dimension (overrides the system file)")
        p.add_argument("--seed", type=int, default=42, help="seed for sampled checks (default 42)")
        p.add_argument("--out", default=None, help="main output file")
        p.add_argument("--sweep", default=None, metavar="PARAM=a,b,c",
                       help="run once per value, in parallel worker processes")
        p.add_argument("--figures", action="store_true", help="also render PNG figures next to the output")
        p.add_argument("--log-level", default="WARNING")
        if grid:
            p.add_argument("--grid", choices=["auto", "cartesian", "radial"], default="auto")
            p.add_argument("--N", type=int, default=256, help="points per axis (power of two)")
            p.add_argument("--L", type=float, default=20.0, help="box half-length")
            p.add_argument("--M", type=int, default=16000, help="radial cells")
            p.add_argument("--R", type=float, default=40.0, help="radial domain length")
            p.add_argument("--tol", type=float, default=1e-10, help="ground-state update tolerance")
            p.add_argument("--max-iter", type=int, default=5000)
            p.add_argument("--residual-tol", type=float, default=1e-8,
                           help="ground-state equation residual required for convergence")

    def initial(p):
        p.add_argument("--init", default="gaussian",
                       help="gaussian, groundstate, or a .nlsfld file")
        p.add_argument("--amplitude", type=float, default=1.0, help="amplitude (scales the ground state)")
        p.add_argument("--amplitudes", type=_floats, default=None, help="per-component Gaussian amplitudes")
        p.add_argument("--width", type=float, default=1.0, help="Gaussian width")
        p.add_argument("--dilation", type=float, default=1.0, help="ground state as psi(x / dilation)")

    def stepping(p, t_end_required=True):
        p.add_argument("--t-end", type=float, required=t_end_required, default=None)
        p.add_argument("--dt", type=float, default=1e-3)
        p.add_argument("--dt-min", type=float, default=1e-8)
        p.add_argument("--adaptive", action="store_true", help="halve dt when K doubles")
        p.add_argument("--blowup-factor", type=float, default=1e6)
        p.add_argument("--snapshot-stride", type=int, default=10, help="steps between records")

    p = sub.add_parser("validate", help="check the structural hypotheses of a system")
    common(p, grid=False)

    p = sub.add_parser("ground-state", help="compute a ground state and its identities")
    common(p)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--beta", type=_floats, default=None, help="elliptic beta (default zeros)")

    p = sub.add_parser("evolve", help="integrate the Cauchy problem")
    common(p)
    initial(p)
    stepping(p)
    p.add_argument("--fields-out", default=None, help="directory for .nlsfld snapshots")

    p = sub.add_parser("classify", help="global existence / blow-up verdict for initial data")
    common(p)
    initial(p)
    p.add_argument("--assume", choices=["finite-variance", "radial"], default="finite-variance")

    p = sub.add_parser("pseudo-conformal", help="evolve explicit blow-up data against the closed form")
    common(p)
    stepping(p, t_end_required=False)
    p.add_argument("--T", type=float, default=1.0, help="blow-up time")
    p.add_argument("--fit-window", type=_window, default=(0.3, 0.7),
                   help="fraction of T over which log K is fitted against log(T - t)")

    p = sub.add_parser("virial-check", help="compare finite-difference V'' with the virial identity")
    common(p)
    initial(p)
    stepping(p)
    return parser


# --------------------------------------------------------------------------
# driver

def _execute(args) -> tuple[int, Path | None]:
    func = COMMANDS[args.command][0]
    code, outputs, spec, grid, extra = func(args)
    mpath = write_manifest(args, spec, grid, outputs, extra)
    return code, mpath


def _sweep_values(text: str) -> tuple[str, list[str]]:
    if "=" not in text:
        raise CliError("usage", "--sweep needs PARAM=a,b,c", EXIT_USAGE)
    name, vals = text.split("=", 1)
    values = [v.strip() for v in vals.split(",") if v.strip()]
    if not values:
        raise CliError("usage", "--sweep has no values", EXIT_USAGE)
    return name.strip(), values


def _sweep_args(args, name: str, value: str):
    sub = copy.copy(args)
    sub.sweep = None
    stem = Path(args.out)
    sub.out = str(stem.with_name(f"{stem.stem}_{name}-{value}{stem.suffix}"))
    if getattr(args, "fields_out", None):
        sub.fields_out = str(Path(args.fields_out) / f"{name}-{value}")
    try:
        preset_name, kwargs = parse_preset_call(args.spec)
    except ValueError:
        preset_name, kwargs = None, {}
    if preset_name is not None and name in PRESETS[preset_name][1]:
        kwargs[name] = float(value)
        sub.spec = f"{preset_name}(" + ",".join(f"{k}={v!r}" for k, v in sorted(kwargs.items())) + ")"
        return sub
    dest = name.replace("-", "_")
    if not hasattr(args, dest) or dest in ("command", "spec", "out"):
        raise CliError("usage", f"cannot sweep over {name!r}", EXIT_USAGE)
    current = getattr(args, dest)
    try:
        setattr(sub, dest, type(current)(value) if current is not None else float(value))
    except ValueError:
        raise CliError("usage", f"bad sweep value {value!r} for {name}", EXIT_USAGE) from None
    return sub


def _worker(args) -> tuple[int, str | None, str | None]:
    try:
        code, mpath = _execute(args)
        return code, str(mpath), None
    except CliError as exc:
        return exc.code, None, f"kind={exc.kind} reason={exc}"


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                            format="%(levelname)s %(name)s: %(message)s")
        if args.out is None:
            args.out = COMMANDS[args.command][1]
        if args.sweep:
            name, values = _sweep_values(args.sweep)
            jobs = [_sweep_args(args, name, v) for v in values]
            workers = max(1, min(len(jobs), os.cpu_count() or 1))
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_worker, jobs))
            summary = {"sweep": args.sweep, "runs": [
                {"value": v, "exit": c, "manifest": m, "error": e} for v, (c, m, e) in zip(values, results)]}
            write_json(manifest_path(Path(args.out)), {"tool": "nlslab", "version": __version__,
                                                       "command": args.command, "spec_source": args.spec,
                                                       "seed": args.seed, **summary})
            for v, (c, _, e) in zip(values, results):
                if e:
                    print(f"nlslab: error sweep={name}={v} {e}", file=sys.stderr)
            return max(c for c, _, _ in results)
        code, _ = _execute(args)
        return code
    except CliError as exc:
        reason = " ".join(str(exc).split())
        print(f"nlslab: error kind={exc.kind} exit={exc.code} reason={reason}", file=sys.stderr)
        return exc.code
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"nlslab: error kind=numerical exit={EXIT_NUMERICAL} reason={exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
