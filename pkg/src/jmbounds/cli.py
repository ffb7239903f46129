"""Command-line entry point: ``jmbounds <command> [options]``.

Commands: jm, povm, bound, sweep, penalty-study, simulate, ft. Global options
(``--seed``, ``--out``, ``--format``, ``--threads``) may appear before or after
the command and default to the ``ARTIFACT_SEED``, ``ARTIFACT_OUT``,
``ARTIFACT_FORMAT`` and ``ARTIFACT_THREADS`` environment variables.

Exit status: 0 on success, 2 when a result is infeasible or did not converge
(output is still written, with flags), 1 on invalid input.
"""

from __future__ import annotations

import argparse
import ast
import json
import math
import operator
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .bounds import VARIANTS, ObjectiveKind, SolverConfig, penalty_scaling_study, solve_lower_bound
from .fermat import ft_point
from .io import format_value, serialize_dataset, write_dataset
from .ionsim import DATASET_COLUMNS, MeasurementPlan, ShotConfig, run_experiment, simulate_plan
from .joint import (
    SIGNS2,
    SIGNS3,
    PovmConstructionError,
    Triple,
    build_povm_general,
    build_povm_orthogonal,
    build_povm_pair,
    is_rank_one,
    jm_check_coplanar,
    jm_check_one_orthogonal,
    jm_check_orthogonal,
    jm_check_pair,
    jm_check_triple,
    sign_label,
)
from .qubit import QubitState
from .scenarios import FAMILIES, FAMILY_VARIANT, SweepSpec, default_spec, run_sweep, triad

__all__ = ["main", "parse_expr", "parse_vector", "InputError"]

EXIT_OK, EXIT_INPUT, EXIT_FLAGGED = 0, 1, 2


class InputError(ValueError):
    """Invalid command-line input; reported with exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_FUNCS = {name: getattr(math, name) for name in ("sqrt", "sin", "cos", "tan", "asin", "acos", "atan")}
_NAMES = {"pi": math.pi}


def parse_expr(text: str, field: str = "value") -> float:
    """Evaluate a numeric expression such as ``pi/3`` or ``1/sqrt(3)``.

    Only numbers, ``pi``, ``+ - * / **`` and a few math functions are allowed.
    """

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords:
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise InputError(f"{field}: unsupported expression {text!r}")

    try:
        value = ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError, OverflowError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{field}: cannot evaluate {text!r} ({exc})") from None
    if not math.isfinite(value):
        raise InputError(f"{field}: {text!r} is not finite")
    return value


def parse_vector(text: str, field: str = "vector", max_norm: Optional[float] = 1.0) -> np.ndarray:
    """Parse ``x,y,z`` (components may be expressions); reject ``|v| > max_norm + 1e-9``."""
    parts = text.split(",")
    if len(parts) != 3:
        raise InputError(f"{field}: expected three comma-separated components, got {text!r}")
    v = np.array([parse_expr(p, f"{field}[{i}]") for i, p in enumerate(parts)])
    if max_norm is not None and np.linalg.norm(v) > max_norm + 1e-9:
        raise InputError(f"{field}: length {np.linalg.norm(v):.12g} exceeds {max_norm}")
    return v


def _float_list(text: str, field: str) -> tuple:
    return tuple(parse_expr(p, f"{field}[{i}]") for i, p in enumerate(text.split(",")))


def _family(name: str) -> str:
    if name not in FAMILIES:
        raise InputError(f"--family: unknown family {name!r}; valid options: {', '.join(FAMILIES)}")
    return name


# ---------------------------------------------------------------- commands


def _cmd_jm(args, g):
    l1, l2 = parse_vector(args.l1, "--l1"), parse_vector(args.l2, "--l2")
    if args.variant == "pair":
        ok = jm_check_pair(l1, l2)
        lhs = float(np.linalg.norm(l1 + l2) + np.linalg.norm(l1 - l2))
        return ["variant", "lhs", "bound", "satisfied"], [["pair", lhs, 2.0, ok]], EXIT_OK
    if args.l3 is None:
        raise InputError("--l3 is required unless --variant pair")
    t = Triple(l1, l2, parse_vector(args.l3, "--l3"))
    report = jm_check_triple(t)
    reduced = ""
    try:
        if args.variant == "orthogonal":
            reduced = jm_check_orthogonal(t)
        elif args.variant == "coplanar":
            reduced = jm_check_coplanar(t)
        elif args.variant == "one_orthogonal":
            reduced = jm_check_one_orthogonal(t)
    except ValueError as exc:
        raise InputError(f"--variant {args.variant}: {exc}") from None
    cols = ["variant", "lhs", "margin", "satisfied", "reduced_satisfied", "ft_x", "ft_y", "ft_z", "ft_converged"]
    row = [args.variant, report.lhs, report.margin, report.satisfied, reduced, *report.ft.point, report.ft.converged]
    return cols, [row], EXIT_OK if report.reliable else EXIT_FLAGGED


def _cmd_povm(args, g):
    l1, l2 = parse_vector(args.l1, "--l1"), parse_vector(args.l2, "--l2")
    if args.construction == "pair":
        povm, signs = build_povm_pair(l1, l2), SIGNS2
    else:
        if args.l3 is None:
            raise InputError("--l3 is required unless --construction pair")
        t = Triple(l1, l2, parse_vector(args.l3, "--l3"))
        povm = build_povm_orthogonal(t) if args.construction == "orthogonal" else build_povm_general(t)
        signs = SIGNS3
    cols = ["outcome", "s", "v_x", "v_y", "v_z", "min_eigenvalue", "rank_one"]
    rows = []
    for mu in signs:
        e = povm.outcomes[mu]
        rows.append([sign_label(mu), e.s, *e.v, e.eigenvalues[0], is_rank_one(e)])
    return cols, rows, EXIT_OK


def _solver_cfg(args, g) -> SolverConfig:
    kw = {"seed": g["seed"], "restarts": args.restarts}
    if args.schedule:
        kw["penalty_schedule"] = _float_list(args.schedule, "--schedule")
        kw["penalty_Np"] = kw["penalty_schedule"][-1]
    return SolverConfig(**kw)


def _triple_cells(t) -> list:
    return [*t[0], *t[1], *t[2]]


TRIPLE_COLUMNS = ["d_x", "d_y", "d_z", "e_x", "e_y", "e_z", "f_x", "f_y", "f_z"]


def _cmd_bound(args, g):
    family = _family(args.family)
    phi = parse_expr(args.phi, "--phi")
    varphi = parse_expr(args.varphi, "--varphi")
    extra = parse_expr(args.extra, "--extra") if args.extra is not None else None
    try:
        tri = triad(family, phi, varphi, extra)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    kind = ObjectiveKind(args.variant or FAMILY_VARIANT[family], hinge=args.hinge)
    res = solve_lower_bound(tri, kind, _solver_cfg(args, g))
    cols = ["family", "variant", "phi", "varphi", "value", "distance", "penalized_value", *TRIPLE_COLUMNS,
            "residual_g1", "residual_g2", "evals", "feasible"]
    row = [family, kind.variant, phi, varphi, res.value, res.distance, res.penalized_value,
           *_triple_cells(res.argmin), res.residual_g1, res.residual_g2, res.evals, res.feasible]
    return cols, [row], EXIT_OK if res.feasible else EXIT_FLAGGED


def _sweep_spec(args, family: str) -> SweepSpec:
    if args.phi_grid is None and args.varphi_grid is None and not args.grid:
        spec = default_spec(family, args.n)
        return spec
    lo, hi = (0.0, math.pi / 2) if family in ("orthogonal", "coplanar") else (0.0, math.pi)
    if args.phi_range:
        lo, hi = _float_list(args.phi_range, "--phi-range")
    phi = _float_list(args.phi_grid, "--phi-grid") if args.phi_grid else tuple(np.linspace(lo, hi, args.n))
    if args.grid:
        varphi = _float_list(args.varphi_grid, "--varphi-grid") if args.varphi_grid else phi
        return SweepSpec(family, phi, varphi)
    if family == "orthogonal":
        varphi = _float_list(args.varphi_grid, "--varphi-grid") if args.varphi_grid else (math.pi / 4,)
        return SweepSpec(family, phi, varphi)
    return SweepSpec(family, phi, diagonal_only=True, extra=0.0 if family == "general" else None)


def _cmd_sweep(args, g):
    family = _family(args.family)
    try:
        spec = _sweep_spec(args, family)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    rows = run_sweep(spec, _solver_cfg(args, g), g["threads"])
    cols = ["family", "phi", "varphi", "value", "delta_ad", "delta_be", "delta_cf", *TRIPLE_COLUMNS,
            "residual_g1", "residual_g2", "evals", "feasible"]
    out = []
    for r in rows:
        out.append([family, r.phi, r.varphi, r.value, *r.terms.terms(), *_triple_cells(r.argmin),
                    r.residual_g1, r.residual_g2, r.evals, r.feasible])
    status = EXIT_OK if all(r.feasible for r in rows) else EXIT_FLAGGED
    return cols, out, status


def _cmd_penalty(args, g):
    nps = _float_list(args.Np, "--Np")
    study = penalty_scaling_study(Np_list=nps, cfg=SolverConfig(seed=g["seed"]))
    cols = ["Np", "gap", "gap_times_Np", "slope", "constant"]
    rows = [[float(n), float(gap), float(gap * n), study.slope, study.constant] for n, gap in zip(study.Np, study.gap)]
    for n, _ in study.excluded:
        rows.append([n, math.inf, math.inf, study.slope, study.constant])
    status = EXIT_OK if not study.excluded and math.isfinite(study.slope) else EXIT_FLAGGED
    rows = [r for r in rows if math.isfinite(r[1])]
    return cols, rows, status


def _shot_cfg(args, g) -> ShotConfig:
    return ShotConfig(
        shots=args.shots,
        seed=g["seed"],
        exact=args.exact,
        prep_depolarization=args.prep_depolarization,
        detection_flip=args.detection_flip,
        amplitude_jitter=args.amplitude_jitter,
    )


def _cmd_simulate(args, g):
    sc = _shot_cfg(args, g)
    if args.plan:
        try:
            plan = MeasurementPlan.from_json(Path(args.plan).read_text(encoding="utf-8"))
        except OSError as exc:
            raise InputError(f"--plan: cannot read {args.plan}: {exc.strerror}") from None
        except ValueError as exc:
            raise InputError(f"--plan: {exc}") from None
        if args.state is None:
            raise InputError("--state is required with --plan")
        rho = QubitState(parse_vector(args.state, "--state"))
        est = simulate_plan(plan, rho, sc)
        cols = ["label", "theta_L", "phi_L", "weight", "value", "stderr", "shots", "seed", "exact"]
        rows = [[e.label, e.pulse.theta, e.pulse.phi, e.weight, est[e.label].p_hat, est[e.label].stderr,
                 sc.shots, sc.seed, est[e.label].p_exact] for e in plan.entries]
        return cols, rows, EXIT_OK
    family = _family(args.family)
    try:
        spec = _sweep_spec(args, family)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    source = "analytic" if family == "orthogonal" else "solver"
    data = run_experiment(family, spec, source, sc, _solver_cfg(args, g), g["threads"])
    return list(DATASET_COLUMNS), [r.as_tuple() for r in data], EXIT_OK


def _read_points(path: str) -> np.ndarray:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"--points: cannot read {path}: {exc.strerror}") from None
    try:
        if text.lstrip().startswith("["):
            pts = np.asarray(json.loads(text), dtype=float)
        else:
            lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
            pts = np.array([parse_vector(ln, f"--points line {i + 1}", None) for i, ln in enumerate(lines)])
    except (ValueError, TypeError) as exc:
        raise InputError(f"--points: {exc}") from None
    if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 3:
        raise InputError(f"--points: need at least three 3-vectors, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise InputError("--points: non-finite coordinates")
    return pts


def _cmd_ft(args, g):
    if args.points:
        pts = _read_points(args.points)
    elif args.point:
        pts = np.array([parse_vector(p, f"--point[{i}]", None) for i, p in enumerate(args.point)])
        if len(pts) < 3:
            raise InputError("--point: need at least three points")
    else:
        raise InputError("either --points FILE or three or more --point X,Y,Z is required")
    res = ft_point(pts, tol=args.tol, max_iter=args.max_iter)
    cols = ["x", "y", "z", "total_distance", "iterations", "converged", "at_vertex"]
    row = [*res.point, res.total_distance, res.iterations, res.converged, "" if res.at_vertex is None else res.at_vertex]
    return cols, [row], EXIT_OK if res.converged else EXIT_FLAGGED


COMMANDS = {
    "jm": _cmd_jm,
    "povm": _cmd_povm,
    "bound": _cmd_bound,
    "sweep": _cmd_sweep,
    "penalty-study": _cmd_penalty,
    "simulate": _cmd_simulate,
    "ft": _cmd_ft,
}


# ---------------------------------------------------------------- parser


def _global_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (default 0)")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS, help="output format (default csv)")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker processes for sweeps (default 1)")
    return p


def _add_solver_options(p):
    p.add_argument("--restarts", type=int, default=4, help="number of starts (default 4)")
    p.add_argument("--schedule", help="penalty continuation, e.g. 1e2,1e3,1e4,1e5")


def _add_grid_options(p):
    p.add_argument("--n", type=int, default=41, help="grid points per axis (default 41)")
    p.add_argument("--phi-range", help="lo,hi for phi (expressions allowed)")
    p.add_argument("--phi-grid", help="explicit comma-separated phi values")
    p.add_argument("--varphi-grid", help="explicit comma-separated varphi values")
    p.add_argument("--grid", action="store_true", help="full phi x varphi product instead of the diagonal")


def build_parser() -> argparse.ArgumentParser:
    common = _global_options()
    parser = _Parser(prog="jmbounds", description=__doc__.splitlines()[0], parents=[common])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("jm", parents=[common], help="joint-measurability test")
    p.add_argument("--l1", required=True)
    p.add_argument("--l2", required=True)
    p.add_argument("--l3")
    p.add_argument("--variant", choices=("general", "orthogonal", "coplanar", "one_orthogonal", "pair"), default="general")

    p = sub.add_parser("povm", parents=[common], help="construct a joint POVM")
    p.add_argument("--l1", required=True)
    p.add_argument("--l2", required=True)
    p.add_argument("--l3")
    p.add_argument("--construction", choices=("general", "orthogonal", "pair"), default="general")

    p = sub.add_parser("bound", parents=[common], help="lower bound for one triad")
    p.add_argument("--family", required=True)
    p.add_argument("--phi", default="0")
    p.add_argument("--varphi", default="0")
    p.add_argument("--extra", help="second azimuth of the general family")
    p.add_argument("--variant", choices=VARIANTS, help="objective (default: matches the family)")
    p.add_argument("--hinge", action="store_true", help="hinge instead of squared compatibility penalty")
    _add_solver_options(p)

    p = sub.add_parser("sweep", parents=[common], help="lower bound along a parameter grid")
    p.add_argument("--family", required=True)
    _add_grid_options(p)
    _add_solver_options(p)

    p = sub.add_parser("penalty-study", parents=[common], help="penalised minimum vs penalty factor")
    p.add_argument("--Np", default="1e1,1e2,1e3,1e4", help="comma-separated penalty factors")

    p = sub.add_parser("simulate", parents=[common], help="simulated shot-noise experiment")
    p.add_argument("--family", default="orthogonal")
    p.add_argument("--plan", help="MeasurementPlan JSON file; measured on --state")
    p.add_argument("--state", help="Bloch vector of the measured state (with --plan)")
    p.add_argument("--shots", type=int, default=20_000)
    p.add_argument("--exact", action="store_true", help="noise-free probabilities")
    p.add_argument("--prep-depolarization", type=float, default=0.0)
    p.add_argument("--detection-flip", type=float, default=0.0)
    p.add_argument("--amplitude-jitter", type=float, default=0.0)
    _add_grid_options(p)
    _add_solver_options(p)

    p = sub.add_parser("ft", parents=[common], help="Fermat-Toricelli point")
    p.add_argument("--points", help="file with one x,y,z per line or a JSON list")
    p.add_argument("--point", action="append", help="a point x,y,z (repeatable)")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iter", type=int, default=10_000)
    return parser


def _globals(args, env) -> dict:
    def pick(name, conv, default):
        if hasattr(args, name):
            return getattr(args, name)
        raw = env.get(f"ARTIFACT_{name.upper()}")
        if raw is None:
            return default
        try:
            return conv(raw)
        except ValueError:
            raise InputError(f"ARTIFACT_{name.upper()}: invalid value {raw!r}") from None

    g = {
        "seed": pick("seed", int, 0),
        "out": pick("out", str, None),
        "format": pick("format", str, "csv"),
        "threads": pick("threads", int, 1),
    }
    if g["format"] not in ("csv", "json"):
        raise InputError(f"format must be csv or json, got {g['format']!r}")
    if g["threads"] < 1:
        raise InputError("threads must be >= 1")
    if g["seed"] < 0 or g["seed"] >= 2**64:
        raise InputError("seed must be an unsigned 64-bit integer")
    return g


def _config(args, g) -> dict:
    skip = {"seed", "out", "format", "threads", "command"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    cfg.update(seed=g["seed"], format=g["format"], threads=g["threads"])
    return cfg


def main(argv=None, env=None) -> int:
    env = os.environ if env is None else env
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        g = _globals(args, env)
        cols, rows, status = COMMANDS[args.command](args, g)
    except PovmConstructionError as exc:
        print(f"jmbounds {args.command}: {exc}", file=sys.stderr)
        return EXIT_FLAGGED
    except ValueError as exc:  # InputError and invalid vectors from the library
        print(f"jmbounds {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    metadata = {"artifact_version": __version__, "command": args.command, "config": _config(args, g)}
    text = serialize_dataset(rows, cols, g["format"], metadata)
    if g["out"]:
        try:
            write_dataset(g["out"], text)
        except OSError as exc:
            print(f"jmbounds {args.command}: {exc}", file=sys.stderr)
            return EXIT_INPUT
        if len(rows) == 1:
            print(", ".join(f"{c}={format_value(v)}" for c, v in zip(cols, rows[0])))
    else:
        sys.stdout.write(text)
    if status == EXIT_FLAGGED:
        print(f"jmbounds {args.command}: result flagged (infeasible or not converged)", file=sys.stderr)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
