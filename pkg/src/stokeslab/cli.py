"""Command-line front end: ``python -m stokeslab <command> ...``.

Exit codes: 0 success (or the configured assertion holds), 1 numerical
failure (or the assertion fails), 2 usage, configuration or I/O error.

Every option can also be set through an environment variable named
``STOKESLAB_<OPTION>`` (upper case, dashes as underscores, e.g.
``STOKESLAB_MODE=pseudo``). Precedence: command line, then environment,
then ``--config`` file, then built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import (
    PRESETS,
    ConfigError,
    check_schema,
    forcing_from_json,
    load_json,
    sequence_config,
    shape_from_json,
)
from .fields import MacField, VertexField, inner, restrict
from .forcing import RECIPES
from .geometry import BcMode, Grid, Policy, components, rasterize
from .harness import run_experiment, slit_discrimination
from .leray import PROJECTION_TOL, is_in_solenoidal, project
from .resolvents import (
    LaplaceProblem,
    StokesProblem,
    laplace_resolvent,
    laplace_system,
    stokes_resolvent,
    stokes_resolvent_streamfn,
    stokes_system,
)
from .solver import AssemblyError, ConvergenceError

ENV_PREFIX = "STOKESLAB_"
OPERATORS = ("laplace", "vector-laplace", "stokes")
log = logging.getLogger("stokeslab")


class UsageError(Exception):
    pass


# Parser ------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON file with option values (schema 1)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="seed for the 'random' right-hand side")
    p.add_argument("--threads", type=int, default=1, help="worker threads for independent levels")
    p.add_argument("--timings", action="store_true", help="record wall-clock seconds (outputs stop being reproducible)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _domain_args(p):
    p.add_argument("--domain-file", help="mask file (see stokeslab.io)")
    p.add_argument("--shape", help=f"preset ({', '.join(PRESETS)}) or shape JSON, used when no --domain-file")
    p.add_argument("--n", type=int, default=32, help="cells per side for --shape")
    p.add_argument("--policy", choices=[m.value for m in Policy], default="center")


def _solver_args(p):
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--maxit", type=int, default=None)
    p.add_argument("--precond", choices=["none", "jacobi", "block"], default="none")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="stokeslab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shapes", parents=[common], help="rasterize a shape and write a mask file")
    _domain_args(p)
    p.add_argument("--name", help="output file stem (default: preset name or 'shape')")
    p.add_argument("--list", action="store_true", help="list presets and exit")

    rhs_help = f"recipe ({', '.join(RECIPES + ('random',))}), forcing JSON, or field CSV path"
    p = sub.add_parser("solve", parents=[common], help="one resolvent solve")
    _domain_args(p)
    _solver_args(p)
    p.add_argument("--operator", choices=OPERATORS, default="stokes")
    p.add_argument("--mode", choices=[m.value for m in BcMode], default="weak")
    p.add_argument("--rhs", default="constant", help=rhs_help)
    p.add_argument("--project-rhs", action="store_true", help="project the forcing before a Stokes solve")
    p.add_argument("--oracle", action="store_true", help="cross-check with an independent method")
    p.add_argument("--dump-matrix", action="store_true", help="also write the system matrix")

    p = sub.add_parser("project", parents=[common], help="solenoidal/gradient decomposition")
    _domain_args(p)
    p.add_argument("--tol", type=float, default=PROJECTION_TOL)
    p.add_argument("--mode", choices=[m.value for m in BcMode], default="weak")
    p.add_argument("--rhs", default="gradient", help=rhs_help)
    p.add_argument("--check-idempotent", action="store_true", help="project twice and report the change")

    p = sub.add_parser("sequence", parents=[common], help="domain-sequence experiment from a JSON config")
    p.add_argument("experiment", nargs="?", help="experiment JSON (alternative to --config)")

    p = sub.add_parser("dump", parents=[common], help="write an assembled matrix, a mask or a sampled field")
    _domain_args(p)
    p.add_argument("--what", choices=["matrix", "mask", "field"], default="matrix")
    p.add_argument("--operator", choices=OPERATORS, default="stokes")
    p.add_argument("--mode", choices=[m.value for m in BcMode], default="weak")
    p.add_argument("--rhs", default="constant", help=f"field to sample for --what field; {rhs_help}")
    return parser


def _subparsers(parser):
    for a in parser._actions:
        if isinstance(a, argparse._SubParsersAction):
            return a.choices
    return {}


def _env_name(dest: str) -> str:
    return ENV_PREFIX + dest.upper()


def _apply_defaults(sp: argparse.ArgumentParser, values: dict, source: str):
    """Override option defaults; string values go through the option's type as argv would."""
    actions = {a.dest: a for a in sp._actions if a.option_strings}
    for key, raw in values.items():
        a = actions[key]
        if isinstance(a, argparse._StoreTrueAction):
            if isinstance(raw, str):
                low = raw.strip().lower()
                if low not in ("1", "0", "true", "false", "yes", "no", ""):
                    raise UsageError(f"{source}: {key} expects a boolean, got {raw!r}")
                raw = low in ("1", "true", "yes")
            a.default = bool(raw)
            continue
        if raw is not None:
            if a.type is not None:
                try:
                    raw = a.type(raw)
                except (TypeError, ValueError):
                    raise UsageError(f"{source}: invalid value {raw!r} for {key}") from None
            if a.choices is not None and raw not in a.choices:
                raise UsageError(f"{source}: invalid value {raw!r} for {key} (choose from {', '.join(a.choices)})")
        a.default = raw


def _env_values(sp) -> dict:
    out = {}
    for a in sp._actions:
        if a.option_strings and a.dest != "help":
            v = os.environ.get(_env_name(a.dest))
            if v is not None:
                out[a.dest] = v
    return out


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    sp = _subparsers(parser)[args.command]
    env = _env_values(sp)
    _apply_defaults(sp, env, "environment")
    args = parser.parse_args(argv)
    if args.config and args.command != "sequence":
        doc = load_json(args.config)
        check_schema(doc, args.config)
        allowed = {a.dest for a in sp._actions if a.option_strings} - {"help", "config"}
        values = {k.replace("-", "_"): v for k, v in doc.items() if k != "schema"}
        extra = sorted(set(values) - allowed)
        if extra:
            raise ConfigError(f"{args.config}: unknown key(s) {', '.join(extra)}")
        _apply_defaults(sp, values, args.config)
        _apply_defaults(sp, env, "environment")
        args = parser.parse_args(argv)
    return args


# Helpers -----------------------------------------------------------------------


def _mask(args):
    if args.domain_file:
        try:
            return io.read_mask(args.domain_file)
        except OSError as exc:
            raise UsageError(f"--domain-file: cannot read {args.domain_file}: {exc.strerror}") from None
        except ValueError as exc:
            raise UsageError(f"--domain-file: {exc}") from None
    if not args.shape:
        raise UsageError("give --domain-file or --shape")
    text = args.shape
    doc = json.loads(text) if text.lstrip().startswith("{") else text
    shape = shape_from_json(doc, "--shape")
    lo = shape.bbox()
    grid = Grid((min(0.0, lo[0]), min(0.0, lo[1])), max(1.0, lo[2] - min(0.0, lo[0]), lo[3] - min(0.0, lo[1])) / args.n,
                args.n, args.n)
    try:
        return rasterize(shape, grid, Policy(args.policy))
    except ValueError as exc:
        raise UsageError(f"--shape: {exc}") from None


def _rhs(args, grid: Grid, scalar: bool):
    spec = args.rhs
    if spec == "random":
        rng = np.random.default_rng(args.seed)
        if scalar:
            return VertexField(grid, rng.standard_normal(grid.shape_vertices))
        return MacField(grid, rng.standard_normal(grid.shape_u), rng.standard_normal(grid.shape_v))
    if spec in RECIPES or spec.lstrip().startswith("{"):
        doc = json.loads(spec) if spec.lstrip().startswith("{") else spec
        f = forcing_from_json(doc, "--rhs")
        try:
            return f.scalar(grid) if scalar else f.vector(grid)
        except ValueError as exc:
            raise UsageError(f"--rhs: {exc}") from None
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"--rhs: {spec!r} is neither a recipe nor an existing file")
    try:
        return io.read_vertex_field(path, grid) if scalar else io.read_mac_field(path, grid)
    except ValueError as exc:
        raise UsageError(f"--rhs: {exc}") from None


def _stats(stats, timings) -> dict:
    d = {"iterations": stats.iterations, "residual": stats.residual}
    if timings:
        d["seconds"] = stats.seconds
    return d


def _json(obj) -> str:
    def clean(x):
        if isinstance(x, float) and not math.isfinite(x):
            return None
        if isinstance(x, dict):
            return {k: clean(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [clean(v) for v in x]
        if isinstance(x, np.generic):
            return x.item()
        return x

    return json.dumps(clean(obj), indent=2, sort_keys=True) + "\n"


def _rel(a, b) -> float:
    nb = b.norm()
    return (a - b).norm() / nb if nb > 0 else (a - b).norm()


# Commands ----------------------------------------------------------------------


def cmd_shapes(args) -> int:
    if args.list:
        for name, shape in PRESETS.items():
            print(f"{name}: {shape!r}")
        return 0
    mask = _mask(args)
    name = args.name or (args.shape if args.shape in PRESETS else "shape")
    path = io.write_mask(Path(args.out) / f"{name}.mask", mask)
    print(f"{path}: {mask.grid.nx}x{mask.grid.ny} cells={mask.n_cells} slit_faces={int(mask.slit_u.sum() + mask.slit_v.sum())}")
    return 0


def cmd_solve(args) -> int:
    mask = _mask(args)
    mode = BcMode(args.mode)
    out = Path(args.out)
    precond = None if args.precond == "none" else args.precond
    scalar = args.operator == "laplace"
    f = _rhs(args, mask.grid, scalar)
    summary = {"operator": args.operator, "mode": mode.value, "cells": mask.n_cells}
    if args.operator == "stokes":
        problem = StokesProblem(mask, mode, restrict(f, mask, mode), project_rhs=args.project_rhs)
        sol = stokes_resolvent(problem, tol=args.tol, maxit=args.maxit, precond=precond)
        io.write_fields(out / "solution.csv", sol.velocity, sol.pressure)
        summary["solver"] = _stats(sol.stats, args.timings)
        summary["norm"] = sol.velocity.norm()
        if args.oracle:
            alt = stokes_resolvent_streamfn(problem, tol=min(args.tol, 1e-10), maxit=args.maxit)
            summary["oracle"] = "streamfunction"
            summary["oracle_agreement"] = _rel(alt.velocity, sol.velocity)
        system = stokes_system(mask, mode)[0] if args.dump_matrix else None
    else:
        problem = LaplaceProblem(mask, mode, restrict(f, mask, mode))
        u, stats = laplace_resolvent(problem, tol=args.tol, maxit=args.maxit, precond=precond if precond != "block" else "jacobi")
        io.write_fields(out / "solution.csv", u)
        summary["solver"] = _stats(stats, args.timings)
        summary["norm"] = u.norm()
        if args.oracle:
            alt, _ = laplace_resolvent(problem, method="direct")
            summary["oracle"] = "direct"
            summary["oracle_agreement"] = _rel(alt, u)
        system = laplace_system(mask, mode, vector=not scalar)[0] if args.dump_matrix else None
    if system is not None:
        io.write_matrix(out / "matrix.mtx", system.matrix)
    io.atomic_write(out / "stats.json", _json(summary))
    if args.oracle and summary["oracle_agreement"] > 1e-6:
        log.error("oracle disagreement %.3e", summary["oracle_agreement"])
        return 1
    return 0


def cmd_project(args) -> int:
    mask = _mask(args)
    mode = BcMode(args.mode)
    out = Path(args.out)
    f = _rhs(args, mask.grid, scalar=False)
    dec = project(f, mask, mode, tol=args.tol)
    check = is_in_solenoidal(dec.solenoidal, mask, mode, distance=False)
    fr = restrict(f, mask, mode)
    scale = max(fr.norm(), np.finfo(float).tiny)
    summary = {
        "mode": mode.value,
        "components": components(mask, blocking_slits=mode is BcMode.WEAK)[0],
        "norm_input": fr.norm(),
        "norm_solenoidal": dec.solenoidal.norm(),
        "norm_gradient": dec.gradient.norm(),
        "orthogonality": abs(inner(dec.solenoidal, dec.gradient)) / scale**2,
        "div_defect": check.div_defect / scale,
        "solver": _stats(dec.stats, args.timings),
    }
    if args.check_idempotent:
        again = project(dec.solenoidal, mask, mode, tol=args.tol).solenoidal
        summary["idempotence"] = (again - dec.solenoidal).norm() / scale
    io.write_fields(out / "solenoidal.csv", dec.solenoidal)
    io.write_fields(out / "gradient.csv", dec.gradient, dec.potential)
    io.atomic_write(out / "stats.json", _json(summary))
    return 0


def cmd_sequence(args) -> int:
    path = args.experiment or args.config
    if not path:
        raise UsageError("sequence needs an experiment JSON (positional or --config)")
    cfg = sequence_config(load_json(path), threads=args.threads)
    out = Path(args.out)
    chk = cfg.check
    failures = []
    if cfg.kind == "discrimination":
        reports = [
            slit_discrimination(n, cfg.shape, cfg.forcing, tol=cfg.tol, precond=cfg.precond) for n in cfg.sizes
        ]
        cols = ["n", "delta", "norm_weak", "norm_pseudo", "slit_flux_weak", "slit_flux_pseudo",
                "increasing_match", "decreasing_match"]
        lines = [",".join(cols)] + [",".join(repr(float(getattr(r, c))) if c != "n" else str(r.n) for c in cols) for r in reports]
        io.atomic_write(out / "report.csv", "\n".join(lines) + "\n")
        io.atomic_write(
            out / "report.svg",
            io.svg_plot({"delta": ([r.n for r in reports], [r.delta for r in reports])},
                        title="weak vs pseudo gap", xlabel="cells per side", ylabel="log10 delta"),
        )
        deltas = np.array([r.delta for r in reports])
        variation = float((deltas.max() - deltas.min()) / deltas.max()) if deltas.max() > 0 else 0.0
        if chk.delta_min is not None and not np.all(deltas > chk.delta_min):
            failures.append(f"delta not above {chk.delta_min}")
        if chk.delta_variation_max is not None and variation >= chk.delta_variation_max:
            failures.append(f"delta variation {variation:.3g} >= {chk.delta_variation_max}")
        if chk.match_max is not None:
            worst = max(max(r.increasing_match, r.decreasing_match) for r in reports)
            if worst > chk.match_max:
                failures.append(f"limit match {worst:.3e} > {chk.match_max}")
        summary = {"kind": "discrimination", "delta": deltas.tolist(), "delta_variation": variation,
                   "passed": not failures, "failures": failures}
    else:
        rep = run_experiment(cfg.spec)
        io.atomic_write(out / "report.csv", io.format_report(rep, timings=args.timings))
        io.atomic_write(out / "report.svg", io.report_svg(rep))
        for mode in rep.families:
            errs = rep.errors(mode)
            if chk.monotone and not rep.monotone(mode):
                failures.append(f"{mode.value}: errors not monotone")
            if chk.strict and not rep.strictly_decreasing(mode):
                failures.append(f"{mode.value}: errors not strictly decreasing")
            if chk.final_error_max is not None and errs[-1] > chk.final_error_max:
                failures.append(f"{mode.value}: final error {errs[-1]:.3e} > {chk.final_error_max}")
            if chk.floor_factor is not None and rep.floor is not None and errs[-1] > chk.floor_factor * rep.floor:
                failures.append(f"{mode.value}: final error {errs[-1]:.3e} > {chk.floor_factor} x floor {rep.floor:.3e}")
        summary = {
            "kind": "convergence",
            "operator": rep.operator,
            "direction": rep.direction.value,
            "limit_mode": rep.limit_mode.value,
            "floor": rep.floor,
            "reference_norm": rep.reference_norm,
            "errors": {m.value: rep.errors(m).tolist() for m in rep.families},
            "passed": not failures,
            "failures": failures,
        }
    io.atomic_write(out / "report.json", _json(summary))
    for msg in failures:
        log.error("assertion failed: %s", msg)
    return 0 if not failures else 1


def cmd_dump(args) -> int:
    mask = _mask(args)
    mode = BcMode(args.mode)
    out = Path(args.out)
    if args.what == "mask":
        io.write_mask(out / "domain.mask", mask)
        return 0
    if args.what == "field":
        f = _rhs(args, mask.grid, scalar=args.operator == "laplace")
        io.write_fields(out / "field.csv", restrict(f, mask, mode))
        return 0
    if args.operator == "stokes":
        system = stokes_system(mask, mode)[0]
    else:
        system = laplace_system(mask, mode, vector=args.operator == "vector-laplace")[0]
    io.write_matrix(out / "matrix.mtx", system.matrix)
    meta = {"operator": args.operator, "mode": mode.value, "n": system.n, "nnz": int(system.matrix.nnz),
            "symmetry": system.symmetry.value, "nullspace_dim": len(system.nullspace)}
    io.atomic_write(out / "matrix.json", _json(meta))
    return 0


COMMANDS = {"shapes": cmd_shapes, "solve": cmd_solve, "project": cmd_project, "sequence": cmd_sequence, "dump": cmd_dump}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    logging.basicConfig(level=logging.WARNING, format="stokeslab: %(message)s", stream=sys.stderr)
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse already printed its message
        return int(exc.code or 0)
    except (UsageError, ConfigError) as exc:
        print(f"stokeslab: error: {exc}", file=sys.stderr)
        return 2
    if args.verbose:
        log.setLevel(logging.INFO)
    try:
        return COMMANDS[args.command](args)
    except (ConvergenceError, AssemblyError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"stokeslab: numerical failure: {exc}", file=sys.stderr)
        return 1
    except (UsageError, ConfigError, json.JSONDecodeError) as exc:
        print(f"stokeslab: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"stokeslab: I/O error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"stokeslab: error: {exc}", file=sys.stderr)
        return 2
