"""Command-line front end.

Usage::

    fracwell <command> --config CONFIG.json --out PATH [--format csv|json|both]

where ``<command>`` is one of ``ml``, ``solve-ivp``, ``solve-tvp`` or
``sweep``.  Exit status is 0 on success, 1 on configuration errors and 2 when
a solver fails to converge.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError, ConvergenceError, FracwellError
from .ivp_solver import SolverConfig, residual_check, solve_ivp
from .problem import REGISTRY, UNBOUNDED, FractionalIVP, FractionalTVP, RhsSpec
from .special_functions import mittag_leffler
from .sweep import MODES, TVP_MODES, SweepPlan, dyadic_deltas, run_sweep
from .tvp_solver import solve_tvp_fredholm, solve_tvp_shooting

log = logging.getLogger("fracwell")

COMMANDS = ("ml", "solve-ivp", "solve-tvp", "sweep")
FORMATS = ("csv", "json", "both")
TVP_METHODS = ("fredholm", "shooting", "both")

SOLVER_DEFAULTS = {"n_steps": 1024, "corrector_iterations": 1, "tol_residual": 1e-8}
TOP_KEYS = {"command", "problem", "solver", "sweep", "seed"}
RHS_KEYS = {"name", "params", "lipschitz_L", "bound_M"}
SWEEP_KEYS = {"mode", "deltas", "tvp_method"}

_NUM = {"type": "number"}
_NUM_OR_NULL = {"type": ["number", "null"]}
SUMMARY_SCHEMAS: dict[str, dict] = {
    "ml": {
        "type": "object",
        "required": ["command", "alpha", "values"],
        "properties": {
            "command": {"const": "ml"},
            "alpha": _NUM,
            "values": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["z", "value"],
                    "properties": {"z": _NUM, "value": _NUM},
                    "additionalProperties": False,
                },
            },
        },
        "additionalProperties": False,
    },
    "solve-ivp": {
        "type": "object",
        "required": ["command", "alpha", "a", "T", "n_steps", "y_final", "residual"],
        "properties": {
            "command": {"const": "solve-ivp"},
            "alpha": _NUM, "a": _NUM, "T": _NUM,
            "n_steps": {"type": "integer", "minimum": 1},
            "y_final": _NUM, "residual": _NUM,
        },
        "additionalProperties": False,
    },
    "solve-tvp": {
        "type": "object",
        "required": ["command", "method", "results"],
        "properties": {
            "command": {"const": "solve-tvp"},
            "method": {"enum": list(TVP_METHODS)},
            "max_difference": _NUM,
            "results": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["method", "recovered_initial", "iterations", "residual"],
                    "properties": {
                        "method": {"enum": ["fredholm", "shooting"]},
                        "recovered_initial": _NUM,
                        "iterations": {"type": "integer", "minimum": 0},
                        "residual": _NUM,
                    },
                    "additionalProperties": False,
                },
            },
        },
        "additionalProperties": False,
    },
    "sweep": {
        "type": "object",
        "required": [
            "mode", "predicted_exponent", "fitted_exponent", "fit_r2", "comparison_interval",
        ],
        "properties": {
            "mode": {"enum": list(MODES)},
            "predicted_exponent": _NUM,
            "fitted_exponent": _NUM,
            "fit_r2": {"type": "number", "minimum": 0, "maximum": 1},
            "comparison_interval": {
                "type": "array", "items": _NUM, "minItems": 2, "maxItems": 2,
            },
        },
        "additionalProperties": False,
    },
}

SWEEP_COLUMNS = (
    "delta", "sup_diff", "bound_d1", "bound_d2", "bound_envelope", "lower_bound", "status",
)


@dataclass(frozen=True)
class RunConfig:
    command: str
    problem: dict
    solver: SolverConfig = field(default_factory=SolverConfig)
    sweep: dict | None = None
    output_path: str | None = None
    format: str = "csv"
    seed: int = 0
    method: str = "fredholm"


# -- validation --------------------------------------------------------------

def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _unknown(d: dict, allowed: set, where: str, errs: list[str]) -> None:
    for k in sorted(set(d) - allowed):
        errs.append(f"{where}: unknown field {k!r}")


def _need_num(d: dict, key: str, where: str, errs: list[str]):
    if key not in d:
        errs.append(f"{where}.{key}: required field missing")
        return None
    if not _is_num(d[key]):
        errs.append(f"{where}.{key}: must be a finite number, got {d[key]!r}")
        return None
    return float(d[key])


def _check_rhs(rhs, errs: list[str]) -> None:
    where = "problem.rhs"
    if not isinstance(rhs, dict):
        errs.append(f"{where}: must be an object")
        return
    _unknown(rhs, RHS_KEYS, where, errs)
    name = rhs.get("name")
    if name not in REGISTRY:
        errs.append(
            f"{where}.name: unknown rhs {name!r}; registry entries: {', '.join(REGISTRY)}"
        )
        return
    params = rhs.get("params", {})
    if not isinstance(params, dict):
        errs.append(f"{where}.params: must be an object")
        params = {}
    for k, v in params.items():
        if not _is_num(v):
            errs.append(f"{where}.params.{k}: must be a finite number")
    for k in REGISTRY[name].required:
        if k not in params:
            errs.append(f"{where}.params.{k}: required by rhs {name!r}")
    if "lipschitz_L" in rhs and not (_is_num(rhs["lipschitz_L"]) and rhs["lipschitz_L"] >= 0):
        errs.append(f"{where}.lipschitz_L: must be a number >= 0")
    if "bound_M" in rhs:
        m = rhs["bound_M"]
        if not (m == UNBOUNDED or (_is_num(m) and m >= 0)):
            errs.append(f"{where}.bound_M: must be a number >= 0 or {UNBOUNDED!r}")


def _check_problem(problem, kind: str, errs: list[str]) -> None:
    """``kind`` is 'ivp' or 'tvp'."""
    if not isinstance(problem, dict):
        errs.append("problem: must be an object")
        return
    allowed = {"alpha", "a", "T", "rhs"} | ({"init"} if kind == "ivp" else {"y_star"})
    _unknown(problem, allowed, "problem", errs)
    alpha = _need_num(problem, "alpha", "problem", errs)
    a = _need_num(problem, "a", "problem", errs)
    T = _need_num(problem, "T", "problem", errs)
    if alpha is not None:
        if alpha <= 0:
            errs.append("problem.alpha: must be > 0")
        elif kind == "tvp" and not alpha < 1:
            errs.append(
                f"problem.alpha: terminal value problems require 0 < alpha < 1, got {alpha:g}"
            )
    if a is not None and T is not None and not a < T:
        errs.append("problem: need a < T")
    if kind == "ivp":
        init = problem.get("init")
        if not isinstance(init, list) or not all(_is_num(v) for v in init):
            errs.append("problem.init: must be a list of numbers")
        elif alpha is not None and alpha > 0 and len(init) != math.ceil(alpha):
            errs.append(f"problem.init: init length must equal ceil(alpha)={math.ceil(alpha)}")
    else:
        _need_num(problem, "y_star", "problem", errs)
    if "rhs" not in problem:
        errs.append("problem.rhs: required field missing")
    else:
        _check_rhs(problem["rhs"], errs)


def _check_solver(solver, errs: list[str]) -> SolverConfig | None:
    if solver is None:
        solver = {}
    if not isinstance(solver, dict):
        errs.append("solver: must be an object")
        return None
    _unknown(solver, set(SOLVER_DEFAULTS), "solver", errs)
    vals = {**SOLVER_DEFAULTS, **solver}
    ok = True
    for k in ("n_steps", "corrector_iterations"):
        v = vals[k]
        if not (isinstance(v, int) and not isinstance(v, bool) and v >= 1):
            errs.append(f"solver.{k}: must be an integer >= 1")
            ok = False
    if not (_is_num(vals["tol_residual"]) and vals["tol_residual"] > 0):
        errs.append("solver.tol_residual: must be a number > 0")
        ok = False
    return SolverConfig(**vals) if ok else None


def _check_sweep(sweep, errs: list[str]) -> None:
    if not isinstance(sweep, dict):
        errs.append("sweep: must be an object")
        return
    _unknown(sweep, SWEEP_KEYS, "sweep", errs)
    if sweep.get("mode") not in MODES:
        errs.append(f"sweep.mode: must be one of {', '.join(MODES)}")
    if "deltas" in sweep:
        d = sweep["deltas"]
        if not isinstance(d, list) or not all(_is_num(v) and v > 0 for v in d):
            errs.append("sweep.deltas: must be a list of positive numbers")
        elif len(d) < 4 or any(b >= a for a, b in zip(d, d[1:])):
            errs.append("sweep.deltas: need at least 4 strictly decreasing entries")
    if sweep.get("tvp_method", "fredholm") not in ("fredholm", "shooting"):
        errs.append("sweep.tvp_method: must be 'fredholm' or 'shooting'")


def parse_config(
    text: str,
    command: str | None = None,
    output_path: str | None = None,
    fmt: str = "csv",
    method: str = "fredholm",
) -> RunConfig:
    """Validate a JSON run configuration, reporting every violation at once."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from None
    if not isinstance(doc, dict):
        raise ConfigError(["config: top level must be a JSON object"])

    errs: list[str] = []
    _unknown(doc, TOP_KEYS, "config", errs)
    cmd = doc.get("command", command)
    if command is not None and doc.get("command", command) != command:
        errs.append(f"command: config says {doc['command']!r} but {command!r} was requested")
    if cmd not in COMMANDS:
        errs.append(f"command: must be one of {', '.join(COMMANDS)}, got {cmd!r}")
    if fmt not in FORMATS:
        errs.append(f"format: must be one of {', '.join(FORMATS)}")
    if method not in TVP_METHODS:
        errs.append(f"method: must be one of {', '.join(TVP_METHODS)}")
    seed = doc.get("seed", 0)
    if not (isinstance(seed, int) and not isinstance(seed, bool) and seed >= 0):
        errs.append("seed: must be an unsigned integer")

    problem = doc.get("problem")
    solver = _check_solver(doc.get("solver"), errs)
    sweep = doc.get("sweep")
    if cmd == "ml":
        if not isinstance(problem, dict):
            errs.append("problem: must be an object")
        else:
            _unknown(problem, {"alpha", "z"}, "problem", errs)
            alpha = _need_num(problem, "alpha", "problem", errs)
            if alpha is not None and alpha <= 0:
                errs.append("problem.alpha: must be > 0")
            z = problem.get("z")
            zs = z if isinstance(z, list) else [z]
            if not zs or not all(_is_num(v) for v in zs):
                errs.append("problem.z: must be a number or a list of numbers")
    elif cmd == "solve-ivp":
        _check_problem(problem, "ivp", errs)
    elif cmd == "solve-tvp":
        _check_problem(problem, "tvp", errs)
    elif cmd == "sweep":
        if sweep is None:
            errs.append("sweep: required for the sweep command")
        else:
            _check_sweep(sweep, errs)
        kind = "tvp" if isinstance(sweep, dict) and sweep.get("mode") in TVP_MODES else "ivp"
        _check_problem(problem, kind, errs)
    if cmd != "sweep" and sweep is not None:
        errs.append("sweep: only allowed for the sweep command")

    if errs:
        raise ConfigError(errs)
    return RunConfig(
        command=cmd, problem=problem, solver=solver, sweep=sweep,
        output_path=output_path, format=fmt, seed=seed, method=method,
    )


# -- building and running ----------------------------------------------------

def _rhs(d: dict) -> RhsSpec:
    return RhsSpec(d["name"], d.get("params", {}), d.get("lipschitz_L"), d.get("bound_M"))


def build_problem(cfg: RunConfig) -> FractionalIVP | FractionalTVP:
    p = cfg.problem
    if "y_star" in p:
        return FractionalTVP(p["alpha"], p["a"], p["T"], p["y_star"], _rhs(p["rhs"]))
    return FractionalIVP(p["alpha"], p["a"], p["T"], tuple(p["init"]), _rhs(p["rhs"]))


def fmt_num(x) -> str:
    if x is None:
        return ""
    x = float(x)
    return format(x, ".17g") if math.isfinite(x) else "nan"


def _csv(header: tuple[str, ...], rows) -> str:
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(v if isinstance(v, str) else fmt_num(v) for v in row) + "\n")
    return out.getvalue()


def _json_clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _json_clean(obj.item())
    return obj


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _execute(cfg: RunConfig) -> tuple[str, dict]:
    """Return ``(csv_text, summary)`` for ``cfg``."""
    if cfg.command == "ml":
        alpha = float(cfg.problem["alpha"])
        z = cfg.problem["z"]
        zs = [float(v) for v in (z if isinstance(z, list) else [z])]
        vals = [mittag_leffler(alpha, v) for v in zs]
        text = _csv(("alpha", "z", "value"), [(alpha, v, e) for v, e in zip(zs, vals)])
        return text, {
            "command": "ml", "alpha": alpha,
            "values": [{"z": v, "value": e} for v, e in zip(zs, vals)],
        }

    problem = build_problem(cfg)
    if cfg.command == "solve-ivp":
        traj = solve_ivp(problem, cfg.solver)
        text = _csv(("t", "y"), zip(traj.nodes, traj.values))
        return text, {
            "command": "solve-ivp", "alpha": problem.alpha, "a": problem.a, "T": problem.T,
            "n_steps": cfg.solver.n_steps, "y_final": float(traj.values[-1]),
            "residual": residual_check(problem, traj),
        }

    if cfg.command == "solve-tvp":
        methods = ("fredholm", "shooting") if cfg.method == "both" else (cfg.method,)
        sols = [
            (solve_tvp_fredholm if m == "fredholm" else solve_tvp_shooting)(problem, cfg.solver)
            for m in methods
        ]
        nodes = sols[0].traj.nodes
        summary = {
            "command": "solve-tvp", "method": cfg.method,
            "results": [
                {
                    "method": s.method, "recovered_initial": s.recovered_initial,
                    "iterations": s.iterations, "residual": s.residual,
                }
                for s in sols
            ],
        }
        if len(sols) == 1:
            text = _csv(("t", "y"), zip(nodes, sols[0].traj.values))
        else:
            text = _csv(
                ("t", "y_fredholm", "y_shooting"),
                zip(nodes, sols[0].traj.values, sols[1].traj.values),
            )
            summary["max_difference"] = float(
                np.max(np.abs(sols[0].traj.values - sols[1].traj.values))
            )
        return text, summary

    sw = cfg.sweep
    deltas = sw.get("deltas") or dyadic_deltas(problem.a, problem.T)
    plan = SweepPlan(problem, sw["mode"], tuple(deltas), cfg.solver, sw.get("tvp_method", "fredholm"))
    report = run_sweep(plan)
    rows = [
        (r.delta, r.sup_diff, r.bound_d1, r.bound_d2, r.bound_envelope, r.lower_bound, r.status)
        for r in report.rows
    ]
    return _csv(SWEEP_COLUMNS, rows), report.summary()


def run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    """Execute ``cfg`` and write its artifacts; returns the process exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        text, summary = _execute(cfg)
    except ConvergenceError as exc:
        print(f"fracwell: solver failed: {exc}", file=stderr)
        return 2
    except FracwellError as exc:
        print(f"fracwell: invalid problem: {exc}", file=stderr)
        return 1

    summary_text = json.dumps(_json_clean(summary), indent=2, allow_nan=False) + "\n"
    try:
        if cfg.output_path:
            out = Path(cfg.output_path)
            if cfg.format == "csv":
                write_atomic(out, text)
            elif cfg.format == "json":
                write_atomic(out, summary_text)
            else:
                write_atomic(out, text)
                write_atomic(out.with_suffix(".json"), summary_text)
    except OSError as exc:
        print(f"fracwell: cannot write output: {exc}", file=stderr)
        return 1
    if cfg.format in ("json", "both"):
        stdout.write(summary_text)
    elif not cfg.output_path:
        stdout.write(text)
    return 0


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracwell", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--out", help="output path (CSV, or JSON with --format json)")
    ap.add_argument("--format", default="csv", choices=FORMATS)
    ap.add_argument("--method", default="fredholm", choices=TVP_METHODS,
                    help="solve-tvp method")
    ap.add_argument("--alpha", type=float, help="ml: order (instead of --config)")
    ap.add_argument("--z", type=float, nargs="+", help="ml: argument(s)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            print(f"fracwell: cannot read config: {exc}", file=sys.stderr)
            return 1
    elif args.command == "ml" and args.alpha is not None and args.z:
        text = json.dumps({"command": "ml", "problem": {"alpha": args.alpha, "z": args.z}})
    else:
        print("fracwell: --config is required", file=sys.stderr)
        return 1
    try:
        cfg = parse_config(text, args.command, args.out, args.format, args.method)
    except ConfigError as exc:
        print("fracwell: configuration errors:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return 1
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
