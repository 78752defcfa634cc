"""Perturbation sweeps: measure how far solutions move and fit the decay rate.

Each sweep solves a base problem once, then one perturbed problem per
``delta``, and records the sup-norm difference on the comparison interval
appropriate for the mode:

==================  ======================  ==================  =========
mode                perturbation            interval            exponent
==================  ======================  ==================  =========
start_shift         a -> a + delta          [a + delta, T]      min(alpha, 1)
terminal_shift      T -> T + delta (TVP)    [a, T]              alpha
tvp_start_shift     a -> a + delta (TVP)    [a + delta, T]      alpha
alpha_shift         alpha -> alpha - delta  [a, T]              1
init_shift          y_0 -> y_0 + delta      [a, T]              1
rhs_scale           f -> f + delta          [a, T]              1
==================  ======================  ==================  =========
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np

from . import bounds
from .errors import ConvergenceError, DegenerateError, DomainError, FracwellError
from .ivp_solver import SolverConfig, solve_ivp
from .problem import (
    FractionalIVP,
    FractionalTVP,
    RhsSpec,
    Trajectory,
    trajectory_eval_many,
    working_rectangle_bound,
)
from .tvp_solver import solve_tvp_fredholm, solve_tvp_shooting

log = logging.getLogger(__name__)

IVP_MODES = ("start_shift", "alpha_shift", "init_shift", "rhs_scale")
TVP_MODES = ("terminal_shift", "tvp_start_shift")
MODES = IVP_MODES + TVP_MODES
MIN_ROWS = 4

Problem = Union[FractionalIVP, FractionalTVP]


def dyadic_deltas(a: float, T: float, first: int = 3, last: int = 8) -> tuple[float, ...]:
    """``(T - a) * 2**-k`` for ``k = first..last``."""
    return tuple((T - a) * 2.0**-k for k in range(first, last + 1))


@dataclass(frozen=True)
class SweepPlan:
    base: Problem
    mode: str
    deltas: tuple[float, ...]
    solver: SolverConfig = SolverConfig()
    tvp_method: str = "fredholm"

    def __post_init__(self):
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        if self.mode not in MODES:
            raise DomainError(f"unknown sweep mode {self.mode!r}; expected one of {MODES}")
        if self.mode in TVP_MODES and not isinstance(self.base, FractionalTVP):
            raise DomainError(f"mode {self.mode!r} needs a terminal value problem")
        if self.mode in IVP_MODES and not isinstance(self.base, FractionalIVP):
            raise DomainError(f"mode {self.mode!r} needs an initial value problem")
        if self.tvp_method not in ("fredholm", "shooting"):
            raise DomainError(f"unknown tvp_method {self.tvp_method!r}")
        d = np.asarray(self.deltas)
        if d.size < MIN_ROWS:
            raise DomainError(f"need at least {MIN_ROWS} deltas, got {d.size}")
        if np.any(d <= 0) or np.any(np.diff(d) >= 0):
            raise DomainError("deltas must be positive and strictly decreasing")
        if d[0] / d[-1] < 4.0:
            raise DomainError("deltas must span at least two dyadic decades")
        if self.solver.n_steps % 2:
            raise DomainError("sweeps need an even n_steps for the error estimate")
        _check_perturbable(self.base, self.mode, d[0])


def _check_perturbable(base: Problem, mode: str, dmax: float) -> None:
    if mode in ("start_shift", "tvp_start_shift") and not base.a + dmax < base.T:
        raise DomainError("largest start shift must keep a + delta < T")
    if mode == "alpha_shift":
        lo = base.alpha - dmax
        if lo <= 0 or math.ceil(lo) != math.ceil(base.alpha):
            raise DomainError(
                f"alpha_shift must keep ceil(alpha) = {math.ceil(base.alpha)}; "
                f"alpha - {dmax:g} = {lo:g} does not"
            )


@dataclass(frozen=True)
class SweepRow:
    delta: float
    sup_diff: float
    interval: tuple[float, float]
    error_estimate: float = float("nan")
    bound_d1: float | None = None
    bound_d2: float | None = None
    bound_envelope: float | None = None
    lower_bound: float | None = None
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class SweepReport:
    mode: str
    rows: tuple[SweepRow, ...]
    fitted_exponent: float
    fit_r2: float
    predicted_exponent: float
    comparison_interval: tuple[float, float]
    monotone: bool = True

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "predicted_exponent": self.predicted_exponent,
            "fitted_exponent": self.fitted_exponent,
            "fit_r2": self.fit_r2,
            "comparison_interval": list(self.comparison_interval),
        }


def sup_diff(y: Trajectory, y_tilde: Trajectory, lo: float, hi: float) -> float:
    """``max |y(t) - y_tilde(t)|`` over both node sets restricted to ``[lo, hi]``.

    Both trajectories are evaluated by linear interpolation; neither is
    evaluated outside ``[lo, hi]``.
    """
    if not lo <= hi:
        raise DomainError(f"empty comparison interval [{lo!r}, {hi!r}]")
    pts = np.concatenate((y.nodes, y_tilde.nodes, [lo, hi]))
    pts = np.unique(pts[(pts >= lo) & (pts <= hi)])
    return float(np.max(np.abs(trajectory_eval_many(y, pts) - trajectory_eval_many(y_tilde, pts))))


def fit_exponent(pairs: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares slope and R^2 of ``log(diff)`` against ``log(delta)``."""
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < MIN_ROWS or arr.shape[1] != 2:
        raise DegenerateError(f"need at least {MIN_ROWS} (delta, diff) pairs")
    d, e = arr[:, 0], arr[:, 1]
    if np.any(d <= 0) or np.any(e <= 0) or not np.all(np.isfinite(arr)):
        raise DegenerateError("deltas and diffs must be finite and > 0")
    if np.unique(d).size != d.size:
        raise DegenerateError("deltas must be distinct")
    x, y = np.log(d), np.log(e)
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(min(max(r2, 0.0), 1.0))


def predicted_exponent(base: Problem, mode: str) -> float:
    if mode == "start_shift":
        return min(base.alpha, 1.0)
    if mode in TVP_MODES:
        return float(base.alpha)
    return 1.0


def _steps_for(n: int, length: float, ref_length: float) -> int:
    # keep the step no finer than the base step; stay even for the error estimate
    m = int(math.floor(n * length / ref_length + 1e-9))
    m -= m % 2
    return max(m, 2)


def _perturb(plan: SweepPlan, delta: float) -> tuple[Problem, SolverConfig, tuple[float, float]]:
    base, cfg, mode = plan.base, plan.solver, plan.mode
    span = base.T - base.a
    if mode == "start_shift":
        at = base.a + delta
        p = replace(base, a=at)
        return p, replace(cfg, n_steps=_steps_for(cfg.n_steps, base.T - at, span)), (at, base.T)
    if mode == "tvp_start_shift":
        at = base.a + delta
        p = replace(base, a=at)
        return p, replace(cfg, n_steps=_steps_for(cfg.n_steps, base.T - at, span)), (at, base.T)
    if mode == "terminal_shift":
        tt = base.T + delta
        p = replace(base, T=tt)
        return p, replace(cfg, n_steps=_steps_for(cfg.n_steps, tt - base.a, span)), (base.a, base.T)
    if mode == "alpha_shift":
        return replace(base, alpha=base.alpha - delta), cfg, (base.a, base.T)
    if mode == "init_shift":
        init = (base.init[0] + delta,) + tuple(base.init[1:])
        return replace(base, init=init), cfg, (base.a, base.T)
    if mode == "rhs_scale":
        rhs = base.rhs.shifted(delta) if isinstance(base.rhs, RhsSpec) else replace(
            base.rhs, offset=base.rhs.offset + delta
        )
        return replace(base, rhs=rhs), cfg, (base.a, base.T)
    raise DomainError(f"unknown sweep mode {mode!r}")


def _solve(p: Problem, cfg: SolverConfig, tvp_method: str) -> Trajectory:
    if isinstance(p, FractionalTVP):
        solver = solve_tvp_fredholm if tvp_method == "fredholm" else solve_tvp_shooting
        return solver(p, cfg).traj
    return solve_ivp(p, cfg)


def _solve_with_estimate(p: Problem, cfg: SolverConfig, tvp_method: str) -> tuple[Trajectory, float]:
    fine = _solve(p, cfg, tvp_method)
    coarse = _solve(p, replace(cfg, n_steps=cfg.n_steps // 2), tvp_method)
    return fine, float(np.max(np.abs(fine.values[::2] - coarse.values)))


def _is_example_problem(p: FractionalIVP) -> bool:
    rhs = p.rhs
    return (
        isinstance(rhs, RhsSpec)
        and rhs.name == "linear"
        and rhs.params["lambda"] == 1.0
        and p.init[0] == 1.0
        and all(v == 0.0 for v in p.init[1:])
    )


def _start_shift_bounds(plan: SweepPlan, delta: float, trajs: Sequence[Trajectory]) -> dict:
    base = plan.base
    _, m = working_rectangle_bound(base.rhs, trajs)
    inp = bounds.ShiftBoundInputs(
        base.alpha, base.a, base.a + delta, base.T, base.rhs.lipschitz_L, m, base.init
    )
    out = {
        "bound_d1": bounds.d1_bound(inp),
        "bound_d2": bounds.d2_bound(inp),
        "bound_envelope": bounds.gronwall_envelope(inp),
    }
    if _is_example_problem(base):
        if base.alpha <= 1:
            out["lower_bound"] = bounds.example1_lower_bound(base.alpha, delta)
        else:
            out["lower_bound"] = bounds.example2_lower_bound(
                base.alpha, delta, base.T, base.a + delta
            )
    return out


def compute_row(plan: SweepPlan, delta: float, base_traj: Trajectory, base_err: float) -> SweepRow:
    """Solve the problem perturbed by ``delta`` and compare it with the base.

    ``delta = 0`` is accepted and should reproduce the base solution.
    """
    interval = (plan.base.a, plan.base.T)
    try:
        if delta == 0.0:
            pert, cfg = plan.base, plan.solver
        else:
            pert, cfg, interval = _perturb(plan, delta)
        traj, err = _solve_with_estimate(pert, cfg, plan.tvp_method)
        diff = sup_diff(base_traj, traj, *interval)
        extra = {}
        if plan.mode == "start_shift" and delta > 0:
            extra = _start_shift_bounds(plan, delta, (base_traj, traj))
        return SweepRow(delta, diff, interval, base_err + err, **extra)
    except FracwellError as exc:
        log.warning("sweep row delta=%g failed: %s", delta, exc)
        return SweepRow(delta, float("nan"), interval, status=f"failed: {exc}")


def _thread_count(threads: int | None) -> int:
    if threads is None:
        try:
            threads = int(os.environ.get("FRACWELL_THREADS", "0"))
        except ValueError:
            threads = 0
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def run_sweep(plan: SweepPlan, threads: int | None = None) -> SweepReport:
    """Run every row of ``plan`` and fit the decay exponent.

    Rows are independent and may run on up to ``threads`` worker threads
    (``FRACWELL_THREADS`` when ``None``, ``0`` meaning one per CPU); the report
    order always follows ``plan.deltas``.

    Raises
    ------
    ConvergenceError
        If the base solve fails or fewer than four rows survive.
    """
    base_traj, base_err = _solve_with_estimate(plan.base, plan.solver, plan.tvp_method)
    n_workers = min(_thread_count(threads), len(plan.deltas))
    if n_workers == 1:
        rows = [compute_row(plan, d, base_traj, base_err) for d in plan.deltas]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(lambda d: compute_row(plan, d, base_traj, base_err), plan.deltas))

    good = [r for r in rows if r.ok]
    if len(good) < MIN_ROWS:
        raise ConvergenceError(
            f"only {len(good)} of {len(rows)} sweep rows succeeded; need {MIN_ROWS}"
        )
    slope, r2 = fit_exponent([(r.delta, r.sup_diff) for r in good])
    diffs = [r.sup_diff for r in good]
    monotone = all(b <= a for a, b in zip(diffs, diffs[1:]))
    if not monotone:
        log.warning("sup_diff is not monotone in delta for mode %s", plan.mode)
    lo = min(r.interval[0] for r in rows)
    hi = max(r.interval[1] for r in rows)
    return SweepReport(
        plan.mode, tuple(rows), slope, r2, predicted_exponent(plan.base, plan.mode),
        (lo, hi), monotone,
    )


def zero_shift_diff(plan: SweepPlan) -> float:
    """Sup difference of the ``delta = 0`` row; should vanish up to solver tolerance."""
    base_traj = _solve(plan.base, plan.solver, plan.tvp_method)
    row = compute_row(plan, 0.0, base_traj, 0.0)
    if not row.ok:
        raise ConvergenceError(row.status)
    return row.sup_diff
