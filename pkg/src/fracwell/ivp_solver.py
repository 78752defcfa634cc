"""Caputo initial value problems via their Volterra integral form.

The problem ``D^alpha y = f(t, y)``, ``y^(k)(a) = y_k`` is solved as

    y(t) = sum_k y_k (t-a)^k / k! + 1/Gamma(alpha) int_a^t (t-s)^(alpha-1) f(s, y(s)) ds

with a product-rectangle predictor and product-trapezoid corrector on a
uniform grid.  The corrector is iterated until the implicit node equation is
satisfied to a tenth of ``tol_residual``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import BlowUpError, ConvergenceError, CoverageError, DomainError
from .problem import FractionalIVP, Trajectory, make_uniform_grid
from .quadrature import UniformWeights, node_weights
from .special_functions import mittag_leffler

log = logging.getLogger(__name__)

BLOW_UP = 1e12
MAX_CORRECTOR_PASSES = 200


@dataclass(frozen=True)
class SolverConfig:
    n_steps: int = 1024
    corrector_iterations: int = 1
    tol_residual: float = 1e-8

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError(f"n_steps must be a positive integer, got {self.n_steps!r}")
        if int(self.corrector_iterations) != self.corrector_iterations or self.corrector_iterations < 1:
            raise DomainError(
                f"corrector_iterations must be >= 1, got {self.corrector_iterations!r}"
            )
        if not (self.tol_residual > 0 and math.isfinite(self.tol_residual)):
            raise DomainError(f"tol_residual must be > 0, got {self.tol_residual!r}")


def taylor_part(p: FractionalIVP, t):
    """Initial-value polynomial ``sum_k y_k (t-a)^k / k!``."""
    dt = np.asarray(t, dtype=float) - p.a
    out = np.zeros_like(dt)
    for k, yk in enumerate(p.init):
        out = out + yk * dt**k / math.factorial(k)
    return out


def volterra_rhs(p: FractionalIVP, traj: Trajectory, t: float) -> float:
    """Right-hand side of the Volterra equation at ``t`` using ``traj`` as ``y``.

    The memory integral is evaluated with product-trapezoid weights on the
    nodes of ``traj`` inside ``[a, t]``, i.e. exactly for the piecewise-linear
    interpolant of ``s -> f(s, traj(s))``.
    """
    scale = max(abs(p.a), abs(p.T), 1.0)
    eps = 1e-12 * scale
    if traj.start > p.a + eps or traj.end < t - eps or t < p.a - eps:
        raise CoverageError(
            f"trajectory [{traj.start!r}, {traj.end!r}] does not span [{p.a!r}, {t!r}]"
        )
    t = min(max(t, p.a), traj.end)
    inside = (traj.nodes > p.a) & (traj.nodes < t)
    s = np.concatenate(([p.a], traj.nodes[inside], [t]))
    if s[-1] == s[0]:
        return float(taylor_part(p, t))
    ys = np.interp(s, traj.nodes, traj.values)
    fs = np.asarray(p.rhs(s, ys), dtype=float)
    w = node_weights(s, t, p.alpha)
    integral = float(np.dot(w, fs)) / math.gamma(p.alpha)
    return float(taylor_part(p, t)) + integral


def solve_ivp(p: FractionalIVP, cfg: SolverConfig | None = None) -> Trajectory:
    """Solve ``p`` on ``make_uniform_grid(p.a, p.T, cfg.n_steps)``.

    Raises
    ------
    BlowUpError
        If a value exceeds ``1e12`` in magnitude or is not finite.
    ConvergenceError
        If the corrector fails to settle within ``MAX_CORRECTOR_PASSES``.
    """
    cfg = cfg or SolverConfig()
    n = int(cfg.n_steps)
    nodes = make_uniform_grid(p.a, p.T, n)
    h = (p.T - p.a) / n
    wts = UniformWeights(n, h, p.alpha)
    g = math.gamma(p.alpha)
    diag = wts.diagonal() / g
    tol = 0.1 * cfg.tol_residual

    base = taylor_part(p, nodes)
    y = np.empty(n + 1)
    f = np.empty(n + 1)
    y[0] = p.init[0]
    f[0] = p.rhs(nodes[0], y[0])
    _guard(y[0], f[0], 0)

    for i in range(1, n + 1):
        ti = nodes[i]
        pred = base[i] + wts.rectangle(i, f) / g
        hist = base[i] + wts.history(i, f) / g
        yi = pred
        for k in range(MAX_CORRECTOR_PASSES):
            new = hist + diag * p.rhs(ti, yi)
            change = abs(new - yi)
            yi = new
            if not math.isfinite(yi):
                break
            if k + 1 >= cfg.corrector_iterations and change <= tol * max(1.0, abs(yi)):
                break
        else:
            raise ConvergenceError(
                f"corrector did not settle at node {i} (t={ti!r}); last change {change:.3e}"
            )
        y[i] = yi
        f[i] = p.rhs(ti, yi)
        _guard(yi, f[i], i)

    return Trajectory(nodes, y)


def _guard(y: float, fy: float, i: int) -> None:
    if not (math.isfinite(y) and math.isfinite(fy)):
        raise BlowUpError(f"non-finite solution value at node {i}", index=i)
    if abs(y) > BLOW_UP:
        raise BlowUpError(f"|y| = {abs(y):.3e} exceeds {BLOW_UP:g} at node {i}", index=i)


def residual_check(p: FractionalIVP, traj: Trajectory) -> float:
    """Largest nodal defect ``|y(t_i) - volterra_rhs(p, traj, t_i)|``."""
    res = 0.0
    for ti, yi in zip(traj.nodes, traj.values):
        res = max(res, abs(yi - volterra_rhs(p, traj, float(ti))))
    return res


def ml_linear_solution(alpha: float, a: float, y0: float, lam: float, t: float) -> float:
    """Exact solution ``y0 * E_alpha(lam (t-a)^alpha)`` of ``D^alpha y = lam y``."""
    if t < a:
        raise DomainError(f"need t >= a, got t={t!r}, a={a!r}")
    if not 0 < alpha <= 2:
        raise DomainError(f"alpha must lie in (0, 2], got {alpha!r}")
    return y0 * mittag_leffler(alpha, lam * (t - a) ** alpha)


def error_estimate(p: FractionalIVP, cfg: SolverConfig, traj: Trajectory | None = None) -> float:
    """Sup-norm gap between solutions on ``n`` and ``n/2`` steps at shared nodes.

    Requires an even ``n_steps``.  For a convergent scheme this bounds the
    error of the coarser solve up to a constant factor.
    """
    n = cfg.n_steps
    if n % 2:
        raise DomainError("error_estimate needs an even n_steps")
    fine = traj if traj is not None else solve_ivp(p, cfg)
    coarse = solve_ivp(p, SolverConfig(n // 2, cfg.corrector_iterations, cfg.tol_residual))
    return float(np.max(np.abs(fine.values[::2] - coarse.values)))
