"""Terminal value problems ``D^alpha y = f(t, y)``, ``y(T) = y*``, ``0 < alpha < 1``.

Two independent solvers are provided so that each can check the other:

* :func:`solve_tvp_fredholm` iterates the Fredholm equation
  ``y(t) = y* + 1/Gamma(alpha) int_a^T G(t, s) f(s, y(s)) ds`` with a damped
  Picard map;
* :func:`solve_tvp_shooting` finds the initial value ``c`` for which the IVP
  solution hits ``y*`` at ``T``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, ConvergenceError, DomainError
from .ivp_solver import SolverConfig, solve_ivp
from .problem import FractionalIVP, FractionalTVP, Trajectory, make_uniform_grid
from .quadrature import UniformWeights, interval_integral

log = logging.getLogger(__name__)

DAMPING = 0.5
MAX_PICARD = 500
SHOOT_TOL = 1e-10
MAX_BRACKET_STEPS = 60


@dataclass(frozen=True)
class KernelQuery:
    t: float
    s: float
    T: float
    alpha: float


@dataclass(frozen=True)
class TvpSolution:
    traj: Trajectory
    recovered_initial: float
    method: str
    iterations: int
    residual: float = 0.0


def green_kernel(q: KernelQuery) -> float:
    """Two-branch kernel ``G(t, s)`` of the Fredholm formulation.

    Raises :class:`DomainError` on the singular lines ``s = t`` and ``s = T``;
    those must be integrated analytically.
    """
    t, s, T, alpha = q.t, q.s, q.T, q.alpha
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    if s >= T or s == t:
        raise DomainError(f"green_kernel is singular at s={s!r} (t={t!r}, T={T!r})")
    far = (T - s) ** (alpha - 1)
    if s > t:
        return -far
    return (t - s) ** (alpha - 1) - far


def kernel_abs_integral(t: float, a: float, T: float, alpha: float) -> float:
    """``1/Gamma(alpha) int_a^T |G(t, s)| ds`` via exact interval integrals.

    ``|G|`` keeps one sign on ``[a, t]`` and on ``[t, T]``, so the product rule
    with a constant integrand and ``t`` as a node is exact.
    """
    if not a <= t <= T:
        raise DomainError("need a <= t <= T")
    left = 0.0
    if t > a:
        # int_a^t (t-s)^(alpha-1) ds  -  int_a^t (T-s)^(alpha-1) ds
        d = t - a
        near = d**alpha * float(interval_integral(0.0, alpha)[()])
        far = _power_integral(T - t, T - a, alpha)
        left = near - far
    right = _power_integral(0.0, T - t, alpha)
    return (left + right) / math.gamma(alpha)


def _power_integral(lo: float, hi: float, alpha: float) -> float:
    # int_lo^hi u^(alpha-1) du
    return (hi**alpha - lo**alpha) / alpha


def _fredholm_map(wts: UniformWeights, gam: float, y_star: float, f: np.ndarray) -> np.ndarray:
    v = wts.apply(f) / gam
    return y_star + v - v[-1]


def solve_tvp_fredholm(p: FractionalTVP, cfg: SolverConfig | None = None) -> TvpSolution:
    """Damped Picard iteration on the discretized Fredholm equation.

    Starts from the constant ``y*``.  The discrete operator reuses the IVP
    product-trapezoid weights for both ``(t-s)^(alpha-1)`` and
    ``(T-s)^(alpha-1)``, so the rows for ``t`` and ``T`` are differenced.

    Raises
    ------
    ConvergenceError
        After ``MAX_PICARD`` iterations, reporting the last contraction ratio.
    """
    cfg = cfg or SolverConfig()
    n = int(cfg.n_steps)
    nodes = make_uniform_grid(p.a, p.T, n)
    wts = UniformWeights(n, (p.T - p.a) / n, p.alpha)
    gam = math.gamma(p.alpha)

    y = np.full(n + 1, float(p.y_star))
    prev_step = None
    ratio = float("nan")
    for it in range(1, MAX_PICARD + 1):
        f = np.asarray(p.rhs(nodes, y), dtype=float) + np.zeros(n + 1)
        mapped = _fredholm_map(wts, gam, p.y_star, f)
        if not np.all(np.isfinite(mapped)):
            raise ConvergenceError(f"Fredholm iteration diverged at iteration {it}")
        resid = float(np.max(np.abs(mapped - y)))
        if resid <= cfg.tol_residual:
            y = mapped
            final = _fredholm_residual(wts, gam, p, nodes, y)
            return TvpSolution(Trajectory(nodes, y), float(y[0]), "fredholm", it, final)
        new = (1.0 - DAMPING) * y + DAMPING * mapped
        step = float(np.max(np.abs(new - y)))
        if prev_step:
            ratio = step / prev_step
        prev_step = step
        y = new
    raise ConvergenceError(
        f"Fredholm iteration did not converge in {MAX_PICARD} iterations "
        f"(last contraction ratio {ratio:.4f})"
    )


def _fredholm_residual(wts, gam, p: FractionalTVP, nodes, y) -> float:
    f = np.asarray(p.rhs(nodes, y), dtype=float) + np.zeros(nodes.size)
    return float(np.max(np.abs(_fredholm_map(wts, gam, p.y_star, f) - y)))


def fredholm_residual(p: FractionalTVP, traj: Trajectory) -> float:
    """Sup-norm defect of ``traj`` in the discretized Fredholm equation.

    ``traj`` must live on a uniform grid over ``[p.a, p.T]``.
    """
    n = len(traj) - 1
    wts = UniformWeights(n, (p.T - p.a) / n, p.alpha)
    return _fredholm_residual(wts, math.gamma(p.alpha), p, traj.nodes, traj.values)


def _as_ivp(p: FractionalTVP, c: float) -> FractionalIVP:
    return FractionalIVP(p.alpha, p.a, p.T, (c,), p.rhs)


def solve_tvp_shooting(p: FractionalTVP, cfg: SolverConfig | None = None) -> TvpSolution:
    """Shooting on the initial value ``c = y(a)``.

    The bracket grows geometrically (from 1% of scale) around ``c = y*``; the root is then refined
    with Brent's method until the terminal miss is below ``1e-10``.

    Raises
    ------
    BracketError
        If no sign change of the terminal miss is found.
    """
    cfg = cfg or SolverConfig()
    calls = 0
    cache: dict[float, tuple[float, Trajectory]] = {}

    def miss(c: float) -> float:
        nonlocal calls
        if c not in cache:
            calls += 1
            tr = solve_ivp(_as_ivp(p, c), cfg)
            cache[c] = (float(tr.values[-1]) - p.y_star, tr)
        return cache[c][0]

    c0 = float(p.y_star)
    m0 = miss(c0)
    if m0 == 0.0:
        return TvpSolution(cache[c0][1], c0, "shooting", calls, 0.0)

    lo, hi = _expand_bracket(miss, c0, m0)
    c = brentq(miss, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    res = abs(miss(c))
    if res > max(SHOOT_TOL, cfg.tol_residual):
        raise ConvergenceError(f"shooting stalled with terminal miss {res:.3e}")
    return TvpSolution(cache[c][1], float(c), "shooting", calls, res)


def _expand_bracket(miss, c0: float, m0: float) -> tuple[float, float]:
    width = 1e-2 * max(1.0, abs(c0))
    scanned = [c0, c0]
    for _ in range(MAX_BRACKET_STEPS):
        for c in (c0 - width, c0 + width):
            try:
                mc = miss(c)
            except ConvergenceError:
                continue
            scanned = [min(scanned[0], c), max(scanned[1], c)]
            if np.sign(mc) != np.sign(m0):
                return (min(c, c0), max(c, c0))
        width *= 2.0
    raise BracketError(
        f"no sign change of the terminal miss on [{scanned[0]:g}, {scanned[1]:g}]"
    )
