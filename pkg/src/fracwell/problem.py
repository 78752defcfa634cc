"""Problem definitions, right-hand-side registry, grids and trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .errors import CoverageError, DegenerateError, DomainError

UNBOUNDED = "unbounded"

Bound = Union[float, str]


def _constant(t, y, p):
    return p["c"] + 0.0 * y


def _linear(t, y, p):
    return p["lambda"] * y


def _logistic(t, y, p):
    return p["r"] * y * (1.0 - y)


def _cos_forced(t, y, p):
    return np.cos(t) - y


def _manufactured_quadratic(t, y, p):
    # Caputo derivative of (t - a)^2 of order alpha
    alpha, a = p["alpha"], p["a"]
    s = np.maximum(np.asarray(t, dtype=float) - a, 0.0)
    out = 2.0 * s ** (2.0 - alpha) / math.gamma(3.0 - alpha)
    return out + 0.0 * y


@dataclass(frozen=True)
class RegistryEntry:
    func: Callable
    required: tuple[str, ...]
    # defaults for (lipschitz_L, bound_M) given params; L for logistic is for |y| <= 1
    default_l: Callable[[Mapping[str, float]], float]
    default_m: Callable[[Mapping[str, float]], Bound]


REGISTRY: Mapping[str, RegistryEntry] = MappingProxyType({
    "constant": RegistryEntry(_constant, ("c",), lambda p: 0.0, lambda p: abs(p["c"])),
    "linear": RegistryEntry(
        _linear, ("lambda",), lambda p: abs(p["lambda"]), lambda p: UNBOUNDED
    ),
    "logistic": RegistryEntry(
        _logistic, ("r",), lambda p: 3.0 * abs(p["r"]), lambda p: UNBOUNDED
    ),
    "cos_forced": RegistryEntry(_cos_forced, (), lambda p: 1.0, lambda p: UNBOUNDED),
    "manufactured_quadratic": RegistryEntry(
        _manufactured_quadratic, ("alpha", "a"), lambda p: 0.0, lambda p: UNBOUNDED
    ),
})


@dataclass(frozen=True)
class RhsSpec:
    """A named right-hand side ``f(t, y)`` from :data:`REGISTRY`.

    ``lipschitz_L`` and ``bound_M`` default to the registry's declared values
    when left as ``None``.
    """

    name: str
    params: Mapping[str, float] = field(default_factory=dict)
    lipschitz_L: float | None = None
    bound_M: Bound | None = None

    def __post_init__(self):
        if self.name not in REGISTRY:
            raise DomainError(
                f"unknown rhs {self.name!r}; registry entries: {', '.join(REGISTRY)}"
            )
        entry = REGISTRY[self.name]
        params = {k: float(v) for k, v in dict(self.params).items()}
        missing = [k for k in entry.required if k not in params]
        if missing:
            raise DomainError(f"rhs {self.name!r} is missing params {missing}")
        object.__setattr__(self, "params", MappingProxyType(params))

        lip = entry.default_l(params) if self.lipschitz_L is None else float(self.lipschitz_L)
        if not (math.isfinite(lip) and lip >= 0):
            raise DomainError(f"lipschitz_L must be finite and >= 0, got {lip!r}")
        object.__setattr__(self, "lipschitz_L", lip)

        bound = entry.default_m(params) if self.bound_M is None else self.bound_M
        if bound != UNBOUNDED:
            bound = float(bound)
            if not (math.isfinite(bound) and bound >= 0):
                raise DomainError(f"bound_M must be finite and >= 0, got {bound!r}")
        object.__setattr__(self, "bound_M", bound)

    @property
    def bounded(self) -> bool:
        return self.bound_M != UNBOUNDED

    def __call__(self, t, y):
        return REGISTRY[self.name].func(t, y, self.params)

    def shifted(self, offset: float) -> "ShiftedRhs":
        return ShiftedRhs(self, float(offset))


@dataclass(frozen=True)
class ShiftedRhs:
    """``f + offset``; used for perturbations of the right-hand side."""

    base: RhsSpec
    offset: float

    @property
    def name(self) -> str:
        return self.base.name

    @property
    def lipschitz_L(self) -> float:
        return self.base.lipschitz_L

    @property
    def bound_M(self) -> Bound:
        if not self.base.bounded:
            return UNBOUNDED
        return self.base.bound_M + abs(self.offset)

    @property
    def bounded(self) -> bool:
        return self.base.bounded

    def __call__(self, t, y):
        return self.base(t, y) + self.offset


def rhs_eval(rhs: RhsSpec | ShiftedRhs, t: float, y: float) -> float:
    """Evaluate ``f(t, y)`` and check that the result is finite."""
    v = float(rhs(t, y))
    if not math.isfinite(v):
        raise DomainError(f"rhs {rhs.name!r} is not finite at t={t!r}, y={y!r}")
    return v


def _ceil_order(alpha: float) -> int:
    return math.ceil(alpha)


@dataclass(frozen=True)
class FractionalIVP:
    alpha: float
    a: float
    T: float
    init: tuple[float, ...]
    rhs: RhsSpec | ShiftedRhs

    def __post_init__(self):
        object.__setattr__(self, "init", tuple(float(v) for v in self.init))
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise DomainError(f"alpha must be > 0, got {self.alpha!r}")
        if not self.a < self.T:
            raise DomainError(f"need a < T, got a={self.a!r}, T={self.T!r}")
        m = _ceil_order(self.alpha)
        if len(self.init) != m:
            raise DomainError(
                f"init length must equal ceil(alpha)={m}, got {len(self.init)}"
            )

    @property
    def order_ceil(self) -> int:
        return _ceil_order(self.alpha)


@dataclass(frozen=True)
class FractionalTVP:
    alpha: float
    a: float
    T: float
    y_star: float
    rhs: RhsSpec | ShiftedRhs

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise DomainError(
                f"terminal value problems require 0 < alpha < 1, got {self.alpha!r}"
            )
        if not self.a < self.T:
            raise DomainError(f"need a < T, got a={self.a!r}, T={self.T!r}")


def make_uniform_grid(a: float, T: float, n: int) -> np.ndarray:
    """``n + 1`` equispaced nodes on ``[a, T]`` with exact endpoints."""
    if not a < T:
        raise DegenerateError(f"degenerate interval [{a!r}, {T!r}]")
    if int(n) != n or n < 1:
        raise DegenerateError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    nodes = a + (T - a) * (np.arange(n + 1) / n)
    nodes[0] = a
    nodes[-1] = T
    return nodes


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Solution values on a strictly increasing node set, piecewise linear."""

    nodes: np.ndarray
    values: np.ndarray
    interp: str = "linear"

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        values = np.array(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.shape != values.shape or nodes.size == 0:
            raise DomainError("nodes and values must be 1-d arrays of equal length")
        if np.any(np.diff(nodes) <= 0):
            raise DomainError("nodes must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise DomainError("trajectory values must be finite")
        if self.interp != "linear":
            raise DomainError(f"unsupported interpolation rule {self.interp!r}")
        nodes.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    @property
    def start(self) -> float:
        return float(self.nodes[0])

    @property
    def end(self) -> float:
        return float(self.nodes[-1])

    def __len__(self):
        return self.nodes.size

    def __call__(self, t):
        return trajectory_eval(self, t)


def trajectory_eval_many(traj: Trajectory, ts) -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    if ts.size and (ts.min() < traj.nodes[0] or ts.max() > traj.nodes[-1]):
        raise CoverageError(
            f"evaluation points outside [{traj.start!r}, {traj.end!r}]"
        )
    return np.interp(ts, traj.nodes, traj.values)


def trajectory_eval(traj: Trajectory, t: float) -> float:
    """Piecewise-linear value of ``traj`` at ``t``; exact at nodes."""
    return float(trajectory_eval_many(traj, np.array([t]))[0])


def working_rectangle_bound(
    rhs: RhsSpec | ShiftedRhs, trajs: Sequence[Trajectory], margin: float = 0.2,
    n_y: int = 65,
) -> tuple[float, float]:
    """Empirical ``(Y_MAX, M)`` on ``[a, T] x [-Y_MAX, Y_MAX]``.

    ``Y_MAX`` is the largest ``|y|`` over the realized trajectories plus a
    ``margin`` fraction; ``M`` is ``sup |f|`` over the trajectory nodes and
    ``n_y`` levels in ``[-Y_MAX, Y_MAX]``.  A declared finite ``bound_M`` wins.
    """
    y_max = (1.0 + margin) * max(float(np.max(np.abs(tr.values))) for tr in trajs)
    if rhs.bounded:
        return y_max, float(rhs.bound_M)
    ts = np.unique(np.concatenate([tr.nodes for tr in trajs]))
    ys = np.linspace(-y_max, y_max, n_y)
    vals = rhs(ts[:, None], ys[None, :])
    return y_max, float(np.max(np.abs(vals)))
