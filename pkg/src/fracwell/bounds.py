"""Explicit constants from the starting-point and terminal-point estimates.

For a shift of the starting point from ``a`` to ``a_tilde`` the difference
``delta(t) = |y(t) - y_tilde(t)|`` on ``[a_tilde, T]`` obeys

    delta(t) <= D1 + D2 + L/Gamma(alpha) int (t-s)^(alpha-1) delta(s) ds

and the fractional Gronwall lemma turns this into
``(D1 + D2) * E_alpha(L (T-a)^alpha)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DomainError
from .special_functions import mittag_leffler


@dataclass(frozen=True)
class ShiftBoundInputs:
    alpha: float
    a: float
    a_tilde: float
    T: float
    L: float
    M: float
    init: Sequence[float]

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"alpha must be > 0, got {self.alpha!r}")
        if not self.a <= self.a_tilde < self.T:
            raise DomainError(
                f"need a <= a_tilde < T, got {self.a!r}, {self.a_tilde!r}, {self.T!r}"
            )
        if self.L < 0 or self.M < 0:
            raise DomainError("L and M must be nonnegative")
        object.__setattr__(self, "init", tuple(float(v) for v in self.init))

    @property
    def shift(self) -> float:
        return self.a_tilde - self.a


def d1_bound(inp: ShiftBoundInputs) -> float:
    """Bound on the initial-polynomial difference; zero for ``alpha <= 1``."""
    if inp.alpha <= 1:
        return 0.0
    m = math.ceil(inp.alpha)
    span = inp.T - inp.a
    total = sum(
        abs(inp.init[k]) * span ** (k - 1) / math.factorial(k - 1) for k in range(1, m)
    )
    return abs(inp.shift) * total


def d2_bound(inp: ShiftBoundInputs) -> float:
    """Bound on the memory integral over the dropped piece ``[a, a_tilde]``."""
    s = inp.shift
    if inp.alpha <= 1:
        return inp.M * s**inp.alpha / math.gamma(inp.alpha + 1)
    return inp.M * s * (inp.T - inp.a) ** (inp.alpha - 1) / math.gamma(inp.alpha)


def gronwall_envelope(inp: ShiftBoundInputs) -> float:
    """``(D1 + D2) * E_alpha(L (T - a)^alpha)``, uniform on ``[a_tilde, T]``."""
    amp = d1_bound(inp) + d2_bound(inp)
    return amp * mittag_leffler(inp.alpha, inp.L * (inp.T - inp.a) ** inp.alpha)


def example1_lower_bound(alpha: float, a_shift: float) -> float:
    """Floor ``shift^alpha / Gamma(alpha+1)`` for ``D^alpha y = y``, ``y(a)=1``, ``alpha <= 1``."""
    if not 0 < alpha <= 1:
        raise DomainError(f"example1_lower_bound needs 0 < alpha <= 1, got {alpha!r}")
    if a_shift < 0:
        raise DomainError("a_shift must be >= 0")
    return a_shift**alpha / math.gamma(alpha + 1)


def example2_lower_bound(alpha: float, a_shift: float, T: float, a_tilde: float) -> float:
    """Floor ``(T - a_tilde)^(alpha-1) / Gamma(alpha) * shift`` for ``alpha > 1``."""
    if not alpha > 1:
        raise DomainError(f"example2_lower_bound needs alpha > 1, got {alpha!r}")
    if not T > a_tilde:
        raise DomainError("need T > a_tilde")
    if a_shift < 0:
        raise DomainError("a_shift must be >= 0")
    return (T - a_tilde) ** (alpha - 1) / math.gamma(alpha) * a_shift


def tvp_terminal_prebound(alpha: float, f_sup: float, T: float, T_tilde: float) -> float:
    """Inhomogeneous term ``2 |f|_inf (T_tilde - T)^alpha / Gamma(alpha+1)``.

    This is the part of the terminal-shift estimate before a Fredholm-type
    Gronwall argument; no closed-form constant for that step is available.
    """
    if not 0 < alpha <= 1:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha!r}")
    if T_tilde < T:
        raise DomainError("need T_tilde >= T")
    return 2.0 * f_sup * (T_tilde - T) ** alpha / math.gamma(alpha + 1)
