r"""Gamma and one-parameter Mittag-Leffler functions for real arguments.

The Mittag-Leffler function is evaluated from its power series

.. math::

    E_\alpha(z) = \sum_{k=0}^\infty \frac{z^k}{\Gamma(\alpha k + 1)}

with Neumaier-compensated accumulation.  For negative arguments whose
series suffers heavy cancellation the same series is re-summed in
extended precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConvergenceError, DomainError

#: Largest |z| accepted by :func:`mittag_leffler`.
Z_MAX = 40.0
#: Below this order only |z| <= 1 is accepted.
ALPHA_SMALL = 0.3
MAX_TERMS = 10_000
REL_STOP = 1e-16

# exp() overflows just above 709.78
_LOG_OVERFLOW = 700.0
# target absolute accuracy used to decide whether cancellation is acceptable
_ABS_TARGET = 1e-13
# absolute size of the last term kept by the extended-precision path
_TAIL = 1e-20


@dataclass(frozen=True)
class MLQuery:
    alpha: float
    z: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise DomainError(f"alpha must be finite and > 0, got {self.alpha!r}")
        if not math.isfinite(self.z):
            raise DomainError(f"z must be finite, got {self.z!r}")


def gamma_fn(x: float) -> float:
    """Gamma function for positive real ``x``."""
    x = float(x)
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"gamma_fn requires finite x > 0, got {x!r}")
    return math.gamma(x)


def _log_abs_term(k: int, alpha: float, logz: float) -> float:
    return k * logz - math.lgamma(alpha * k + 1.0)


def _term(k: int, alpha: float, z: float) -> float:
    g = alpha * k + 1.0
    if g < 170.0 and k * math.log(abs(z)) < _LOG_OVERFLOW:
        return z**k / math.gamma(g)
    mag = math.exp(_log_abs_term(k, alpha, math.log(abs(z))))
    return -mag if (z < 0 and k % 2) else mag


def _check_domain(alpha: float, z: float) -> None:
    if abs(z) > Z_MAX:
        raise DomainError(f"|z| = {abs(z):g} exceeds the supported bound {Z_MAX:g}")
    if alpha < ALPHA_SMALL and abs(z) > 1.0:
        raise DomainError(
            f"alpha = {alpha:g} < {ALPHA_SMALL} is only supported for |z| <= 1"
        )


def _scan_terms(alpha: float, z: float) -> float:
    """Largest log|term| of the series; fails if the cap cannot be met.

    The scan runs until the terms have decayed below ``_TAIL``, which bounds
    the number of terms either summation path needs.
    """
    logz = math.log(abs(z))
    peak = 0.0
    floor = math.log(_TAIL)
    for k in range(1, MAX_TERMS):
        cur = _log_abs_term(k, alpha, logz)
        peak = max(peak, cur)
        if cur < floor:
            return peak
    raise ConvergenceError(
        f"E_{alpha:g}({z:g}) needs more than {MAX_TERMS} series terms"
    )


def _series_double(alpha: float, z: float) -> float:
    s = 0.0
    comp = 0.0
    prev_abs = math.inf
    for k in range(MAX_TERMS):
        t = _term(k, alpha, z)
        # Neumaier compensated summation
        u = s + t
        if abs(s) >= abs(t):
            comp += (s - u) + t
        else:
            comp += (t - u) + s
        s = u
        total = s + comp
        at = abs(t)
        if k > 0 and at <= prev_abs and (at <= REL_STOP * abs(total) or at == 0.0):
            return total
        prev_abs = at
    raise ConvergenceError(
        f"E_{alpha:g}({z:g}) did not converge within {MAX_TERMS} terms"
    )


def _series_extended(alpha: float, z: float, peak_log10: float) -> float:
    import mpmath

    dps = 20 + int(math.ceil(max(peak_log10, 0.0)))
    with mpmath.workdps(dps):
        zz = mpmath.mpf(z)
        a = mpmath.mpf(alpha)
        s = mpmath.mpf(0)
        power = mpmath.mpf(1)
        prev_abs = mpmath.inf
        for k in range(MAX_TERMS):
            t = power * mpmath.rgamma(a * k + 1)
            s += t
            at = abs(t)
            if k > 0 and at <= prev_abs and at <= _TAIL:
                return float(s)
            prev_abs = at
            power *= zz
    raise ConvergenceError(
        f"E_{alpha:g}({z:g}) did not converge within {MAX_TERMS} terms"
    )


def mittag_leffler(alpha: float | MLQuery, z: float | None = None) -> float:
    """One-parameter Mittag-Leffler function :math:`E_\\alpha(z)`, real ``z``.

    Accepts either ``mittag_leffler(alpha, z)`` or ``mittag_leffler(MLQuery(...))``.

    Raises
    ------
    DomainError
        If ``|z| > Z_MAX``, if ``alpha < 0.3`` with ``|z| > 1``, or if the value
        does not fit in a double.
    ConvergenceError
        If the term cap is reached before the stopping criterion.
    """
    q = alpha if isinstance(alpha, MLQuery) else MLQuery(float(alpha), float(z))
    a, x = q.alpha, q.z
    _check_domain(a, x)
    if x == 0.0:
        return 1.0

    peak = _scan_terms(a, x)
    if x > 0:
        if peak > _LOG_OVERFLOW:
            raise DomainError(f"E_{a:g}({x:g}) overflows double precision")
        return _series_double(a, x)

    # alternating series: rounding of the largest term is the error floor
    peak_abs = math.exp(min(peak, _LOG_OVERFLOW))
    if peak > _LOG_OVERFLOW or peak_abs * 4e-16 > _ABS_TARGET:
        return _series_extended(a, x, peak / math.log(10.0))
    return _series_double(a, x)
