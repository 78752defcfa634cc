r"""Product-trapezoidal weights for the kernel :math:`(t-s)^{\alpha-1}`.

On an interval :math:`[s_j, s_{j+1}]` of length ``d`` that ends a distance
``v = t - s_{j+1}`` before ``t``, the kernel is integrated exactly against the
two hat functions.  With ``m = v/d`` both integrals scale as ``d**alpha``
times a function of ``m`` alone:

.. math::

    \omega_L(m) = \int_m^{m+1} u^{\alpha-1} (u - m) \, du, \qquad
    \omega_R(m) = \int_m^{m+1} u^{\alpha-1} (m + 1 - u) \, du,

where :math:`\omega_L` is the weight of the node farther from ``t``.  For
large ``m`` the closed-form antiderivatives cancel catastrophically, so a
positive-term series in ``log1p(1/m)`` is used there instead.
"""

from __future__ import annotations

import numpy as np

# series is used where m >= _SERIES_M and (alpha + 1) * log1p(1/m) <= 1
_SERIES_M = 4.0
_SERIES_TERMS = 60


def interval_integral(m, alpha: float) -> np.ndarray:
    """:math:`\\int_m^{m+1} u^{\\alpha-1} du` for ``m >= 0``."""
    m = np.asarray(m, dtype=float)
    out = np.empty_like(m)
    zero = m == 0
    out[zero] = 1.0 / alpha
    mm = m[~zero]
    out[~zero] = mm**alpha * np.expm1(alpha * np.log1p(1.0 / mm)) / alpha
    return out


def _omega_left_series(m: np.ndarray, alpha: float) -> np.ndarray:
    # m^{alpha+1} * sum_{k>=2} ((alpha+1)^{k-1} - alpha^{k-1}) L^k / k!
    L = np.log1p(1.0 / m)
    total = np.zeros_like(m)
    pa1 = alpha + 1.0  # (alpha+1)^{k-1}
    pa = alpha  # alpha^{k-1}
    lk = L * L / 2.0  # L^k / k!
    for k in range(2, _SERIES_TERMS):
        term = (pa1 - pa) * lk
        total += term
        if np.all(term <= 1e-17 * total):
            break
        pa1 *= alpha + 1.0
        pa *= alpha
        lk = lk * L / (k + 1)
    return m ** (alpha + 1.0) * total


def _omega_left_direct(m: np.ndarray, alpha: float) -> np.ndarray:
    m1 = m + 1.0
    return (m1 ** (alpha + 1.0) - m ** (alpha + 1.0)) / (alpha + 1.0) - m * (
        m1**alpha - m**alpha
    ) / alpha


def omega(m, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Unit-interval product-trapezoid weights ``(omega_L, omega_R)`` at offset ``m``."""
    m = np.atleast_1d(np.asarray(m, dtype=float))
    if np.any(m < 0):
        raise ValueError("interval offset must be >= 0")
    left = np.empty_like(m)
    use_series = (m >= _SERIES_M) & ((alpha + 1.0) * np.log1p(1.0 / np.maximum(m, 1e-300)) <= 1.0)
    left[use_series] = _omega_left_series(m[use_series], alpha)
    rest = ~use_series
    left[rest] = _omega_left_direct(m[rest], alpha)
    zero = m == 0
    left[zero] = 1.0 / (alpha + 1.0)
    right = interval_integral(m, alpha) - left
    right[zero] = 1.0 / (alpha * (alpha + 1.0))
    return left, right


def node_weights(nodes, t: float, alpha: float) -> np.ndarray:
    """Weights ``w`` with ``sum(w * g(nodes)) = int_{nodes[0]}^t (t-s)^(alpha-1) I[g](s) ds``.

    ``I[g]`` is the piecewise-linear interpolant of ``g`` on ``nodes``.  The
    last node must equal ``t``; callers append ``t`` when it is not a node.
    """
    s = np.asarray(nodes, dtype=float)
    w = np.zeros(s.size)
    if s.size < 2:
        return w
    d = np.diff(s)
    v = t - s[1:]
    v[-1] = 0.0
    v = np.maximum(v, 0.0)
    left, right = omega(v / d, alpha)
    scale = d**alpha
    w[:-1] += scale * left
    w[1:] += scale * right
    return w


class UniformWeights:
    """Precomputed weights for a uniform grid with ``n`` steps of size ``h``.

    Row ``i`` of the (implicit) weight matrix integrates the kernel from the
    first node to node ``i``; it is lower triangular and Toeplitz apart from
    column 0.
    """

    def __init__(self, n: int, h: float, alpha: float):
        self.n = n
        self.h = h
        self.alpha = alpha
        m = np.arange(n, dtype=float)
        left, right = omega(m, alpha)
        self.scale = h**alpha
        self.left = left
        # c[k] = weight of node j with i - j = k for j >= 1
        c = np.empty(n + 1)
        c[0] = right[0]
        c[1:n] = left[:n - 1] + right[1:n]
        c[n] = left[n - 1]  # unused by rows <= n, kept for shape
        self.c = c
        self.rect = left + right  # product-rectangle weights, offset m

    def history(self, i: int, f: np.ndarray) -> float:
        """Weighted sum over nodes ``0..i-1`` for row ``i`` (no diagonal)."""
        if i == 0:
            return 0.0
        acc = self.left[i - 1] * f[0]
        if i > 1:
            acc += np.dot(self.c[i - 1:0:-1], f[1:i])
        return self.scale * acc

    def diagonal(self) -> float:
        return self.scale * self.c[0]

    def rectangle(self, i: int, f: np.ndarray) -> float:
        """Product-rectangle sum over nodes ``0..i-1`` for row ``i``."""
        if i == 0:
            return 0.0
        return self.scale * np.dot(self.rect[i - 1::-1], f[:i])

    def apply(self, f: np.ndarray) -> np.ndarray:
        """All rows at once: ``out[i] = sum_j W[i, j] f[j]``."""
        f = np.asarray(f, dtype=float)
        out = np.zeros(self.n + 1)
        conv = np.convolve(self.c[: self.n], f[1:])[: self.n]
        out[1:] = self.left[: self.n] * f[0] + conv
        return self.scale * out

    def row(self, i: int) -> np.ndarray:
        w = np.zeros(self.n + 1)
        if i == 0:
            return w
        w[0] = self.left[i - 1]
        w[1 : i + 1] = self.c[i - 1 :: -1][:i]
        return self.scale * w


def volterra_weights_exact_sum(t: float, a: float, alpha: float) -> float:
    """:math:`\\int_a^t (t-s)^{\\alpha-1} ds`, the reference for constant integrands."""
    return (t - a) ** alpha / alpha


__all__ = [
    "UniformWeights",
    "interval_integral",
    "node_weights",
    "omega",
    "volterra_weights_exact_sum",
]
