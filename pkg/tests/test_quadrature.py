import math

import numpy as np
import pytest
import mpmath

from fracwell.quadrature import UniformWeights, node_weights, omega


def _ref(m, alpha):
    # independent oracle: mpmath tanh-sinh at 30 digits
    if m == 0:
        # endpoint singularity: exact beta integrals
        return 1 / (alpha + 1), 1 / (alpha * (alpha + 1))
    with mpmath.workdps(30):
        a, m = mpmath.mpf(alpha), mpmath.mpf(m)
        left = mpmath.quad(lambda u: u ** (a - 1) * (u - m), [m, m + 1])
        right = mpmath.quad(lambda u: u ** (a - 1) * (m + 1 - u), [m, m + 1])
    return float(left), float(right)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.9, 1.0, 1.5, 2.5])
@pytest.mark.parametrize("m", [0, 0.5, 1, 3, 4, 7.5, 50, 4095])
def test_omega_against_quadrature(alpha, m):
    left, right = omega([m], alpha)
    rl, rr = _ref(m, alpha)
    assert left[0] == pytest.approx(rl, rel=1e-12)
    assert right[0] == pytest.approx(rr, rel=1e-12)


def test_weights_integrate_linear_exactly():
    # int_0^1 (1-s)^(alpha-1) (2 + 3 s) ds = 2/alpha + 3 B(2, alpha)
    alpha = 0.4
    nodes = np.sort(np.concatenate(([0.0, 1.0], np.random.default_rng(0).uniform(0, 1, 30))))
    w = node_weights(nodes, 1.0, alpha)
    exact = 2 / alpha + 3 * math.gamma(2) * math.gamma(alpha) / math.gamma(alpha + 2)
    assert np.dot(w, 2 + 3 * nodes) == pytest.approx(exact, rel=1e-13)


def test_uniform_rows_match_general():
    n, h, alpha = 64, 1 / 64, 0.7
    uw = UniformWeights(n, h, alpha)
    nodes = np.linspace(0, 1, n + 1)
    for i in (1, 2, 17, 64):
        assert np.allclose(uw.row(i)[: i + 1], node_weights(nodes[: i + 1], nodes[i], alpha),
                           rtol=1e-13, atol=0)


def test_uniform_apply_history_consistent():
    n = 40
    uw = UniformWeights(n, 0.05, 0.3)
    f = np.random.default_rng(5).normal(size=n + 1)
    full = np.array([uw.row(i) @ f for i in range(n + 1)])
    assert np.allclose(uw.apply(f), full, rtol=1e-13, atol=1e-15)
    for i in range(1, n + 1):
        assert uw.history(i, f) + uw.diagonal() * f[i] == pytest.approx(full[i], rel=1e-13)
