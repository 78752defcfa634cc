import math
from dataclasses import replace

import numpy as np
import pytest

import fracwell.sweep as sweep_mod
from conftest import example_ivp
from fracwell.errors import ConvergenceError, DegenerateError, DomainError
from fracwell.ivp_solver import SolverConfig
from fracwell.problem import FractionalTVP, RhsSpec, Trajectory
from fracwell.sweep import (
    SweepPlan,
    compute_row,
    dyadic_deltas,
    fit_exponent,
    predicted_exponent,
    run_sweep,
    sup_diff,
    zero_shift_diff,
)

CFG = SolverConfig(n_steps=256)


def test_sup_diff_example():
    x = np.linspace(0, 1, 101)
    a = Trajectory(x, x)
    b = Trajectory(x, x**2)
    assert sup_diff(a, b, 0.0, 1.0) == pytest.approx(0.25)


def test_sup_diff_uses_union_of_nodes():
    a = Trajectory([0.0, 1.0], [0.0, 0.0])
    b = Trajectory([0.0, 0.5, 1.0], [0.0, 1.0, 0.0])
    assert sup_diff(a, b, 0.0, 1.0) == 1.0
    assert sup_diff(a, b, 0.75, 1.0) == pytest.approx(0.5)


def test_fit_exponent_exact():
    pairs = [(2.0**-k, 3.0 * 2.0 ** (-0.7 * k)) for k in range(3, 9)]
    slope, r2 = fit_exponent(pairs)
    assert slope == pytest.approx(0.7, abs=1e-12)
    assert r2 == pytest.approx(1.0)


def test_fit_exponent_noisy():
    rng = np.random.default_rng(0)
    slopes = []
    for _ in range(200):
        pairs = [(2.0**-k, 2.0 ** (-0.5 * k) * (1 + 0.01 * rng.normal())) for k in range(3, 9)]
        slopes.append(fit_exponent(pairs)[0])
    assert np.max(np.abs(np.array(slopes) - 0.5)) < 0.02


def test_fit_exponent_degenerate():
    with pytest.raises(DegenerateError):
        fit_exponent([(0.1, 1.0)])
    with pytest.raises(DegenerateError):
        fit_exponent([(0.1, 1.0), (0.1, 2.0)])
    with pytest.raises(DegenerateError):
        fit_exponent([(0.1, 0.0), (0.2, 1.0)])


def test_dyadic_deltas():
    assert dyadic_deltas(0.0, 2.0, 1, 3) == (1.0, 0.5, 0.25)


def test_predicted_exponents():
    assert predicted_exponent(example_ivp(0.4), "start_shift") == 0.4
    assert predicted_exponent(example_ivp(1.6), "start_shift") == 1.0
    assert predicted_exponent(example_ivp(0.4), "init_shift") == 1.0


def test_plan_validation():
    base = example_ivp(0.5)
    d = dyadic_deltas(0.0, 1.0)
    with pytest.raises(DomainError):
        SweepPlan(base, "start_shift", d[:3], CFG)
    with pytest.raises(DomainError):
        SweepPlan(base, "start_shift", d[::-1], CFG)
    with pytest.raises(DomainError):
        SweepPlan(base, "start_shift", (0.1, 0.09, 0.08, 0.07), CFG)
    with pytest.raises(DomainError):
        SweepPlan(base, "start_shift", d, SolverConfig(n_steps=255))
    with pytest.raises(DomainError):
        SweepPlan(base, "terminal_shift", d, CFG)
    with pytest.raises(DomainError):
        SweepPlan(base, "bogus", d, CFG)
    # alpha_shift would cross ceil(alpha)
    with pytest.raises(DomainError, match="ceil"):
        SweepPlan(example_ivp(1.05), "alpha_shift", (0.1, 0.05, 0.025, 0.0125), CFG)


@pytest.mark.parametrize("mode", ["start_shift", "alpha_shift", "init_shift", "rhs_scale"])
def test_zero_shift_reproduces_base(mode):
    plan = SweepPlan(example_ivp(0.7), mode, dyadic_deltas(0.0, 1.0), CFG)
    assert zero_shift_diff(plan) <= 2 * CFG.tol_residual


def test_zero_shift_tvp():
    base = FractionalTVP(0.5, 0.0, 1.0, 2.0, RhsSpec("linear", {"lambda": 1}))
    plan = SweepPlan(base, "terminal_shift", dyadic_deltas(0.0, 1.0), CFG)
    assert zero_shift_diff(plan) <= 2 * CFG.tol_residual


class Spy:
    def __init__(self, rhs):
        self.rhs = rhs
        self.t_min = math.inf

    def __call__(self, t, y):
        self.t_min = min(self.t_min, float(np.min(t)))
        return self.rhs(t, y)


def test_start_shift_never_looks_left(monkeypatch):
    spies = []
    real = sweep_mod.solve_ivp

    def spying_solve(p, cfg):
        spy = Spy(p.rhs)
        spies.append((p.a, spy))
        return real(replace(p, rhs=spy), cfg)

    monkeypatch.setattr(sweep_mod, "solve_ivp", spying_solve)
    plan = SweepPlan(example_ivp(0.6), "start_shift", dyadic_deltas(0.0, 1.0), CFG)
    run_sweep(plan, threads=1)
    shifted = [(a, s) for a, s in spies if a > 0]
    assert len(shifted) == 2 * len(plan.deltas)
    for a, spy in shifted:
        assert spy.t_min >= a


def test_start_shift_rows_have_bounds():
    plan = SweepPlan(example_ivp(0.5), "start_shift", dyadic_deltas(0.0, 1.0), CFG)
    rep = run_sweep(plan, threads=2)
    assert [r.delta for r in rep.rows] == list(plan.deltas)
    for r in rep.rows:
        assert r.ok
        assert r.lower_bound - 10 * r.error_estimate <= r.sup_diff
        assert r.sup_diff <= r.bound_envelope + 10 * r.error_estimate
    assert rep.summary()["mode"] == "start_shift"


def test_init_shift_is_linear():
    plan = SweepPlan(example_ivp(0.8), "init_shift", dyadic_deltas(0.0, 1.0), CFG)
    rep = run_sweep(plan, threads=1)
    assert rep.fitted_exponent == pytest.approx(1.0, abs=1e-6)


def test_failed_rows_reported(monkeypatch):
    real = sweep_mod._perturb

    def flaky(plan, delta):
        if delta < 0.01:
            raise ConvergenceError("forced")
        return real(plan, delta)

    monkeypatch.setattr(sweep_mod, "_perturb", flaky)
    plan = SweepPlan(example_ivp(0.8), "init_shift", dyadic_deltas(0.0, 1.0), CFG)
    rep = run_sweep(plan, threads=1)
    failed = [r for r in rep.rows if not r.ok]
    assert len(failed) == 2 and all("forced" in r.status for r in failed)
    assert math.isnan(failed[0].sup_diff)

    def broken(plan, delta):
        raise ConvergenceError("forced")

    monkeypatch.setattr(sweep_mod, "_perturb", broken)
    with pytest.raises(ConvergenceError, match="rows succeeded"):
        run_sweep(plan, threads=1)


def test_compute_row_zero_delta():
    plan = SweepPlan(example_ivp(0.8), "rhs_scale", dyadic_deltas(0.0, 1.0), CFG)
    base = sweep_mod._solve(plan.base, CFG, "fredholm")
    row = compute_row(plan, 0.0, base, 0.0)
    assert row.ok and row.sup_diff == 0.0
