import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smolyak_qc.optimize import (
    C1,
    OptimizerAbort,
    OptimizerConfig,
    initial_params,
    minimize,
    strong_wolfe,
)


def quadratic(x):
    return float(x @ x), 2 * x


def rosenbrock(x):
    a, b = x
    f = (1 - a) ** 2 + 100 * (b - a * a) ** 2
    g = np.array([-2 * (1 - a) - 400 * a * (b - a * a), 200 * (b - a * a)])
    return f, g


def test_quadratic_quasi_newton():
    x0 = initial_params(6, seed=3)
    x, trace = minimize(quadratic, x0, OptimizerConfig(max_iterations=100))
    assert np.linalg.norm(x) < 1e-6
    assert len(trace) <= 100


def test_rosenbrock():
    x, trace = minimize(rosenbrock, np.array([-1.2, 1.0]), OptimizerConfig(max_iterations=500))
    assert trace.final_objective < 1e-8
    np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-4)


def test_adam_quadratic():
    x0 = initial_params(6, seed=4)
    cfg = OptimizerConfig(method="adaptive-moment", max_iterations=2000, ftol=0.0)
    x, trace = minimize(quadratic, x0, cfg)
    assert min(trace.objective) < 1e-4
    assert trace.final_objective == trace.objective[-1]


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(2, 12))
def test_sufficient_decrease_and_monotonicity(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    Q = A @ A.T + 0.1 * np.eye(n)

    def fun(x):
        return float(0.5 * x @ Q @ x + np.sum(np.cos(x))), Q @ x - np.sin(x)

    _, trace = minimize(fun, rng.normal(size=n), OptimizerConfig(max_iterations=60))
    for alpha, f_old, f_new, gd in trace.steps:
        assert f_new <= f_old + C1 * gd + 1e-12 * abs(f_old)
    objs = [trace.initial_objective] + trace.objective
    assert all(b <= a for a, b in zip(objs, objs[1:]))


def test_strong_wolfe_conditions():
    def phi(a):
        x = np.array([-1.2, 1.0]) + a * d
        f, g = rosenbrock(x)
        return f, float(g @ d), None

    f0, g = rosenbrock(np.array([-1.2, 1.0]))
    d = -g / np.linalg.norm(g)
    g0 = float(g @ d)
    alpha, fa, _ = strong_wolfe(phi, f0, g0, 1.0)
    _, ga, _ = phi(alpha)
    assert fa <= f0 + 1e-4 * alpha * g0
    assert abs(ga) <= 0.9 * abs(g0)


def test_bounds_respected():
    lower, upper = 0.5, 2.0

    def fun(x):
        return float(np.sum((x + 1) ** 2)), 2 * (x + 1)

    for method in ("quasi-newton", "adaptive-moment"):
        cfg = OptimizerConfig(method=method, lower=lower, upper=upper, max_iterations=200, learning_rate=0.1)
        x, trace = minimize(fun, np.array([1.5, 1.9, 0.7]), cfg)
        np.testing.assert_allclose(x, lower, atol=1e-8)
        assert np.all(x >= lower) and np.all(x <= upper)


def test_determinism():
    cfg = OptimizerConfig(method="adaptive-moment", max_iterations=50)
    a, ta = minimize(rosenbrock, np.array([-1.2, 1.0]), cfg)
    b, tb = minimize(rosenbrock, np.array([-1.2, 1.0]), cfg)
    np.testing.assert_array_equal(a, b)
    assert ta.objective == tb.objective and ta.grad_norm == tb.grad_norm
    np.testing.assert_array_equal(initial_params(5, 9), initial_params(5, 9))


def test_initial_params_range():
    x = initial_params(1000, seed=0, scale=2.0)
    assert x.min() >= -2.0 and x.max() <= 2.0


def test_evaluation_budget_is_a_hard_cap():
    calls = []

    def fun(x):
        calls.append(1)
        return rosenbrock(x)

    for method in ("quasi-newton", "adaptive-moment"):
        calls.clear()
        _, trace = minimize(fun, np.array([-1.2, 1.0]), OptimizerConfig(method=method, max_evaluations=37, ftol=0.0))
        assert len(calls) <= 37
        assert trace.message == "evaluation budget exhausted"


def test_single_iteration_trace():
    _, trace = minimize(rosenbrock, np.array([-1.2, 1.0]), OptimizerConfig(max_iterations=1))
    assert trace.iterations == [1]
    assert trace.to_csv().splitlines()[0] == "iter,objective,grad_norm,elapsed_s"
    assert len(trace.to_csv().splitlines()) == 2


def test_patience_stop():
    # flat objective: no improvement at all
    def flat(x):
        return 1.0, np.full_like(x, 1e-3)

    cfg = OptimizerConfig(method="adaptive-moment", max_iterations=500, patience=20)
    _, trace = minimize(flat, np.zeros(2), cfg)
    assert trace.message == "objective improvement below tolerance"
    assert len(trace) == 20  # 20 iterations after the initial evaluation


def test_non_finite_aborts_with_trace():
    def bad(x):
        if x[0] > 0.05:
            return float("nan"), np.zeros_like(x)
        return float(-x[0]), np.array([-1.0])

    with pytest.raises(OptimizerAbort) as info:
        minimize(bad, np.array([0.0]), OptimizerConfig(method="adaptive-moment", learning_rate=0.01))
    assert len(info.value.trace) >= 1
    assert np.isfinite(info.value.trace.objective).all()


def test_return_best():
    cfg = OptimizerConfig(method="adaptive-moment", learning_rate=0.5, max_iterations=40, return_best=True)
    x, trace = minimize(quadratic, np.array([1.0, -1.0]), cfg)
    assert trace.final_objective == min([trace.initial_objective] + trace.objective)


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(method="nelder-mead")
    with pytest.raises(ValueError):
        OptimizerConfig(max_iterations=0)
    with pytest.raises(ValueError):
        OptimizerConfig(gtol=0)
    with pytest.raises(ValueError):
        OptimizerConfig.from_dict({"lr": 0.1})
    cfg = OptimizerConfig.from_dict({"method": "adaptive-moment", "learning_rate": 0.02})
    assert OptimizerConfig.from_dict(cfg.to_dict()) == cfg
