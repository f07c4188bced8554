"""Gradient-based minimizers for pulse parameters.

``quasi-newton`` is limited-memory BFGS with a strong-Wolfe line search
(projected Armijo backtracking when box bounds are active);
``adaptive-moment`` is Adam. Both take a callable returning
``(value, gradient)`` and produce an :class:`OptimizerTrace`.
"""

from __future__ import annotations

import csv
import io
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

C1 = 1e-4
C2 = 0.9


class OptimizerAbort(RuntimeError):
    """Non-finite objective or gradient; ``trace`` holds the iterations so far."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass
class OptimizerConfig:
    method: str = "quasi-newton"
    max_iterations: int = 1000
    max_evaluations: int | None = None
    gtol: float = 1e-8
    ftol: float = 1e-12
    patience: int = 20
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    memory: int = 10
    lower: float | np.ndarray | None = None
    upper: float | np.ndarray | None = None
    return_best: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("quasi-newton", "adaptive-moment"):
            raise ValueError(f"unknown optimizer {self.method!r}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.gtol <= 0 or self.ftol < 0:
            raise ValueError("tolerances must be positive")

    @classmethod
    def from_dict(cls, doc: dict) -> "OptimizerConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown optimizer fields: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            out[name] = v.tolist() if isinstance(v, np.ndarray) else v
        return out

    @property
    def bounded(self) -> bool:
        return self.lower is not None or self.upper is not None

    def project(self, x):
        if not self.bounded:
            return x
        lo = -np.inf if self.lower is None else self.lower
        hi = np.inf if self.upper is None else self.upper
        return np.clip(x, lo, hi)


@dataclass
class OptimizerTrace:
    iterations: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    elapsed: list = field(default_factory=list)
    evaluations: list = field(default_factory=list)
    initial_objective: float = float("nan")
    params: np.ndarray | None = None
    final_objective: float = float("nan")
    best_objective: float = float("inf")
    best_params: np.ndarray | None = None
    message: str = ""
    # (alpha, f_old, f_new, g.d) of every accepted quasi-newton step
    steps: list = field(default_factory=list)

    def record(self, it, f, g, t0, nfev):
        self.iterations.append(it)
        self.objective.append(float(f))
        self.grad_norm.append(float(np.linalg.norm(g)))
        self.elapsed.append(time.perf_counter() - t0)
        self.evaluations.append(nfev)

    def __len__(self):
        return len(self.iterations)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "objective", "grad_norm", "elapsed_s"])
        for row in zip(self.iterations, self.objective, self.grad_norm, self.elapsed):
            w.writerow([row[0], f"{row[1]:.17g}", f"{row[2]:.17g}", f"{row[3]:.6f}"])
        return buf.getvalue()


class _BudgetExhausted(Exception):
    pass


class _Counted:
    """Evaluation counter; refuses calls past the budget so it is a hard cap."""

    def __init__(self, fun, trace, budget):
        self.fun = fun
        self.trace = trace
        self.budget = budget
        self.n = 0

    def __call__(self, x):
        if self.exhausted:
            raise _BudgetExhausted
        self.n += 1
        f, g = self.fun(x)
        f = float(f)
        g = np.asarray(g, dtype=float)
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            raise OptimizerAbort(f"non-finite objective or gradient at evaluation {self.n}", self.trace)
        if f < self.trace.best_objective:
            self.trace.best_objective = f
            self.trace.best_params = np.array(x, copy=True)
        return f, g

    @property
    def exhausted(self):
        return self.budget is not None and self.n >= self.budget


def _cubic_min(a, fa, ga, b, fb, gb):
    """Minimizer of the cubic interpolating (a, fa, ga) and (b, fb, gb), or None."""
    d1 = ga + gb - 3.0 * (fa - fb) / (a - b)
    rad = d1 * d1 - ga * gb
    if rad < 0:
        return None
    d2 = np.sign(b - a) * np.sqrt(rad)
    denom = gb - ga + 2.0 * d2
    if denom == 0:
        return None
    return b - (b - a) * (gb + d2 - d1) / denom


def strong_wolfe(phi, f0, g0, alpha1=1.0, c1=C1, c2=C2, max_iter=30):
    """Line search for ``phi(alpha) -> (f, dphi, payload)``.

    Returns ``(alpha, f, payload)`` of a point meeting the strong Wolfe
    conditions, or of the best sufficient-decrease point found; ``None`` if
    nothing decreased.
    """
    a_prev, f_prev, g_prev = 0.0, f0, g0
    alpha = alpha1
    best = None

    def zoom(lo, flo, glo, hi, fhi, ghi, best):
        for _ in range(max_iter):
            a = _cubic_min(lo, flo, glo, hi, fhi, ghi)
            span = abs(hi - lo)
            if a is None or not (min(lo, hi) + 0.1 * span <= a <= max(lo, hi) - 0.1 * span):
                a = 0.5 * (lo + hi)
            fa, ga, pa = phi(a)
            if fa > f0 + c1 * a * g0 or fa >= flo:
                hi, fhi, ghi = a, fa, ga
            else:
                best = (a, fa, pa)
                if abs(ga) <= -c2 * g0:
                    return best
                if ga * (hi - lo) >= 0:
                    hi, fhi, ghi = lo, flo, glo
                lo, flo, glo = a, fa, ga
            if span < 1e-16 * max(1.0, abs(lo)):
                break
        return best

    for i in range(max_iter):
        fa, ga, pa = phi(alpha)
        if fa > f0 + c1 * alpha * g0 or (i > 0 and fa >= f_prev):
            return zoom(a_prev, f_prev, g_prev, alpha, fa, ga, best)
        best = (alpha, fa, pa)
        if abs(ga) <= -c2 * g0:
            return best
        if ga >= 0:
            return zoom(alpha, fa, ga, a_prev, f_prev, g_prev, best)
        a_prev, f_prev, g_prev = alpha, fa, ga
        alpha = 2.0 * alpha
    return best


def _two_loop(g, s_hist, y_hist):
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / np.dot(y, s)
        a = rho * np.dot(s, q)
        q -= a * y
        alphas.append((rho, a))
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y), (rho, a) in zip(zip(s_hist, y_hist), reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return -q


def _line_search(fun, x, f, gd, d, alpha0):
    def phi(a):
        xa = x + a * d
        fa, ga = fun(xa)
        return fa, float(np.dot(ga, d)), (xa, ga)

    return strong_wolfe(phi, f, gd, alpha0)


def _lbfgs(fun: _Counted, x, cfg: OptimizerConfig, trace: OptimizerTrace, t0):
    x = cfg.project(np.asarray(x, dtype=float).copy())
    f, g = fun(x)
    trace.initial_objective = f
    s_hist: deque = deque(maxlen=cfg.memory)
    y_hist: deque = deque(maxlen=cfg.memory)
    history = [f]
    message = "iteration budget exhausted"
    for it in range(1, cfg.max_iterations + 1):
        if np.linalg.norm(g) < cfg.gtol:
            message = "gradient tolerance reached"
            break
        d = _two_loop(g, list(s_hist), list(y_hist))
        gd = float(np.dot(g, d))
        if gd >= 0:
            s_hist.clear()
            y_hist.clear()
            d = -g
            gd = -float(np.dot(g, g))
        alpha0 = 1.0 if s_hist else min(1.0, 1.0 / max(np.linalg.norm(g), 1e-300))

        try:
            if cfg.bounded:
                result = _projected_armijo(fun, x, f, g, d, alpha0, cfg)
            else:
                result = _line_search(fun, x, f, gd, d, alpha0)
        except _BudgetExhausted:
            message = "evaluation budget exhausted"
            break
        if result is None:
            message = "line search failed to decrease the objective"
            break
        alpha, f_new, (x_new, g_new) = result
        trace.steps.append((alpha, f, f_new, alpha * gd))
        s = x_new - x
        y = g_new - g
        if np.dot(s, y) > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            s_hist.append(s)
            y_hist.append(y)
        x, f, g = x_new, f_new, g_new
        history.append(f)
        trace.record(it, f, g, t0, fun.n)
        if len(history) > cfg.patience and history[-cfg.patience - 1] - f < cfg.ftol:
            message = "objective improvement below tolerance"
            break
        if fun.exhausted:
            message = "evaluation budget exhausted"
            break
    return x, f, message


def _projected_armijo(fun, x, f, g, d, alpha, cfg, shrink=0.5, max_iter=40):
    for _ in range(max_iter):
        xa = cfg.project(x + alpha * d)
        fa, ga = fun(xa)
        if fa <= f + C1 * np.dot(g, xa - x):
            return alpha, fa, (xa, ga)
        alpha *= shrink
    return None


def _adam(fun: _Counted, x, cfg: OptimizerConfig, trace: OptimizerTrace, t0):
    x = cfg.project(np.asarray(x, dtype=float).copy())
    f, g = fun(x)
    trace.initial_objective = f
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    best_hist = [f]
    message = "iteration budget exhausted"
    for it in range(1, cfg.max_iterations + 1):
        if np.linalg.norm(g) < cfg.gtol:
            message = "gradient tolerance reached"
            break
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g
        m_hat = m / (1.0 - cfg.beta1**it)
        v_hat = v / (1.0 - cfg.beta2**it)
        x_new = cfg.project(x - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon))
        try:
            f, g = fun(x_new)
        except _BudgetExhausted:
            message = "evaluation budget exhausted"
            break
        x = x_new
        trace.record(it, f, g, t0, fun.n)
        best_hist.append(min(best_hist[-1], f))
        if cfg.ftol > 0 and len(best_hist) > cfg.patience and best_hist[-cfg.patience - 1] - best_hist[-1] < cfg.ftol:
            message = "objective improvement below tolerance"
            break
        if fun.exhausted:
            message = "evaluation budget exhausted"
            break
    return x, f, message


def minimize(fun: Callable, x0, config: OptimizerConfig | None = None):
    """Minimize ``fun(theta) -> (value, gradient)`` from ``x0``.

    Returns ``(theta_star, trace)``. Raises :class:`OptimizerAbort` on a
    non-finite value or gradient.
    """
    cfg = config or OptimizerConfig()
    trace = OptimizerTrace()
    counted = _Counted(fun, trace, cfg.max_evaluations)
    t0 = time.perf_counter()
    run = _lbfgs if cfg.method == "quasi-newton" else _adam
    x, f, message = run(counted, x0, cfg, trace, t0)
    if cfg.return_best and trace.best_params is not None and trace.best_objective < f:
        x, f = trace.best_params.copy(), trace.best_objective
    trace.params = x
    trace.final_objective = f
    trace.message = message
    return x, trace


def initial_params(n: int, seed: int, scale: float = 1.0) -> np.ndarray:
    """Uniform(-1, 1) draws times ``scale`` from a seeded PCG64 stream."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return scale * rng.uniform(-1.0, 1.0, n)
