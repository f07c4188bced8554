"""One-dimensional Gaussian rules normalized to probability measures.

Nodes come from Newton iteration on the three-term recurrence of the
measure's orthogonal polynomials, seeded with the eigenvalues of the Jacobi
matrix. Weights always sum to one, so a rule directly estimates an
expectation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

NEWTON_TOL = 1e-15
NEWTON_MAXITER = 100


class InvalidArgument(ValueError):
    pass


@dataclass(frozen=True)
class Measure:
    """Probability measure of one standardized uncertainty coordinate.

    ``kind`` is ``"uniform"`` (density ``1/(b-a)`` on ``[a, b]``) or
    ``"normal"`` (standard normal; ``a`` and ``b`` are ignored).
    """

    kind: str = "uniform"
    a: float = -0.5
    b: float = 0.5

    def __post_init__(self):
        if self.kind not in ("uniform", "normal"):
            raise InvalidArgument(f"unknown measure kind {self.kind!r}")
        if self.kind == "uniform" and not self.a < self.b:
            raise InvalidArgument(f"empty interval [{self.a}, {self.b}]")

    @classmethod
    def parse(cls, text: str) -> "Measure":
        """Parse ``legendre[:a:b]``, ``uniform[:a:b]``, ``hermite`` or ``normal``."""
        parts = text.strip().lower().split(":")
        head = parts[0]
        if head in ("hermite", "normal", "gauss-hermite"):
            if len(parts) != 1:
                raise InvalidArgument(f"normal measure takes no bounds: {text!r}")
            return cls("normal")
        if head in ("legendre", "uniform", "gauss-legendre"):
            if len(parts) == 1:
                return cls("uniform")
            if len(parts) != 3:
                raise InvalidArgument(f"expected legendre:a:b, got {text!r}")
            try:
                a, b = float(parts[1]), float(parts[2])
            except ValueError as exc:
                raise InvalidArgument(f"bad interval in {text!r}") from exc
            return cls("uniform", a, b)
        raise InvalidArgument(f"unknown measure {text!r}")

    def __str__(self) -> str:
        if self.kind == "normal":
            return "hermite"
        return f"legendre:{self.a!r}:{self.b!r}"

    @property
    def center(self) -> float:
        return 0.0 if self.kind == "normal" else 0.5 * (self.a + self.b)

    def rule(self, n: int) -> "Rule1D":
        if self.kind == "normal":
            return gauss_hermite_prob(n)
        return gauss_legendre(n, (self.a, self.b))

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "normal":
            return rng.standard_normal(size)
        return rng.uniform(self.a, self.b, size)

    def moment(self, k: int) -> float:
        """Exact raw moment ``E[x**k]``."""
        if self.kind == "normal":
            if k % 2:
                return 0.0
            return float(math.prod(range(k - 1, 0, -2))) if k else 1.0
        a, b = self.a, self.b
        return (b ** (k + 1) - a ** (k + 1)) / ((k + 1) * (b - a))


@dataclass(frozen=True)
class Rule1D:
    nodes: np.ndarray
    weights: np.ndarray
    measure: Measure = field(default_factory=Measure)

    @property
    def order(self) -> int:
        return len(self.nodes)


def _legendre(n: int, x: np.ndarray):
    """P_n(x) and P_n'(x) by the Bonnet recurrence."""
    p0 = np.ones_like(x)
    p1 = x.copy()
    if n == 0:
        return p0, np.zeros_like(x)
    for k in range(1, n):
        p0, p1 = p1, ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


def _hermite_orthonormal(n: int, x: np.ndarray):
    """Orthonormal probabilists' Hermite p_n, p_{n-1} and sum_{k<n} p_k**2."""
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    christoffel = np.zeros_like(x)
    for k in range(n):
        christoffel += p * p
        p_prev, p = p, (x * p - math.sqrt(k) * p_prev) / math.sqrt(k + 1)
    return p, p_prev, christoffel


def _newton(x: np.ndarray, step: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    for _ in range(NEWTON_MAXITER):
        dx = step(x)
        x = x - dx
        if np.max(np.abs(dx)) <= NEWTON_TOL * max(1.0, np.max(np.abs(x))):
            break
    return x


def _symmetrize(x: np.ndarray) -> np.ndarray:
    x = np.sort(x)
    x = 0.5 * (x - x[::-1])
    if len(x) % 2:
        x[len(x) // 2] = 0.0
    return x


def _jacobi_guess(n: int, offdiag: np.ndarray) -> np.ndarray:
    if n == 1:
        return np.zeros(1)
    jac = np.diag(offdiag, 1) + np.diag(offdiag, -1)
    return np.linalg.eigvalsh(jac)


def gauss_legendre(n: int, interval: tuple[float, float] = (-0.5, 0.5)) -> Rule1D:
    """n-point Gauss-Legendre rule for the uniform probability measure on ``interval``.

    Exact for polynomials of degree up to ``2n - 1``.
    """
    if int(n) != n or n < 1:
        raise InvalidArgument(f"rule order must be a positive integer, got {n}")
    n = int(n)
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise InvalidArgument(f"empty interval [{a}, {b}]")
    k = np.arange(1, n)
    x = _jacobi_guess(n, k / np.sqrt(4.0 * k * k - 1.0))

    def step(x):
        p, dp = _legendre(n, x)
        return p / dp

    if n > 1:
        x = _symmetrize(_newton(x, step))
        _, dp = _legendre(n, x)
        w = 1.0 / ((1.0 - x * x) * dp * dp)
    else:
        w = np.ones(1)
    w = w / w.sum()
    w = 0.5 * (w + w[::-1])
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * x
    if n % 2:
        nodes[n // 2] = 0.5 * (a + b)
    return Rule1D(nodes, w, Measure("uniform", a, b))


def gauss_hermite_prob(n: int) -> Rule1D:
    """n-point Gauss-Hermite rule for the standard normal density.

    Exact for polynomials of degree up to ``2n - 1``.
    """
    if int(n) != n or n < 1:
        raise InvalidArgument(f"rule order must be a positive integer, got {n}")
    n = int(n)
    x = _jacobi_guess(n, np.sqrt(np.arange(1, n, dtype=float)))

    def step(x):
        p, p_prev, _ = _hermite_orthonormal(n, x)
        return p / (math.sqrt(n) * p_prev)

    if n > 1:
        x = _symmetrize(_newton(x, step))
    _, _, christoffel = _hermite_orthonormal(n, x)
    w = 1.0 / christoffel
    w = w / w.sum()
    w = 0.5 * (w + w[::-1])
    return Rule1D(x, w, Measure("normal"))


def integrate_1d(rule: Rule1D, f: Callable[[float], float]) -> float:
    """Weighted sum ``sum_j w_j f(x_j)``."""
    values = np.array([f(x) for x in rule.nodes], dtype=float)
    return float(np.dot(rule.weights, values))
