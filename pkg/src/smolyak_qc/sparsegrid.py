"""Sampling sets for expectations over uncertainty coordinates.

Three kinds share one container: Smolyak sparse grids built with the
combination formula, full tensor (dense) Gauss grids, and Monte Carlo
batches. All nodes live in standardized coordinates; mapping to physical
uncertainty values happens in :mod:`smolyak_qc.objective`.
"""

from __future__ import annotations

import io
import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Sequence

import numpy as np

from .quadrature import InvalidArgument, Measure, Rule1D

MERGE_TOL = 1e-12
PRUNE_TOL = 1e-14
DENSE_CAP = 10**6
RNG_ALGORITHM = "numpy.random.PCG64"


class ResourceLimitError(RuntimeError):
    pass


@dataclass(frozen=True)
class SamplingSet:
    """Weighted nodes: ``nodes`` has shape ``(N, d)``, ``weights`` shape ``(N,)``."""

    kind: str
    nodes: np.ndarray
    weights: np.ndarray
    measures: tuple[Measure, ...]
    level: int | None = None
    info: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    def __len__(self) -> int:
        return len(self.weights)

    def describe(self) -> dict:
        out = {
            "kind": self.kind,
            "dim": self.dim,
            "n_nodes": len(self),
            "measures": [str(m) for m in self.measures],
        }
        if self.level is not None:
            out["level"] = self.level
        out.update(self.info)
        return out


def growth(level: int) -> int:
    """1D rule order used at a Smolyak level (non-nested Gauss, order = level)."""
    return level


def _measures(d: int, rule_family) -> tuple[Measure, ...]:
    if rule_family is None:
        rule_family = Measure()
    if isinstance(rule_family, str):
        rule_family = Measure.parse(rule_family)
    if isinstance(rule_family, Measure):
        return (rule_family,) * d
    ms = tuple(Measure.parse(m) if isinstance(m, str) else m for m in rule_family)
    if len(ms) != d:
        raise InvalidArgument(f"need {d} measures, got {len(ms)}")
    return ms


def smolyak_indices(d: int, K: int):
    """Yield ``(multi_index, coefficient)`` pairs of the combination formula."""
    lo, hi = max(K, d), K + d - 1
    for total in range(lo, hi + 1):
        coef = (-1) ** (hi - total) * comb(d - 1, total - K)
        if coef == 0:
            continue
        for idx in _compositions(total, d):
            yield idx, coef


def _compositions(total: int, parts: int):
    """All tuples of ``parts`` positive integers summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def smolyak_grid(d: int, K: int, rule_family=None) -> SamplingSet:
    """Smolyak sparse grid of level ``K`` in ``d`` dimensions.

    Coincident nodes (within ``MERGE_TOL`` per coordinate) are merged by
    summing weights; merged weights below ``PRUNE_TOL`` in magnitude are
    dropped. Weights can be negative.
    """
    if int(d) != d or d < 1 or int(K) != K or K < 1:
        raise InvalidArgument(f"need positive integers d, K; got d={d}, K={K}")
    d, K = int(d), int(K)
    measures = _measures(d, rule_family)
    rules: dict[tuple[Measure, int], Rule1D] = {}

    def rule(m: Measure, level: int) -> Rule1D:
        key = (m, growth(level))
        if key not in rules:
            rules[key] = m.rule(growth(level))
        return rules[key]

    # canonical id per distinct 1D abscissa, per dimension
    max_level = K
    canon = []
    for m in measures:
        values = np.concatenate([rule(m, lv).nodes for lv in range(1, max_level + 1)])
        values = np.sort(values)
        reps = [values[0]]
        for v in values[1:]:
            if v - reps[-1] > MERGE_TOL:
                reps.append(v)
        canon.append(np.array(reps))

    acc: dict[tuple[int, ...], float] = {}
    for idx, coef in smolyak_indices(d, K):
        parts = [rule(measures[k], idx[k]) for k in range(d)]
        ids = [np.searchsorted(canon[k] - MERGE_TOL, parts[k].nodes) - 1 for k in range(d)]
        for combo in itertools.product(*(range(p.order) for p in parts)):
            key = tuple(int(ids[k][c]) for k, c in enumerate(combo))
            w = coef
            for k, c in enumerate(combo):
                w *= parts[k].weights[c]
            acc[key] = acc.get(key, 0.0) + w

    keys = sorted(k for k, w in acc.items() if abs(w) >= PRUNE_TOL)
    nodes = np.array([[canon[k][i] for k, i in enumerate(key)] for key in keys], dtype=float)
    weights = np.array([acc[key] for key in keys], dtype=float)
    return SamplingSet("smolyak", nodes.reshape(-1, d), weights, measures, level=K)


def dense_grid(d: int, orders: Sequence[int] | int, rule_family=None, cap: int = DENSE_CAP) -> SamplingSet:
    """Full tensor-product Gauss grid; a node's weight is the product of 1D weights."""
    if isinstance(orders, (int, np.integer)):
        orders = [int(orders)] * d
    orders = [int(n) for n in orders]
    if len(orders) != d or min(orders) < 1:
        raise InvalidArgument(f"need {d} positive orders, got {orders}")
    total = int(np.prod(orders, dtype=object))
    if total > cap:
        raise ResourceLimitError(f"dense grid of {total} nodes exceeds cap {cap}")
    measures = _measures(d, rule_family)
    parts = [m.rule(n) for m, n in zip(measures, orders)]
    mesh = np.meshgrid(*(p.nodes for p in parts), indexing="ij")
    wmesh = np.meshgrid(*(p.weights for p in parts), indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    weights = np.prod(np.stack([w.ravel() for w in wmesh], axis=1), axis=1)
    return SamplingSet("dense", nodes, weights, measures, info={"orders": orders})


def monte_carlo_set(d: int, N: int, distributions=None, seed: int = 0) -> SamplingSet:
    """``N`` i.i.d. draws, each weighted ``1/N``. Deterministic in ``seed``."""
    if int(N) != N or N < 1:
        raise InvalidArgument(f"sample count must be positive, got {N}")
    measures = _measures(d, distributions)
    rng = np.random.Generator(np.random.PCG64(seed))
    nodes = np.empty((int(N), d))
    for k, m in enumerate(measures):
        nodes[:, k] = m.sample(rng, int(N))
    weights = np.full(int(N), 1.0 / N)
    return SamplingSet("monte-carlo", nodes, weights, measures, info={"seed": int(seed), "rng": RNG_ALGORITHM})


def _evaluate(sset: SamplingSet, g: Callable, vectorized: bool) -> np.ndarray:
    if vectorized:
        return np.asarray(g(sset.nodes), dtype=float)
    return np.array([g(x) for x in sset.nodes], dtype=float)


def estimate(sset: SamplingSet, g: Callable, vectorized: bool = False) -> float:
    """Weighted sum of ``g`` over the set's nodes."""
    if len(sset) == 0:
        raise InvalidArgument("empty sampling set")
    return float(np.dot(sset.weights, _evaluate(sset, g, vectorized)))


def estimate_moment(sset: SamplingSet, g: Callable, power: int, vectorized: bool = False) -> float:
    if int(power) != power or power < 1:
        raise InvalidArgument(f"moment power must be a positive integer, got {power}")
    return float(np.dot(sset.weights, _evaluate(sset, g, vectorized) ** int(power)))


def variance(sset: SamplingSet, g: Callable, vectorized: bool = False) -> float:
    """``E[g**2] - E[g]**2`` from a single pass of evaluations."""
    values = _evaluate(sset, g, vectorized)
    m1 = float(np.dot(sset.weights, values))
    m2 = float(np.dot(sset.weights, values * values))
    return m2 - m1 * m1


def to_csv(sset: SamplingSet) -> str:
    buf = io.StringIO()
    level = "" if sset.level is None else sset.level
    buf.write("# dim,level,kind\n")
    buf.write(f"# {sset.dim},{level},{sset.kind}\n")
    for x, w in zip(sset.nodes, sset.weights):
        buf.write(",".join(f"{v:.17g}" for v in (*x, w)) + "\n")
    return buf.getvalue()


def write_csv(sset: SamplingSet, path) -> None:
    with open(path, "w") as fh:
        fh.write(to_csv(sset))


def read_csv(path) -> tuple[dict, np.ndarray, np.ndarray]:
    """Return ``(header, nodes, weights)`` from a grid CSV."""
    header = {}
    rows = []
    with open(path) as fh:
        comments = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                comments.append(line[1:].strip())
                continue
            rows.append([float(v) for v in line.split(",")])
    if len(comments) >= 2:
        header = dict(zip(comments[0].split(","), comments[1].split(",")))
    data = np.array(rows, dtype=float)
    return header, data[:, :-1], data[:, -1]
