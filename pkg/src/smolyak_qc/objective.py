"""Gate infidelities and the robust (expected-infidelity) objective."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import qdyn
from .quadrature import InvalidArgument, Measure
from .sparsegrid import SamplingSet

METRICS = ("phi1", "phi2", "phi3")


class DegenerateGradient(ArithmeticError):
    pass


def _overlap(U_F, U) -> complex:
    U_F = np.asarray(U_F)
    U = np.asarray(U)
    if U_F.shape != U.shape[-2:]:
        raise InvalidArgument(f"dimension mismatch: {U_F.shape} vs {U.shape}")
    return np.einsum("ab,...ab->...", U_F.conj(), U)


def phi1(U_F, U):
    """Squared Frobenius distance ``||U_F - U||^2``."""
    dim = np.shape(U_F)[0]
    return 2.0 * dim - 2.0 * np.real(_overlap(U_F, U))


def phi2(U_F, U):
    """Frobenius distance minimized over a global phase."""
    dim = np.shape(U_F)[0]
    return 2.0 * dim - 2.0 * np.abs(_overlap(U_F, U))


def phi3(U_F, U):
    """``1 - |Tr(U_F^dag U) / dim|^2``."""
    dim = np.shape(U_F)[0]
    return 1.0 - np.abs(_overlap(U_F, U) / dim) ** 2


_METRIC_FN = {"phi1": phi1, "phi2": phi2, "phi3": phi3}


def metric_value(metric: str, U_F, U):
    try:
        return _METRIC_FN[metric](U_F, U)
    except KeyError:
        raise InvalidArgument(f"unknown metric {metric!r}") from None


def metric_overlap_derivative(metric: str, overlap: np.ndarray, dim: int) -> np.ndarray:
    """Complex ``c`` with ``dPhi = Re(c * d overlap)`` for overlap ``Tr(U_F^dag U)``."""
    overlap = np.asarray(overlap)
    if metric == "phi1":
        return np.full(overlap.shape, -2.0 + 0.0j)
    if metric == "phi2":
        mag = np.abs(overlap)
        if np.any(mag < 1e-12):
            raise DegenerateGradient("phi2 is not differentiable where Tr(U_F^dag U) = 0")
        return -2.0 * np.conj(overlap) / mag
    if metric == "phi3":
        return -2.0 * np.conj(overlap) / dim**2
    raise InvalidArgument(f"unknown metric {metric!r}")


@dataclass(frozen=True)
class Uncertainty:
    """One uncertainty coordinate: ``delta = center + scale * eps``.

    Uniform channels use ``eps`` uniform on ``[-0.5, 0.5]`` and
    ``scale = high - low``; normal channels use ``eps ~ N(0, 1)`` and
    ``scale = sigma``.
    """

    label: str
    kind: str = "uniform"
    center: float = 0.0
    scale: float = 0.0

    @classmethod
    def uniform(cls, label: str, low: float, high: float) -> "Uncertainty":
        if high < low:
            raise InvalidArgument(f"uniform range [{low}, {high}] is reversed")
        return cls(label, "uniform", 0.5 * (low + high), high - low)

    @classmethod
    def normal(cls, label: str, sigma: float, mean: float = 0.0) -> "Uncertainty":
        if sigma < 0:
            raise InvalidArgument("negative standard deviation")
        return cls(label, "normal", mean, sigma)

    @property
    def measure(self) -> Measure:
        return Measure("normal") if self.kind == "normal" else Measure("uniform", -0.5, 0.5)

    def to_dict(self) -> dict:
        if self.kind == "normal":
            return {"label": self.label, "kind": "normal", "mean": self.center, "sigma": self.scale}
        return {
            "label": self.label,
            "kind": "uniform",
            "low": self.center - 0.5 * self.scale,
            "high": self.center + 0.5 * self.scale,
        }


@dataclass(frozen=True)
class UncertaintyModel:
    channels: tuple[Uncertainty, ...]

    @property
    def dim(self) -> int:
        return len(self.channels)

    @property
    def measures(self) -> tuple[Measure, ...]:
        return tuple(c.measure for c in self.channels)

    def physical(self, eps) -> np.ndarray:
        eps = np.atleast_2d(np.asarray(eps, dtype=float))
        center = np.array([c.center for c in self.channels])
        scale = np.array([c.scale for c in self.channels])
        return center + scale * eps


@dataclass(frozen=True)
class RobustObjective:
    """Expected infidelity of a pulse family over a sampling set.

    ``pulse`` fixes the family and shape; its coefficients are replaced by
    the parameter vector ``theta`` at each evaluation.
    """

    model: qdyn.HamiltonianModel
    pulse: object
    grid: qdyn.PropagationGrid
    target: np.ndarray
    uncertainty: UncertaintyModel
    sampling: SamplingSet
    metric: str = "phi2"
    backend: str | None = None

    def __post_init__(self):
        if self.metric not in METRICS:
            raise InvalidArgument(f"unknown metric {self.metric!r}")
        if self.sampling.dim != self.uncertainty.dim:
            raise InvalidArgument(
                f"sampling dimension {self.sampling.dim} != number of uncertainties {self.uncertainty.dim}"
            )
        if self.uncertainty.dim != self.model.n_uncertainties:
            raise InvalidArgument("uncertainty model does not match the Hamiltonian")
        target = np.asarray(self.target, dtype=complex)
        if target.shape != (self.model.dim, self.model.dim) or qdyn.unitarity_error(target) > 1e-9:
            raise InvalidArgument("target must be a unitary of the system dimension")
        object.__setattr__(self, "target", target)

    @property
    def n_params(self) -> int:
        return self.pulse.n_params

    def with_sampling(self, sampling: SamplingSet) -> "RobustObjective":
        return replace(self, sampling=sampling)

    def _pulse(self, theta):
        return self.pulse if theta is None else self.pulse.with_params(theta)

    def _deltas(self, sampling):
        sampling = self.sampling if sampling is None else sampling
        return sampling, self.uncertainty.physical(sampling.nodes)

    def unitaries(self, theta=None, sampling: SamplingSet | None = None) -> np.ndarray:
        sampling, deltas = self._deltas(sampling)
        return qdyn.propagate_batch(self.model, self._pulse(theta), deltas, self.grid, self.backend)

    def infidelities(self, theta=None, sampling: SamplingSet | None = None) -> np.ndarray:
        """Pointwise infidelity at each node of the sampling set."""
        return metric_value(self.metric, self.target, self.unitaries(theta, sampling))

    def infidelity_at(self, theta, deltas) -> np.ndarray:
        """Pointwise infidelity at physical uncertainty values ``(N, d)``."""
        U = qdyn.propagate_batch(self.model, self._pulse(theta), deltas, self.grid, self.backend)
        return metric_value(self.metric, self.target, U)

    def expected(self, theta=None, sampling: SamplingSet | None = None) -> float:
        sampling = self.sampling if sampling is None else sampling
        return float(np.dot(sampling.weights, self.infidelities(theta, sampling)))

    def moment(self, power: int, theta=None, sampling: SamplingSet | None = None) -> float:
        sampling = self.sampling if sampling is None else sampling
        return float(np.dot(sampling.weights, self.infidelities(theta, sampling) ** power))

    def variance(self, theta=None, sampling: SamplingSet | None = None) -> float:
        sampling = self.sampling if sampling is None else sampling
        values = self.infidelities(theta, sampling)
        m1 = float(np.dot(sampling.weights, values))
        return float(np.dot(sampling.weights, values * values)) - m1 * m1

    def value_and_grad(self, theta=None, sampling: SamplingSet | None = None):
        """Expected infidelity and its gradient w.r.t. the pulse parameters."""
        sampling, deltas = self._deltas(sampling)
        pulse = self._pulse(theta)
        U, D = qdyn.propagate_batch_with_gradient(self.model, pulse, deltas, self.grid, self.backend)
        overlap = _overlap(self.target, U)
        values = metric_value(self.metric, self.target, U)
        coef = metric_overlap_derivative(self.metric, overlap, self.model.dim)
        # d overlap / d step amplitude, then chain to parameters
        d_overlap = np.einsum("ab,nsjab->nsj", self.target.conj(), D)
        weighted = np.einsum("n,n,nsj->sj", sampling.weights, coef, d_overlap).real
        grad = np.einsum("sj,sjk->k", weighted, qdyn.step_jacobian(pulse, self.grid))
        return float(np.dot(sampling.weights, values)), grad

    def gradient(self, theta=None, sampling: SamplingSet | None = None) -> np.ndarray:
        return self.value_and_grad(theta, sampling)[1]
