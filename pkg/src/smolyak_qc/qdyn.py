"""Small closed quantum systems: Hamiltonians, propagators and their derivatives.

Units: angular frequency with hbar = 1. Two-qubit operators put qubit 1 in
the left tensor factor, so the basis order is |00>, |01>, |10>, |11>.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .kernels import propagate_nodes
from .quadrature import InvalidArgument

HERMITIAN_TOL = 1e-12

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# commutator-free 4th-order scheme (two exponentials per step)
_CF4_C = (0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6)
_CF4_A = (0.25 + np.sqrt(3) / 6, 0.25 - np.sqrt(3) / 6)


def pauli(name: str) -> np.ndarray:
    try:
        return _PAULI[name.upper()].copy()
    except KeyError:
        raise InvalidArgument(f"unknown Pauli operator {name!r}") from None


def two_qubit(op_a, op_b) -> np.ndarray:
    """Tensor product with ``op_a`` acting on qubit 1 (left factor)."""
    a = pauli(op_a) if isinstance(op_a, str) else np.asarray(op_a)
    b = pauli(op_b) if isinstance(op_b, str) else np.asarray(op_b)
    return np.kron(a, b)


def is_hermitian(H, tol=HERMITIAN_TOL) -> bool:
    H = np.asarray(H)
    return H.ndim == 2 and H.shape[0] == H.shape[1] and np.max(np.abs(H - H.conj().T), initial=0.0) <= tol


def expm_hermitian(H, t: float = 1.0) -> np.ndarray:
    """``exp(-i H t)`` through the eigendecomposition of a Hermitian ``H``."""
    H = np.asarray(H, dtype=complex)
    if not is_hermitian(H, 1e-9):
        raise InvalidArgument("matrix is not Hermitian")
    w, V = np.linalg.eigh(0.5 * (H + H.conj().T))
    return (V * np.exp(-1j * w * t)) @ V.conj().T


def unitarity_error(U) -> float:
    U = np.asarray(U)
    return float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0])))


@dataclass(frozen=True)
class HamiltonianModel:
    """``H = H0 + sum_l d_l V_l + sum_j (1 + sum_l c_jl d_l) u_j(t) H_cj``.

    ``control_scaling`` (``c_jl``) carries multiplicative amplitude
    uncertainties; additive ones live in ``uncertainties``. An uncertainty
    may be purely multiplicative, in which case its ``V_l`` is zero.
    """

    H0: np.ndarray
    controls: tuple
    uncertainties: tuple = ()
    control_scaling: np.ndarray | None = None
    control_labels: tuple[str, ...] = ()
    uncertainty_labels: tuple[str, ...] = ()

    def __post_init__(self):
        H0 = np.asarray(self.H0, dtype=complex)
        dim = H0.shape[0]
        controls = tuple(np.asarray(h, dtype=complex) for h in self.controls)
        uncs = tuple(np.asarray(v, dtype=complex) for v in self.uncertainties)
        for name, mats in (("H0", (H0,)), ("control", controls), ("uncertainty", uncs)):
            for m in mats:
                if m.shape != (dim, dim):
                    raise InvalidArgument(f"{name} operator has shape {m.shape}, expected {(dim, dim)}")
                if not is_hermitian(m):
                    raise InvalidArgument(f"{name} operator is not Hermitian")
        scaling = self.control_scaling
        if scaling is None:
            scaling = np.zeros((len(controls), len(uncs)))
        scaling = np.asarray(scaling, dtype=float).reshape(len(controls), len(uncs))
        object.__setattr__(self, "H0", H0)
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "uncertainties", uncs)
        object.__setattr__(self, "control_scaling", scaling)

    @property
    def dim(self) -> int:
        return self.H0.shape[0]

    @property
    def n_controls(self) -> int:
        return len(self.controls)

    @property
    def n_uncertainties(self) -> int:
        return len(self.uncertainties)

    def _deltas(self, deltas) -> np.ndarray:
        deltas = np.atleast_2d(np.asarray(deltas, dtype=float))
        if self.n_uncertainties == 0 and deltas.size == 0:
            return np.zeros((max(deltas.shape[0], 1), 0))
        if deltas.shape[1] != self.n_uncertainties:
            raise InvalidArgument(f"expected {self.n_uncertainties} uncertainty values, got {deltas.shape[1]}")
        return deltas

    def batch(self, deltas):
        """Static parts ``(N, dim, dim)`` and scaled control operators ``(N, nch, dim, dim)``."""
        deltas = self._deltas(deltas)
        h_static = np.broadcast_to(self.H0, (len(deltas), self.dim, self.dim)).copy()
        if self.n_uncertainties:
            h_static += np.einsum("nl,lab->nab", deltas, np.stack(self.uncertainties))
        scale = 1.0 + deltas @ self.control_scaling.T
        ctrl = scale[:, :, None, None] * np.stack(self.controls)[None]
        return h_static, ctrl

    def total(self, u, deltas=None) -> np.ndarray:
        if deltas is None:
            deltas = np.zeros(self.n_uncertainties)
        h_static, ctrl = self.batch(deltas)
        return h_static[0] + np.tensordot(np.asarray(u, dtype=float), ctrl[0], axes=1)


@dataclass(frozen=True)
class PropagationGrid:
    """Uniform time grid on ``[0, T]`` with ``steps`` sub-intervals.

    ``scheme="midpoint"`` samples controls at sub-interval midpoints and is
    exact for piecewise-constant pulses aligned with the grid.
    ``scheme="cf4"`` is a fourth-order commutator-free scheme: two
    exponentials per sub-interval built from samples at the Gauss points.
    """

    T: float
    steps: int
    scheme: str = "midpoint"

    def __post_init__(self):
        if self.steps < 1 or not self.T > 0:
            raise InvalidArgument(f"need T > 0 and steps >= 1, got T={self.T}, steps={self.steps}")
        if self.scheme not in ("midpoint", "cf4"):
            raise InvalidArgument(f"unknown scheme {self.scheme!r}")

    @property
    def dt(self) -> float:
        return self.T / self.steps

    @property
    def tau(self) -> float:
        """Duration of a single exponential."""
        return self.dt if self.scheme == "midpoint" else 0.5 * self.dt

    def refined(self, factor: int = 2) -> "PropagationGrid":
        return PropagationGrid(self.T, self.steps * factor, self.scheme)

    def sample_times(self) -> np.ndarray:
        m = np.arange(self.steps)
        if self.scheme == "midpoint":
            return (m + 0.5) * self.dt
        c1, c2 = _CF4_C
        return np.stack([(m + c1) * self.dt, (m + c2) * self.dt], axis=1).ravel()

    def mix(self, samples: np.ndarray) -> np.ndarray:
        """Map control samples (leading axis over sample times) to per-exponential amplitudes."""
        if self.scheme == "midpoint":
            return samples
        a1, a2 = _CF4_A
        s = samples.reshape((self.steps, 2) + samples.shape[1:])
        first = 2.0 * (a1 * s[:, 0] + a2 * s[:, 1])
        second = 2.0 * (a2 * s[:, 0] + a1 * s[:, 1])
        return np.stack([first, second], axis=1).reshape(samples.shape)


def _sampled(pulses, grid: PropagationGrid, n_controls: int) -> np.ndarray:
    times = grid.sample_times()
    if hasattr(pulses, "samples"):
        samples = pulses.samples(times)
    else:
        funcs: Sequence[Callable[[float], float]] = pulses
        samples = np.array([[f(t) for f in funcs] for t in times], dtype=float).reshape(len(times), len(funcs))
    if samples.shape[1] != n_controls:
        raise InvalidArgument(f"model has {n_controls} control channels, pulses provide {samples.shape[1]}")
    return grid.mix(samples)


def propagate_batch(model: HamiltonianModel, pulses, deltas, grid: PropagationGrid, backend=None) -> np.ndarray:
    """Final propagators ``(N, dim, dim)`` for a batch of uncertainty values."""
    amps = _sampled(pulses, grid, model.n_controls)
    h_static, ctrl = model.batch(deltas)
    U, _ = propagate_nodes(h_static, ctrl, amps, grid.tau, False, backend)
    return U


def propagate(model: HamiltonianModel, pulses, uncertainty_values, grid: PropagationGrid, backend=None) -> np.ndarray:
    """U(T) for one set of uncertainty values.

    ``pulses`` is a pulse object or a sequence of per-channel callables ``t -> u``.
    """
    return propagate_batch(model, pulses, [uncertainty_values], grid, backend)[0]


def step_jacobian(pulse, grid: PropagationGrid) -> np.ndarray:
    """Derivative of per-exponential amplitudes w.r.t. pulse parameters: ``(S, nch, P)``."""
    return grid.mix(pulse.sample_jacobian(grid.sample_times()))


def propagate_batch_with_gradient(model, pulse, deltas, grid, backend=None):
    """``U`` of shape ``(N, dim, dim)`` and raw step derivatives ``(N, S, nch, dim, dim)``."""
    amps = _sampled(pulse, grid, model.n_controls)
    h_static, ctrl = model.batch(deltas)
    return propagate_nodes(h_static, ctrl, amps, grid.tau, True, backend)


def propagate_with_gradient(model: HamiltonianModel, pulse, uncertainty_values, grid: PropagationGrid, backend=None):
    """U(T) and its derivatives ``(P, dim, dim)`` with respect to the pulse parameters."""
    U, D = propagate_batch_with_gradient(model, pulse, [uncertainty_values], grid, backend)
    dU = np.einsum("sjk,sjab->kab", step_jacobian(pulse, grid), D[0])
    return U[0], dU
