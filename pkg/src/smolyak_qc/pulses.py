"""Control pulse families.

Both families are linear in their parameters, so the parameter Jacobian of
the sampled amplitudes does not depend on the current coefficients.

Flat parameter layout: channels are concatenated in order; within a Fourier
channel the block is ``[a_0, a_1..a_N, b_1..b_N]``, within a piecewise
channel it is the segment amplitudes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np


class FixtureError(ValueError):
    """A pulse file does not match the expected family or shape."""


class PulseDomainError(ValueError):
    pass


def envelope(t, T_p):
    return np.sin(np.pi * np.asarray(t, dtype=float) / T_p) ** 2


@dataclass(frozen=True)
class FourierPulse:
    T_p: float
    N: int
    coeffs: np.ndarray  # (nch, 2N+1)
    labels: tuple[str, ...] = ()

    family = "fourier"

    def __post_init__(self):
        coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if coeffs.shape[1] != 2 * self.N + 1:
            raise FixtureError(f"expected {2 * self.N + 1} coefficients per channel, got {coeffs.shape[1]}")
        object.__setattr__(self, "coeffs", coeffs)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"u{j}" for j in range(coeffs.shape[0])))

    @classmethod
    def zeros(cls, T_p: float, N: int, nch: int, labels=()):
        return cls(T_p, N, np.zeros((nch, 2 * N + 1)), tuple(labels))

    @property
    def n_channels(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n_params(self) -> int:
        return self.coeffs.size

    @property
    def horizon(self) -> float:
        return self.T_p

    @property
    def params(self) -> np.ndarray:
        return self.coeffs.ravel().copy()

    def with_params(self, theta) -> "FourierPulse":
        theta = np.asarray(theta, dtype=float)
        return replace(self, coeffs=theta.reshape(self.coeffs.shape).copy())

    def basis(self, t) -> np.ndarray:
        """Rows ``[G, G cos(2 pi t/T_p) .. G cos(2N pi t/T_p), G sin(..) ..]``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        n = np.arange(1, self.N + 1)
        arg = 2.0 * np.pi * np.outer(t, n) / self.T_p
        G = envelope(t, self.T_p)[:, None]
        return G * np.hstack([np.ones((len(t), 1)), np.cos(arg), np.sin(arg)])

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0.0) or np.any(t > self.T_p):
            raise PulseDomainError(f"time outside [0, {self.T_p}]")

    def value(self, j: int, t: float) -> float:
        self._check(t)
        return float(self.basis(t)[0] @ self.coeffs[j])

    def jacobian(self, j: int, t: float) -> np.ndarray:
        """Derivative of channel ``j`` at ``t`` w.r.t. that channel's own block."""
        self._check(t)
        return self.basis(t)[0]

    def samples(self, times) -> np.ndarray:
        self._check(times)
        return self.basis(times) @ self.coeffs.T

    def sample_jacobian(self, times) -> np.ndarray:
        """``(len(times), nch, n_params)`` derivative of sampled amplitudes."""
        self._check(times)
        B = self.basis(times)
        nch, nb = self.coeffs.shape
        J = np.zeros((len(B), nch, nch * nb))
        for j in range(nch):
            J[:, j, j * nb:(j + 1) * nb] = B
        return J

    def to_dict(self) -> dict:
        N = self.N
        return {
            "family": "fourier",
            "T_p": self.T_p,
            "N": N,
            "channels": [
                {"label": lab, "a": c[: N + 1].tolist(), "b": c[N + 1:].tolist()}
                for lab, c in zip(self.labels, self.coeffs)
            ],
        }


@dataclass(frozen=True)
class PiecewisePulse:
    T: float
    amps: np.ndarray  # (nch, segments)
    labels: tuple[str, ...] = ()
    bound: float | None = None

    family = "piecewise"

    def __post_init__(self):
        amps = np.atleast_2d(np.asarray(self.amps, dtype=float))
        if amps.shape[1] < 1:
            raise FixtureError("piecewise pulse needs at least one segment")
        if not np.all(np.isfinite(amps)):
            raise FixtureError("non-finite piecewise amplitude")
        if self.bound is not None:
            amps = np.clip(amps, -self.bound, self.bound)
        object.__setattr__(self, "amps", amps)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"u{j}" for j in range(amps.shape[0])))

    @classmethod
    def zeros(cls, T: float, segments: int, nch: int, labels=(), bound=None):
        return cls(T, np.zeros((nch, segments)), tuple(labels), bound)

    @property
    def segments(self) -> int:
        return self.amps.shape[1]

    @property
    def n_channels(self) -> int:
        return self.amps.shape[0]

    @property
    def n_params(self) -> int:
        return self.amps.size

    @property
    def horizon(self) -> float:
        return self.T

    @property
    def params(self) -> np.ndarray:
        return self.amps.ravel().copy()

    def with_params(self, theta) -> "PiecewisePulse":
        theta = np.asarray(theta, dtype=float)
        return replace(self, amps=theta.reshape(self.amps.shape).copy())

    def segment_index(self, t) -> np.ndarray:
        """Segment containing ``t``; segments are right-open, the last one closed."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0.0) or np.any(t > self.T):
            raise PulseDomainError(f"time outside [0, {self.T}]")
        idx = np.floor(t * self.segments / self.T).astype(int)
        return np.minimum(idx, self.segments - 1)

    def value(self, j: int, t: float) -> float:
        return float(self.amps[j, self.segment_index(t)])

    def jacobian(self, j: int, t: float) -> np.ndarray:
        out = np.zeros(self.segments)
        out[self.segment_index(t)] = 1.0
        return out

    def samples(self, times) -> np.ndarray:
        return self.amps[:, self.segment_index(times)].T

    def sample_jacobian(self, times) -> np.ndarray:
        idx = np.atleast_1d(self.segment_index(times))
        nch, nseg = self.amps.shape
        J = np.zeros((len(idx), nch, nch * nseg))
        rows = np.arange(len(idx))
        for j in range(nch):
            J[rows, j, j * nseg + idx] = 1.0
        return J

    def to_dict(self) -> dict:
        out = {
            "family": "piecewise",
            "T": self.T,
            "segments": self.segments,
            "channels": [{"label": lab, "amps": a.tolist()} for lab, a in zip(self.labels, self.amps)],
        }
        if self.bound is not None:
            out["bound"] = self.bound
        return out


def pulse_from_dict(doc: dict, expect_channels: int | None = None):
    """Build a pulse from its JSON document, validating coefficient counts."""
    try:
        family = doc["family"]
        channels = doc["channels"]
    except (KeyError, TypeError) as exc:
        raise FixtureError(f"pulse document missing field: {exc}") from exc
    if expect_channels is not None and len(channels) != expect_channels:
        raise FixtureError(f"expected {expect_channels} channels, got {len(channels)}")
    labels = tuple(ch.get("label", f"u{j}") for j, ch in enumerate(channels))
    if family == "fourier":
        N = int(doc.get("N", 3))
        T_p = float(doc.get("T_p", doc.get("T", 0.0)))
        rows = []
        for lab, ch in zip(labels, channels):
            a, b = list(ch.get("a", [])), list(ch.get("b", []))
            if len(a) != N + 1 or len(b) != N:
                raise FixtureError(
                    f"channel {lab!r}: expected {N + 1} a-coefficients and {N} b-coefficients, "
                    f"got {len(a)} and {len(b)}"
                )
            rows.append(a + b)
        return FourierPulse(T_p, N, np.array(rows, dtype=float), labels)
    if family == "piecewise":
        T = float(doc["T"])
        segments = int(doc.get("segments", len(channels[0].get("amps", []))))
        rows = []
        for lab, ch in zip(labels, channels):
            amps = list(ch.get("amps", []))
            if len(amps) != segments:
                raise FixtureError(f"channel {lab!r}: expected {segments} amplitudes, got {len(amps)}")
            rows.append(amps)
        return PiecewisePulse(T, np.array(rows, dtype=float), labels, doc.get("bound"))
    raise FixtureError(f"unknown pulse family {family!r}")


def load_pulse(path, expect_channels: int | None = None):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FixtureError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return pulse_from_dict(doc, expect_channels)


def save_pulse(pulse, path) -> None:
    Path(path).write_text(json.dumps(pulse.to_dict(), indent=2) + "\n")
