"""Batched piecewise-constant propagation kernels.

Every propagation in the package reduces to the same problem: for each
uncertainty node ``n`` and each step ``s`` of a uniform step sequence with
duration ``tau``,

    H[n, s] = h_static[n] + sum_j amps[s, j] * ctrl[n, j]
    U[n]    = exp(-i H[n, S-1] tau) ... exp(-i H[n, 0] tau)

and, optionally, the full derivative ``D[n, s, j] = dU[n] / d amps[s, j]``.
Step derivatives use the eigenbasis divided-difference formula, which is
exact for each exponential.

Two implementations are provided with identical signatures. ``propagate_nodes``
dispatches on :data:`smolyak_qc._accel.USE_NUMBA`.
"""

from __future__ import annotations

import numpy as np

from . import _accel
from ._accel import njit


# ---------------------------------------------------------------- numpy path


def _sinc(x):
    return np.sinc(x / np.pi)


def step_exponentials_numpy(H: np.ndarray, dH: np.ndarray | None, tau: float):
    """exp(-i H tau) for a batch ``(..., dim, dim)`` plus directional derivatives.

    ``dH`` has shape ``(..., nch, dim, dim)`` and gives the derivative
    directions; returns ``(E, dE)`` with ``dE`` shaped like ``dH``.
    """
    w, V = np.linalg.eigh(H)
    phase = np.exp(-1j * w * tau)
    Vh = np.conj(np.swapaxes(V, -1, -2))
    E = (V * phase[..., None, :]) @ Vh
    if dH is None:
        return E, None
    lam_a = w[..., :, None]
    lam_b = w[..., None, :]
    G = -1j * tau * np.exp(-0.5j * (lam_a + lam_b) * tau) * _sinc(0.5 * (lam_a - lam_b) * tau)
    Vx = V[..., None, :, :]
    Vxh = Vh[..., None, :, :]
    dE = Vx @ ((Vxh @ dH @ Vx) * G[..., None, :, :]) @ Vxh
    return E, dE


def propagate_nodes_numpy(h_static, ctrl, amps, tau, want_grad=False):
    h_static = np.asarray(h_static, dtype=np.complex128)
    ctrl = np.asarray(ctrl, dtype=np.complex128)
    amps = np.asarray(amps, dtype=np.float64)
    n_nodes, dim = h_static.shape[0], h_static.shape[1]
    n_steps, nch = amps.shape
    H = h_static[:, None] + np.einsum("sj,njab->nsab", amps, ctrl)
    dH = np.broadcast_to(ctrl[:, None], (n_nodes, n_steps, nch, dim, dim)) if want_grad else None
    E, dE = step_exponentials_numpy(H, dH, tau)

    eye = np.broadcast_to(np.eye(dim, dtype=np.complex128), (n_nodes, dim, dim))
    # forward[s] = E[s-1] ... E[0]  (product before step s)
    forward = np.empty((n_nodes, n_steps + 1, dim, dim), dtype=np.complex128)
    forward[:, 0] = eye
    for s in range(n_steps):
        forward[:, s + 1] = E[:, s] @ forward[:, s]
    U = forward[:, n_steps].copy()
    if not want_grad:
        return U, np.zeros((n_nodes, 0, nch, dim, dim), dtype=np.complex128)

    D = np.empty((n_nodes, n_steps, nch, dim, dim), dtype=np.complex128)
    back = eye.copy()
    for s in range(n_steps - 1, -1, -1):
        D[:, s] = back[:, None] @ dE[:, s] @ forward[:, s][:, None]
        back = back @ E[:, s]
    return U, D


# ---------------------------------------------------------------- numba path


@njit
def _eig2(H):
    """Closed-form eigendecomposition of a 2x2 Hermitian matrix (ascending)."""
    m = 0.5 * (H[0, 0].real + H[1, 1].real)
    z = 0.5 * (H[0, 0].real - H[1, 1].real)
    x = H[1, 0].real
    y = H[1, 0].imag
    rho = np.sqrt(x * x + y * y)
    r = np.sqrt(rho * rho + z * z)
    w = np.empty(2)
    w[0] = m - r
    w[1] = m + r
    V = np.empty((2, 2), dtype=np.complex128)
    if r == 0.0:
        V[0, 0] = 0.0
        V[1, 0] = 1.0
        V[0, 1] = 1.0
        V[1, 1] = 0.0
        return w, V
    if z >= 0.0:
        c = np.sqrt((r + z) / (2.0 * r))
        s = rho / (2.0 * r * c)
    else:
        s = np.sqrt((r - z) / (2.0 * r))
        c = rho / (2.0 * r * s)
    if rho > 0.0:
        ph = complex(x / rho, y / rho)
    else:
        ph = 1.0 + 0.0j
    # +r eigenvector (c, ph s); -r eigenvector (-conj(ph) s, c)
    V[0, 1] = c
    V[1, 1] = ph * s
    V[0, 0] = -np.conj(ph) * s
    V[1, 0] = c
    return w, V


@njit
def _eigh(H):
    if H.shape[0] == 2:
        return _eig2(H)
    return np.linalg.eigh(H)


@njit
def _sinc_nb(x):
    if abs(x) < 1e-8:
        return 1.0 - x * x / 6.0
    return np.sin(x) / x


@njit
def _mm(A, B, out):
    n = A.shape[0]
    for i in range(n):
        for k in range(n):
            acc = 0.0j
            for l in range(n):
                acc += A[i, l] * B[l, k]
            out[i, k] = acc


@njit
def _propagate_nodes_nb(h_static, ctrl, amps, tau, want_grad):
    n_nodes = h_static.shape[0]
    dim = h_static.shape[1]
    n_steps = amps.shape[0]
    nch = amps.shape[1]
    U_out = np.empty((n_nodes, dim, dim), dtype=np.complex128)
    if want_grad:
        D = np.empty((n_nodes, n_steps, nch, dim, dim), dtype=np.complex128)
    else:
        D = np.empty((n_nodes, 0, nch, dim, dim), dtype=np.complex128)

    E = np.empty((n_steps, dim, dim), dtype=np.complex128)
    dE = np.empty((n_steps, nch, dim, dim), dtype=np.complex128)
    forward = np.empty((n_steps + 1, dim, dim), dtype=np.complex128)
    H = np.empty((dim, dim), dtype=np.complex128)
    G = np.empty((dim, dim), dtype=np.complex128)
    X = np.empty((dim, dim), dtype=np.complex128)
    Y = np.empty((dim, dim), dtype=np.complex128)
    back = np.empty((dim, dim), dtype=np.complex128)
    tmp = np.empty((dim, dim), dtype=np.complex128)

    for n in range(n_nodes):
        for s in range(n_steps):
            for a in range(dim):
                for b in range(dim):
                    acc = h_static[n, a, b]
                    for j in range(nch):
                        acc += amps[s, j] * ctrl[n, j, a, b]
                    H[a, b] = acc
            w, V = _eigh(H)
            ph = np.exp(-1j * w * tau)
            for a in range(dim):
                for b in range(dim):
                    acc = 0.0j
                    for k in range(dim):
                        acc += V[a, k] * ph[k] * np.conj(V[b, k])
                    E[s, a, b] = acc
            if want_grad:
                for a in range(dim):
                    for b in range(dim):
                        G[a, b] = (-1j * tau) * np.exp(-0.5j * (w[a] + w[b]) * tau) * _sinc_nb(0.5 * (w[a] - w[b]) * tau)
                for j in range(nch):
                    # X = V^H ctrl V, then Y = V (G o X) V^H
                    for a in range(dim):
                        for b in range(dim):
                            acc = 0.0j
                            for k in range(dim):
                                acc += ctrl[n, j, a, k] * V[k, b]
                            tmp[a, b] = acc
                    for a in range(dim):
                        for b in range(dim):
                            acc = 0.0j
                            for k in range(dim):
                                acc += np.conj(V[k, a]) * tmp[k, b]
                            X[a, b] = acc * G[a, b]
                    for a in range(dim):
                        for b in range(dim):
                            acc = 0.0j
                            for k in range(dim):
                                acc += V[a, k] * X[k, b]
                            Y[a, b] = acc
                    for a in range(dim):
                        for b in range(dim):
                            acc = 0.0j
                            for k in range(dim):
                                acc += Y[a, k] * np.conj(V[b, k])
                            dE[s, j, a, b] = acc

        for a in range(dim):
            for b in range(dim):
                forward[0, a, b] = 1.0 if a == b else 0.0
        for s in range(n_steps):
            _mm(E[s], forward[s], forward[s + 1])
        U_out[n] = forward[n_steps]

        if want_grad:
            for a in range(dim):
                for b in range(dim):
                    back[a, b] = 1.0 if a == b else 0.0
            for s in range(n_steps - 1, -1, -1):
                for j in range(nch):
                    _mm(back, dE[s, j], tmp)
                    _mm(tmp, forward[s], X)
                    D[n, s, j] = X
                _mm(back, E[s], tmp)
                back[:, :] = tmp
    return U_out, D


def propagate_nodes_numba(h_static, ctrl, amps, tau, want_grad=False):
    return _propagate_nodes_nb(
        np.ascontiguousarray(h_static, dtype=np.complex128),
        np.ascontiguousarray(ctrl, dtype=np.complex128),
        np.ascontiguousarray(amps, dtype=np.float64),
        float(tau),
        bool(want_grad),
    )


def propagate_nodes(h_static, ctrl, amps, tau, want_grad=False, backend: str | None = None):
    """Propagate a batch of nodes; see module docstring for shapes.

    Returns ``(U, D)`` with ``U`` of shape ``(N, dim, dim)`` and ``D`` of
    shape ``(N, S, nch, dim, dim)`` (``S = 0`` when ``want_grad`` is false).
    """
    backend = backend or _accel.backend_name()
    if backend == "numba":
        return propagate_nodes_numba(h_static, ctrl, amps, tau, want_grad)
    if backend == "numpy":
        return propagate_nodes_numpy(h_static, ctrl, amps, tau, want_grad)
    raise ValueError(f"unknown backend {backend!r}")
