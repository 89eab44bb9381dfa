"""Small dense complex-matrix helpers.

Everything in this package works with matrices of at most a few dozen rows
(2x2 coins, 4x4 two-qubit operators, the 26x26 walk propagator), so the
routines here are thin, shape-checked wrappers over numpy.
"""

from __future__ import annotations

import numpy as np

ATOL = 1e-10

IDENTITY2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


def _as_matrix(m, name="matrix"):
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def matmul(a, b):
    """Matrix product with an explicit dimension check."""
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return a @ b


def kron(a, b):
    """Kronecker product; the first factor is the slow (walker/path) index."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


def projector(ket):
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


def partial_trace_walker(op, walker_dim: int):
    """Trace out the walker factor of a (walker x coin) operator.

    The coin is the fast index, so ``op`` has shape ``(2*walker_dim, 2*walker_dim)``
    and the result is the 2x2 coin operator.
    """
    op = _as_matrix(op, "op")
    n = 2 * walker_dim
    if op.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} operator for walker_dim={walker_dim}, got {op.shape}")
    return np.einsum("iaib->ab", op.reshape(walker_dim, 2, walker_dim, 2))


def is_hermitian(m, atol=ATOL) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and np.allclose(m, dagger(m), rtol=0, atol=atol)


def is_unitary(m, atol=ATOL) -> bool:
    m = np.asarray(m)
    return np.allclose(dagger(m) @ m, np.eye(m.shape[0]), rtol=0, atol=atol)


def eig_hermitian(m, atol=ATOL):
    """Eigen-decomposition of a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray
        Real, ascending.
    eigenvectors : ndarray
        Columns are the orthonormal eigenvectors.
    """
    m = _as_matrix(m)
    if not is_hermitian(m, atol):
        raise ValueError("matrix is not Hermitian")
    return np.linalg.eigh(0.5 * (m + dagger(m)))


def hermitian_power(m, power: float, floor: float = 0.0):
    """Return ``m**power`` for a PSD matrix, clipping eigenvalues below ``floor``."""
    w, v = eig_hermitian(m)
    w = np.maximum(w, floor)
    if power < 0:
        with np.errstate(divide="ignore"):
            wp = np.where(w > 0, w, np.inf) ** power
    else:
        wp = w**power
    return (v * wp) @ dagger(v)


def psd_sqrt(m):
    return hermitian_power(m, 0.5, floor=0.0)
