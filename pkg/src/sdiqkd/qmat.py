"""Small dense complex matrices (2x2, 4x4, 16x16) for qubit states and channels.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. The functions here
only add the shape checks and clamping rules the rest of the package relies on.
"""

from __future__ import annotations

from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import NonConvergence

MAX_DIM = 16

STRUCT_TOL = 1e-12
SPECTRAL_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, X, Y, Z)

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


def as_cmatrix(m) -> np.ndarray:
    """Coerce to a square complex array of a supported (power of two) size."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n_qubits(a)
    return a


def n_qubits(m: np.ndarray) -> int:
    dim = m.shape[0]
    k = dim.bit_length() - 1
    if dim < 1 or 2**k != dim or dim > MAX_DIM:
        raise ValueError(f"unsupported dimension {dim}; expected 2**k <= {MAX_DIM}")
    return k


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def tensor(*ms: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices (or kets)."""
    if not ms:
        raise ValueError("tensor() needs at least one operand")
    size = int(np.prod([np.shape(m)[0] for m in ms]))
    if size > MAX_DIM:
        raise ValueError(f"tensor product dimension {size} exceeds {MAX_DIM}")
    return reduce(np.kron, [np.asarray(m, dtype=complex) for m in ms])


def projector(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


def is_hermitian(m: np.ndarray, tol: float = STRUCT_TOL) -> bool:
    return bool(np.max(np.abs(m - dagger(m))) <= tol)


def expectation(rho: np.ndarray, op: np.ndarray) -> float:
    """Real part of Tr(op rho)."""
    return float(np.real(np.trace(op @ rho)))


def partial_trace(m: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Reduced matrix on the qubits listed in ``keep`` (qubit 0 is leftmost).

    The kept qubits stay in ascending order regardless of how ``keep`` is
    ordered.
    """
    m = as_cmatrix(m)
    k = n_qubits(m)
    keep = sorted(set(int(i) for i in keep))
    for i in keep:
        if not 0 <= i < k:
            raise ValueError(f"subsystem index {i} out of range for {k} qubits")
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:k])
    col = list(letters[k : 2 * k])
    for i in range(k):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    t = m.reshape([2] * (2 * k))
    r = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = 2 ** len(keep)
    return np.asarray(r).reshape(d, d)


def eigvals_general(m: np.ndarray) -> np.ndarray:
    """All eigenvalues of a (possibly non-Hermitian) matrix, sorted by real part, descending."""
    m = as_cmatrix(m)
    if not np.all(np.isfinite(m)):
        raise NonConvergence("matrix has non-finite entries")
    try:
        w = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NonConvergence(str(exc)) from exc
    return w[np.argsort(-w.real, kind="stable")]


def eigh_clamped(m: np.ndarray, floor: float = -1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition with tiny negative eigenvalues set to zero."""
    m = as_cmatrix(m)
    w, v = np.linalg.eigh((m + dagger(m)) / 2)
    if w.min() < floor:
        raise ValueError(f"matrix has a materially negative eigenvalue {w.min():.3e}")
    return np.clip(w, 0.0, None), v


def hermitian_sqrt(m: np.ndarray) -> np.ndarray:
    """Principal square root of a Hermitian positive semidefinite matrix."""
    w, v = eigh_clamped(m)
    return (v * np.sqrt(w)) @ dagger(v)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def kraus_sum(ops: Iterable[np.ndarray], rho: np.ndarray) -> np.ndarray:
    return sum(k @ rho @ dagger(k) for k in ops)
