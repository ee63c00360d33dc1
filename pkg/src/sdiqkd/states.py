"""Two-qubit states: the cos/sin family, Bell states, fidelity and concurrence."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import qmat
from .errors import NotBellDiagonal

BELL_LABELS = ("phi_plus", "phi_minus", "psi_plus", "psi_minus")

_S = 1 / math.sqrt(2)
BELL_KETS = (
    np.array([_S, 0, 0, _S], dtype=complex),
    np.array([_S, 0, 0, -_S], dtype=complex),
    np.array([0, _S, _S, 0], dtype=complex),
    np.array([0, _S, -_S, 0], dtype=complex),
)
# columns are the Bell kets in BELL_LABELS order
BELL_BASIS = np.column_stack(BELL_KETS)
BELL_PROJECTORS = tuple(
    0.5 * np.array(m, dtype=complex)
    for m in (
        [[1, 0, 0, 1], [0, 0, 0, 0], [0, 0, 0, 0], [1, 0, 0, 1]],
        [[1, 0, 0, -1], [0, 0, 0, 0], [0, 0, 0, 0], [-1, 0, 0, 1]],
        [[0, 0, 0, 0], [0, 1, 1, 0], [0, 1, 1, 0], [0, 0, 0, 0]],
        [[0, 0, 0, 0], [0, 1, -1, 0], [0, -1, 1, 0], [0, 0, 0, 0]],
    )
)

SPIN_FLIP = qmat.tensor(qmat.Y, qmat.Y)


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """A validated 4x4 density matrix with an optional provenance label."""

    rho: np.ndarray
    label: Optional[str] = None

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.shape != (4, 4):
            raise ValueError(f"two-qubit state must be 4x4, got {rho.shape}")
        if not qmat.is_hermitian(rho):
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(rho)
        if abs(tr - 1) > qmat.STRUCT_TOL:
            raise ValueError(f"density matrix has trace {tr.real:.15g}")
        lo = np.linalg.eigvalsh(rho).min()
        if lo < -1e-10:
            raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_ket(cls, ket, label=None) -> "TwoQubitState":
        ket = np.asarray(ket, dtype=complex)
        ket = ket / np.linalg.norm(ket)
        return cls(qmat.projector(ket), label)

    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))

    def reduced(self, qubit: int) -> np.ndarray:
        return qmat.partial_trace(self.rho, [qubit])

    def swapped(self) -> "TwoQubitState":
        """Same state with the two parties relabelled."""
        t = self.rho.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
        return TwoQubitState(t, self.label)

    def allclose(self, other: "TwoQubitState", atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.rho, other.rho, atol=atol, rtol=0))


@dataclass(frozen=True)
class BellDiagonal:
    """Weights on (phi+, phi-, psi+, psi-); the first one is the fidelity F."""

    weights: tuple

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if len(w) != 4:
            raise ValueError("need four Bell weights")
        if min(w) < -1e-12 or abs(sum(w) - 1) > 1e-12:
            raise ValueError(f"Bell weights {w} are not a probability vector")
        object.__setattr__(self, "weights", tuple(max(x, 0.0) for x in w))

    @property
    def fidelity(self) -> float:
        return self.weights[0]

    def to_state(self, label=None) -> TwoQubitState:
        rho = sum(w * p for w, p in zip(self.weights, BELL_PROJECTORS))
        return TwoQubitState(rho, label)


def psi_theta(theta: float) -> TwoQubitState:
    """cos(theta)|00> + sin(theta)|11>, for theta in [0, pi/2]."""
    if not 0.0 <= theta <= math.pi / 2 + 1e-15:
        raise ValueError(f"theta={theta} outside [0, pi/2]")
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0], rho[3, 3] = (1 + c) / 2, (1 - c) / 2
    rho[0, 3] = rho[3, 0] = s / 2
    return TwoQubitState(rho, f"psi({theta:.6g})")


def bell_state(name: str = "phi_plus") -> TwoQubitState:
    return TwoQubitState(BELL_PROJECTORS[BELL_LABELS.index(name)], name)


def maximally_mixed() -> TwoQubitState:
    return TwoQubitState(np.eye(4, dtype=complex) / 4, "I/4")


def werner(fidelity: float) -> TwoQubitState:
    """Werner state with weight F on phi+ and (1-F)/3 on each other Bell state."""
    r = (1 - fidelity) / 3
    return BellDiagonal((fidelity, r, r, r)).to_state(f"werner({fidelity:.6g})")


def fidelity_phi_plus(s: TwoQubitState) -> float:
    f = float(np.real(np.trace(BELL_PROJECTORS[0] @ s.rho)))
    return min(max(f, 0.0), 1.0)


def bell_matrix(s: TwoQubitState) -> np.ndarray:
    """rho written in the Bell basis."""
    return qmat.dagger(BELL_BASIS) @ s.rho @ BELL_BASIS


def as_bell_diagonal(s: TwoQubitState, tol: float = qmat.SPECTRAL_TOL) -> BellDiagonal:
    b = bell_matrix(s)
    off = b - np.diag(np.diag(b))
    if np.max(np.abs(off)) > tol:
        raise NotBellDiagonal(f"largest Bell-basis coherence {np.max(np.abs(off)):.3e}")
    w = np.real(np.diag(b))
    return BellDiagonal(tuple(w / w.sum()))


def is_bell_diagonal(s: TwoQubitState, tol: float = qmat.SPECTRAL_TOL) -> bool:
    b = bell_matrix(s)
    return bool(np.max(np.abs(b - np.diag(np.diag(b)))) <= tol)


def spin_flip(s: TwoQubitState) -> np.ndarray:
    return SPIN_FLIP @ np.conj(s.rho) @ SPIN_FLIP


def concurrence_roots(s: TwoQubitState) -> np.ndarray:
    """Square roots of the eigenvalues of rho * rho_tilde, descending.

    With rho = W W^dagger these are the singular values of W^T (Y x Y) W,
    which avoids taking square roots of eigenvalue round-off.
    """
    w, v = np.linalg.eigh(s.rho)
    w = np.where(w > 1e-14, w, 0.0)
    factor = v * np.sqrt(w)
    sv = np.linalg.svd(factor.T @ SPIN_FLIP @ factor, compute_uv=False)
    return np.sort(sv)[::-1]


def concurrence(s: TwoQubitState) -> float:
    r = concurrence_roots(s)
    return float(min(max(r[0] - r[1] - r[2] - r[3], 0.0), 1.0))


def concurrence_eig(s: TwoQubitState) -> float:
    """Same quantity taken straight from the eigenvalues of rho * rho_tilde.

    Loses about eight digits near zero eigenvalues; kept as a cross-check.
    """
    lam = qmat.eigvals_general(s.rho @ spin_flip(s))
    lam = np.sort(np.clip(lam.real, 0.0, None))[::-1]
    r = np.sqrt(lam)
    return float(min(max(r[0] - r[1] - r[2] - r[3], 0.0), 1.0))
