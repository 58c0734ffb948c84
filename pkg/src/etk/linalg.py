"""Dense Hermitian linear algebra: spectra, norms, tensor and partial operations.

Operators are plain ``numpy`` complex arrays. Functions validate Hermiticity
on entry and never mutate their arguments.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .config import DEFAULT


class NotHermitianError(ValueError):
    """Raised when an operator fails the Hermiticity check."""

    def __init__(self, asymmetry: float, tol: float):
        super().__init__(f"operator is not Hermitian: max |A - A^dag| = {asymmetry:.3e} > {tol:.1e}")
        self.asymmetry = asymmetry


class DimensionError(ValueError):
    pass


def as_matrix(A) -> np.ndarray:
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2:
        raise DimensionError(f"expected a matrix, got array of shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def asymmetry(A) -> float:
    M = as_matrix(A)
    if M.shape[0] != M.shape[1]:
        return float("inf")
    return float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0


def as_hermitian(A, tol: float = DEFAULT.hermitian) -> np.ndarray:
    """Validate ``A`` as Hermitian and return its exactly-symmetrized copy."""
    M = as_matrix(A)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"Hermitian operator must be square, got {M.shape}")
    # scale-aware so large-norm witnesses don't fail on rounding alone
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    asym = asymmetry(M)
    if asym > tol * scale:
        raise NotHermitianError(asym, tol)
    return 0.5 * (M + M.conj().T)


def is_hermitian(A, tol: float = DEFAULT.hermitian) -> bool:
    return asymmetry(A) <= tol


@dataclass(frozen=True)
class Spectrum:
    """Eigen-decomposition with eigenvalues sorted in descending order."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T


def eig_hermitian(A) -> Spectrum:
    H = as_hermitian(A)
    w, V = np.linalg.eigh(H)
    order = np.argsort(w)[::-1]
    return Spectrum(w[order], V[:, order])


def eigvalsh(A) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian operator."""
    return np.linalg.eigvalsh(as_hermitian(A))


def min_eig(A) -> float:
    return float(eigvalsh(A)[0])


def max_eig(A) -> float:
    return float(eigvalsh(A)[-1])


def trace_norm(A) -> float:
    return float(np.sum(np.abs(eigvalsh(A))))


def operator_norm(A) -> float:
    w = eigvalsh(A)
    return float(max(abs(w[0]), abs(w[-1]))) if w.size else 0.0


def jordan_parts(A) -> Tuple[np.ndarray, np.ndarray]:
    """Split Hermitian ``A`` into orthogonal PSD parts with ``A = P - N``."""
    w, V = np.linalg.eigh(as_hermitian(A))
    P = (V * np.clip(w, 0, None)) @ V.conj().T
    N = (V * np.clip(-w, 0, None)) @ V.conj().T
    return P, N


def psd_sqrt(A) -> np.ndarray:
    w, V = np.linalg.eigh(as_hermitian(A))
    return (V * np.sqrt(np.clip(w, 0, None))) @ V.conj().T


def range_projector(A, rel_tol: float = 1e-10) -> np.ndarray:
    """Orthogonal projector onto the range of a PSD operator."""
    w, V = np.linalg.eigh(as_hermitian(A))
    keep = w > rel_tol * max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
    Vk = V[:, keep]
    return Vk @ Vk.conj().T


def _check_dims(M: np.ndarray, dims: Sequence[int]) -> Tuple[int, int]:
    if len(dims) != 2:
        raise DimensionError("dims must be a pair (d_A, d_B)")
    dA, dB = int(dims[0]), int(dims[1])
    if dA < 1 or dB < 1 or M.shape != (dA * dB, dA * dB):
        raise DimensionError(f"operator of shape {M.shape} does not match dims ({dA}, {dB})")
    return dA, dB


def partial_trace(A, dims: Sequence[int], side: str = "B") -> np.ndarray:
    """Trace out subsystem ``side`` (``"A"`` or ``"B"``) of a bipartite operator."""
    M = as_matrix(A)
    dA, dB = _check_dims(M, dims)
    T = M.reshape(dA, dB, dA, dB)
    if side == "A":
        return np.einsum("ijik->jk", T)
    if side == "B":
        return np.einsum("ijkj->ik", T)
    raise ValueError(f"side must be 'A' or 'B', got {side!r}")


def partial_transpose(A, dims: Sequence[int], side: str = "B") -> np.ndarray:
    M = as_matrix(A)
    dA, dB = _check_dims(M, dims)
    T = M.reshape(dA, dB, dA, dB)
    if side == "A":
        T = T.transpose(2, 1, 0, 3)
    elif side == "B":
        T = T.transpose(0, 3, 2, 1)
    else:
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    return T.reshape(dA * dB, dA * dB)


def tensor(*ops) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, as_matrix(op))
    return out


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def proj(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    return np.outer(v, v.conj())


def hermitian_basis(n: int) -> np.ndarray:
    """Orthonormal (Hilbert-Schmidt) basis of n x n Hermitian matrices, shape (n*n, n, n).

    Ordering: diagonal units, then symmetric and antisymmetric off-diagonal pairs.
    """
    basis = np.zeros((n * n, n, n), dtype=complex)
    idx = 0
    for i in range(n):
        basis[idx, i, i] = 1.0
        idx += 1
    s = 1.0 / np.sqrt(2.0)
    for i in range(n):
        for j in range(i + 1, n):
            basis[idx, i, j] = basis[idx, j, i] = s
            idx += 1
            basis[idx, i, j] = -1j * s
            basis[idx, j, i] = 1j * s
            idx += 1
    return basis


def hermitian_coords(A, basis: np.ndarray) -> np.ndarray:
    """Real coordinates of Hermitian ``A`` in an orthonormal Hermitian basis."""
    return np.real(np.einsum("kij,ji->k", basis, as_matrix(A)))


def from_coords(coords, basis: np.ndarray) -> np.ndarray:
    return np.einsum("k,kij->ij", np.asarray(coords, dtype=float), basis)
