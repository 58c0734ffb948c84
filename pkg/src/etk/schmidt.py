"""Schmidt decomposition, reduction-map family and the Schmidt-rank-constrained oracle."""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .config import DEFAULT
from .linalg import as_hermitian, eigvalsh, min_eig
from .quantum import BipartiteState, ChannelRep, choi_of_map, embedded_max_entangled


@dataclass(frozen=True)
class SchmidtDecomposition:
    coefficients: np.ndarray  # sqrt(q_i), descending
    left: np.ndarray  # columns |a_i>
    right: np.ndarray  # columns |b_i>
    rank: int

    @property
    def weights(self) -> np.ndarray:
        return self.coefficients ** 2

    def vector(self) -> np.ndarray:
        return np.einsum("r,ar,br->ab", self.coefficients, self.left, self.right).ravel()


def schmidt_decompose(psi, dims: Sequence[int], rank_tol: float = DEFAULT.rank_rel) -> SchmidtDecomposition:
    v = np.asarray(psi, dtype=complex).ravel()
    dA, dB = int(dims[0]), int(dims[1])
    if v.size != dA * dB:
        raise ValueError(f"vector of length {v.size} does not match dims ({dA}, {dB})")
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError(f"vector is not normalized (norm {nrm:.12g})")
    U, s, Vh = np.linalg.svd(v.reshape(dA, dB), full_matrices=False)
    rank = int(np.sum(s >= rank_tol * s[0]))
    return SchmidtDecomposition(s, U, Vh.T, rank)


def schmidt_rank(psi, dims: Sequence[int]) -> int:
    return schmidt_decompose(psi, dims).rank


def generalized_robustness_pure(psi, dims: Sequence[int], k: int) -> float:
    """``R_{S_1}`` of a pure state, ``(sum_i sqrt(q_i))^2 - 1``; valid for k = 1 only."""
    if k != 1:
        raise ValueError("closed form known for k = 1 only")
    c = schmidt_decompose(psi, dims).coefficients
    return float(np.sum(c) ** 2 - 1.0)


def max_overlap_schmidt_k(psi, dims: Sequence[int], k: int) -> float:
    """``max |<phi|psi>|^2`` over Schmidt-rank-<=k unit vectors: sum of the k largest q_i."""
    q = schmidt_decompose(psi, dims).weights
    return float(np.sum(q[:k]))


# -- reduction-map family ---------------------------------------------------


@dataclass(frozen=True)
class ReductionFamilyMap:
    """``X -> (tr(X) 1 - t X) / (d - t)``; trace preserving for t < d."""

    d: int
    t: float

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=complex)
        return (np.trace(X) * np.eye(self.d) - self.t * X) / (self.d - self.t)

    @property
    def channel(self) -> ChannelRep:
        return choi_of_map(self, self.d, self.d)


@dataclass(frozen=True)
class PositivityReport:
    min_eigenvalues: Tuple[float, ...]  # entry m-1 is for (id_m (x) L)(phi+_m)
    level: int


def reduction_family(d: int, t: float, tol: float = 1e-10) -> Tuple[ReductionFamilyMap, PositivityReport]:
    if not 0 < t < d:
        raise ValueError(f"t must lie in (0, d) = (0, {d}), got {t}")
    L = ReductionFamilyMap(d, float(t))
    ch = L.channel
    mins = []
    for m in range(1, d + 1):
        out = ch.partial(embedded_max_entangled(m, d), m)
        mins.append(float(eigvalsh(out)[0]))
    level = 0
    for m, w in enumerate(mins, start=1):
        if w >= -tol:
            level = m
        else:
            break
    return L, PositivityReport(tuple(mins), level)


# -- Schmidt-rank-constrained minimization ----------------------------------


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("ETK_THREADS", "1")))
    except ValueError:
        return 1


def _lowest(Q: np.ndarray) -> Tuple[float, np.ndarray]:
    w, V = np.linalg.eigh(0.5 * (Q + Q.conj().T))
    return float(w[0]), V[:, 0]


def _als_run(
    W: np.ndarray, dA: int, dB: int, k: int, rng: Optional[np.random.Generator], iters: int, start=None
) -> Tuple[float, np.ndarray]:
    """Alternating exact block minimization over psi = vec(A B^T) with A: dA x k, B: dB x k."""
    if start is None:
        B = rng.standard_normal((dB, k)) + 1j * rng.standard_normal((dB, k))
    else:
        # right Schmidt factor of the starting vector
        U, s, Vh = np.linalg.svd(np.asarray(start, dtype=complex).reshape(dA, dB), full_matrices=False)
        B = (Vh[:k].T * s[:k])
    W4 = W.reshape(dA, dB, dA, dB)
    value = np.inf
    psi = None
    for _ in range(iters):
        Qb, _ = np.linalg.qr(B)
        # psi[i, j] = sum_r A[i, r] Qb[j, r]; reduced form over A
        red = np.einsum("jr,ijkl,ls->irks", Qb.conj(), W4, Qb).reshape(dA * k, dA * k)
        v1, x = _lowest(red)
        A = x.reshape(dA, k)
        Qa, _ = np.linalg.qr(A)
        # psi[i, j] = sum_r Qa[i, r] C[r, j]; reduced form over C
        red = np.einsum("ir,ijkl,ks->rjsl", Qa.conj(), W4, Qa).reshape(k * dB, k * dB)
        v2, x = _lowest(red)
        C = x.reshape(k, dB)
        B = C.T
        psi = (Qa @ C).ravel()
        if value - v2 <= 1e-14 * (1.0 + abs(v2)):
            value = v2
            break
        value = v2
    psi = psi / np.linalg.norm(psi)
    return float(np.real(psi.conj() @ W @ psi)), psi


@dataclass
class OracleResult:
    value: float
    vector: np.ndarray
    restarts: int
    seed: int
    local_minima: List[Tuple[float, np.ndarray]] = field(default_factory=list, repr=False)

    def __iter__(self):
        # unpack as (value, vector)
        yield self.value
        yield self.vector


def min_schmidt_k_expectation(
    W,
    dims: Sequence[int],
    k: int,
    restarts: int = 32,
    seed: int = 0,
    iters: int = 500,
    starts: Sequence[np.ndarray] = (),
) -> OracleResult:
    """Heuristic minimum of <psi|W|psi> over unit vectors of Schmidt rank <= k.

    The value is an upper bound on ``min_{sigma in S_k} tr(W sigma)``; it is
    exact when ``k >= min(dims)`` (plain lowest eigenvalue). Deterministic given
    ``(seed, restarts)``. ``starts`` adds warm-started runs from given vectors
    on top of the random restarts.
    """
    H = as_hermitian(W)
    dA, dB = int(dims[0]), int(dims[1])
    if H.shape != (dA * dB, dA * dB):
        raise ValueError("operator does not match dims")
    if not 1 <= k <= min(dA, dB):
        raise ValueError(f"k must lie in [1, {min(dA, dB)}], got {k}")
    if k == min(dA, dB):
        w, V = np.linalg.eigh(H)
        return OracleResult(float(w[0]), V[:, 0], 1, seed, [(float(w[0]), V[:, 0])])
    rngs = [np.random.default_rng([seed, r]) for r in range(restarts)]
    workers = min(_threads(), restarts)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            runs = list(ex.map(lambda g: _als_run(H, dA, dB, k, g, iters), rngs))
    else:
        runs = [_als_run(H, dA, dB, k, g, iters) for g in rngs]
    runs += [_als_run(H, dA, dB, k, None, iters, start=v) for v in starts]
    best = min(range(len(runs)), key=lambda i: runs[i][0])
    return OracleResult(runs[best][0], runs[best][1], restarts, seed, runs)


class UncertifiedWitnessError(ValueError):
    """The operator failed the S_k feasibility check and cannot be used as a witness."""


@dataclass(frozen=True)
class WitnessTest:
    detected: bool
    expectation: float  # tr(W rho)
    margin: float
    oracle_value: float

    def __bool__(self):
        return self.detected


def sn_witness_lower_bound(
    rho,
    k: int,
    W,
    restarts: int = 128,
    seed: int = 0,
    eps: float = DEFAULT.witness_eps,
) -> WitnessTest:
    """Test ``SN(rho) > k`` with witness ``W`` after certifying W on S_k."""
    if isinstance(rho, BipartiteState):
        op, dims = rho.operator, rho.dims
    else:
        op, dims = rho
    H = as_hermitian(W)
    oracle = min_schmidt_k_expectation(H, dims, k, restarts=restarts, seed=seed)
    if oracle.value < -eps:
        raise UncertifiedWitnessError(
            f"operator takes value {oracle.value:.3e} on a Schmidt-rank-{k} state; not a witness for S_{k}"
        )
    ex = float(np.real(np.trace(H @ op)))
    detected = ex < -eps
    return WitnessTest(detected, ex, abs(ex) if detected else 0.0, oracle.value)
