"""Schmidt-number robustness with certified two-sided bounds.

The witness program

    maximize  -tr(W rho)   s.t.  W <= 1,  tr(W sigma) >= 0 for all sigma in S_k

has the decomposition program

    minimize  sum_j mu_j - 1   s.t.  sum_j mu_j P_j >= rho,  mu >= 0

as its dual once ``S_k`` is replaced by the cone over a finite active set of
Schmidt-rank-<=k projectors ``P_j``. Each round solves this pair once, then
queries the Schmidt-rank oracle for projectors violating the current witness
and adds them (cutting planes for the witness side, column generation for the
decomposition side).

Upper bounds are always rigorous: the decomposition is explicit and any small
PSD defect is absorbed by adding a multiple of the (separable) identity. Lower
bounds are rigorous up to the oracle: the witness is shifted by the most
negative oracle value found, so it is feasible whenever the oracle found the
true minimum. For ``k = 1`` a PPT relaxation supplies an oracle-free lower
bound as well.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import DEFAULT, Tolerances
from .linalg import (
    as_hermitian,
    eigvalsh,
    hermitian_basis,
    max_eig,
    min_eig,
    operator_norm,
    partial_trace,
    partial_transpose,
    range_projector,
)
from .quantum import BipartiteState
from .schmidt import min_schmidt_k_expectation, schmidt_decompose
from .sdp import Block, SdpProblem, solve

from scipy.optimize import minimize


@dataclass
class RobustnessConfig:
    max_rounds: int = 60
    restarts: int = 32
    final_restarts: int = 128
    seed: int = 0
    target_gap: float = 1e-6
    cut_eps: float = 1e-9
    max_cuts_per_round: int = 32
    max_active: int = 400
    polish: bool = True
    use_ppt: bool = True
    tolerances: Tolerances = DEFAULT

    def to_dict(self) -> Dict:
        return {
            "max_rounds": self.max_rounds,
            "restarts": self.restarts,
            "final_restarts": self.final_restarts,
            "seed": self.seed,
            "target_gap": self.target_gap,
            "max_active": self.max_active,
            "polish": self.polish,
            "use_ppt": self.use_ppt,
        }


@dataclass
class SchmidtWitness:
    operator: np.ndarray
    k: int
    dims: Tuple[int, int]
    oracle_value: float
    restarts: int
    seed: int
    source: str = "cutting-plane"

    def expectation(self, rho) -> float:
        op = rho.operator if isinstance(rho, BipartiteState) else rho
        return float(np.real(np.trace(self.operator @ op)))

    def to_dict(self) -> Dict:
        from .io import matrix_to_dict

        return {
            "k": self.k,
            "dims": list(self.dims),
            "matrix": matrix_to_dict(self.operator),
            "oracle": {"restarts": self.restarts, "seed": self.seed, "value": self.oracle_value},
            "source": self.source,
        }


@dataclass
class Decomposition:
    """``Y = sum_j weights[j] |v_j><v_j| + shift * 1`` with ``Y >= rho``."""

    weights: np.ndarray
    vectors: np.ndarray  # rows are Schmidt-rank-<=k unit vectors
    shift: float
    dims: Tuple[int, int]

    @property
    def Y(self) -> np.ndarray:
        V = self.vectors
        n = self.dims[0] * self.dims[1]
        return (V.T * self.weights) @ V.conj() + self.shift * np.eye(n)

    @property
    def robustness(self) -> float:
        return float(np.sum(self.weights) + self.shift * self.dims[0] * self.dims[1] - 1.0)

    def split(self, rho) -> Tuple[float, np.ndarray, Optional[np.ndarray]]:
        """``rho = (1 + R) sigma - R tau`` with ``sigma in S_k``; returns ``(R, sigma, tau)``."""
        op = rho.operator if isinstance(rho, BipartiteState) else rho
        Y = self.Y
        R = float(np.trace(Y).real - 1.0)
        sigma = Y / (1.0 + R)
        tau = (Y - op) / R if R > 0 else None
        return R, sigma, tau


@dataclass
class RobustnessCertificate:
    k: int
    lower: float
    upper: float
    witness: SchmidtWitness
    decomposition: Decomposition
    active_set_size: int
    rounds: int
    history: List[Tuple[float, float]] = field(default_factory=list)
    converged: bool = True

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= value <= self.upper + slack

    def to_dict(self) -> Dict:
        from .io import matrix_to_dict

        return {
            "k": self.k,
            "lower": self.lower,
            "upper": self.upper,
            "gap": self.gap,
            "witness": matrix_to_dict(self.witness.operator),
            "witness_source": self.witness.source,
            "active_set_size": self.active_set_size,
            "rounds": self.rounds,
            "converged": self.converged,
            "oracle": {
                "restarts": self.witness.restarts,
                "seed": self.witness.seed,
                "value": self.witness.oracle_value,
            },
        }


# -- active set --------------------------------------------------------------


def initial_active_set(dims: Sequence[int], k: int, rho: Optional[np.ndarray] = None) -> List[np.ndarray]:
    """Product basis vectors, k-term maximally entangled vectors on index subsets,
    and rank-k Schmidt truncations of the eigenvectors of ``rho``."""
    dA, dB = dims
    n = dA * dB
    vecs = [np.eye(n, dtype=complex)[i] for i in range(n)]
    if k > 1:
        for S in itertools.combinations(range(min(dA, dB)), k):
            v = np.zeros(n, dtype=complex)
            for i in S:
                v[i * dB + i] = 1.0 / math.sqrt(k)
            vecs.append(v)
    if rho is not None:
        w, V = np.linalg.eigh(rho)
        for j in np.argsort(w)[::-1]:
            if w[j] <= 1e-12:
                break
            vecs.append(_truncate(V[:, j], dims, k))
    return vecs


def _truncate(v: np.ndarray, dims: Sequence[int], k: int) -> np.ndarray:
    sd = schmidt_decompose(v / np.linalg.norm(v), dims)
    c = sd.coefficients[:k]
    out = np.einsum("r,ar,br->ab", c, sd.left[:, :k], sd.right[:, :k]).ravel()
    return out / np.linalg.norm(out)


def _add_vectors(active: List[np.ndarray], new: Sequence[np.ndarray], tol: float = 1e-10) -> int:
    added = 0
    M = np.array(active)
    for v in new:
        if M.size and np.max(np.abs(M.conj() @ v)) > 1.0 - tol:
            continue
        active.append(v)
        M = np.array(active)
        added += 1
    return added


# -- the primal/dual pair on an active set -----------------------------------


def _active_set_sdp(rho: np.ndarray, vectors: Sequence[np.ndarray], tol: float):
    n = rho.shape[0]
    basis = hermitian_basis(n)
    V = np.array(vectors)
    # <B_a, |v><v|> = v^dag B_a v
    G = np.real(np.einsum("ji,aik,jk->aj", V.conj(), basis, V))
    b = -np.real(np.einsum("aij,ji->a", basis, rho))
    blocks = [Block("s", n, True), Block("l", len(vectors))]
    prob = SdpProblem(blocks, [np.eye(n), np.zeros(len(vectors))], [basis, -G], b, sense="min")
    sol = solve(prob, tol=tol)
    W = np.einsum("a,aij->ij", sol.dual, basis)
    mu = np.clip(sol.primal[1], 0.0, None)
    return 0.5 * (W + W.conj().T), mu, sol


def _repair_decomposition(rho: np.ndarray, V: np.ndarray, mu: np.ndarray, dims) -> Decomposition:
    keep = mu > 1e-14
    w, Vk = mu[keep], V[keep]
    Y = (Vk.T * w) @ Vk.conj()
    defect = min_eig(Y - rho)
    shift = max(0.0, -defect) * (1.0 + 1e-9) + (1e-15 if defect < 0 else 0.0)
    return Decomposition(w, Vk, shift, tuple(dims))


def _certified_lower(W: np.ndarray, rho: np.ndarray, oracle_value: float) -> Tuple[float, np.ndarray]:
    """Shift and rescale W into a feasible witness given the oracle minimum."""
    m = min(oracle_value, 0.0)
    Wc = (W - m * np.eye(W.shape[0])) / (1.0 - m)
    top = max_eig(Wc)
    if top > 1.0:
        Wc = Wc / top
    return float(-np.real(np.trace(Wc @ rho))), Wc


def ppt_robustness_lower(rho: np.ndarray, dims, tol: float = 1e-9) -> Tuple[float, np.ndarray]:
    """Oracle-free lower bound on R_{S_1}: optimal decomposable witness ``W = P + Q^{T_B} <= 1``."""
    n = rho.shape[0]
    basis = hermitian_basis(n)
    basis_pt = np.array([partial_transpose(B, dims) for B in basis])
    b = -np.real(np.einsum("aij,ji->a", basis, rho))
    # dual variables: coordinates of W (n^2) and of Q (n^2); constraints:
    #   1 - W >= 0,  W - Q^{T_B} >= 0,  Q >= 0
    m = 2 * n * n
    z = np.zeros_like(basis)
    A1 = np.concatenate([basis, z])
    A2 = np.concatenate([-basis, basis_pt])
    A3 = np.concatenate([z, -basis])
    blocks = [Block("s", n, True)] * 3
    prob = SdpProblem(blocks, [np.eye(n), np.zeros((n, n)), np.zeros((n, n))], [A1, A2, A3],
                      np.concatenate([b, np.zeros(n * n)]), sense="min")
    sol = solve(prob, tol=tol)
    y = sol.dual
    W = np.einsum("a,aij->ij", y[: n * n], basis)
    Q = np.einsum("a,aij->ij", y[n * n:], basis)
    # exact repair: P := W - Q^{T_B} must be PSD, Q PSD, W <= 1
    Q = _psd_part(Q)
    P = _psd_part(W - partial_transpose(Q, dims))
    W = P + partial_transpose(Q, dims)
    top = max_eig(W)
    if top > 1.0:
        W = W / top
    return float(-np.real(np.trace(W @ rho))), 0.5 * (W + W.conj().T)


def _psd_part(M: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (M + M.conj().T))
    return (V * np.clip(w, 0, None)) @ V.conj().T


def polish_atoms(
    rho: np.ndarray,
    dims: Sequence[int],
    k: int,
    vectors: np.ndarray,
    weights: np.ndarray,
    barriers: Sequence[float] = (1e-3, 1e-5, 1e-7),
    maxiter: int = 200,
) -> np.ndarray:
    """Move the atoms of a decomposition continuously to lower ``tr(Y)``.

    Minimizes ``tr(Y) - t logdet(Y - rho)`` over factorized atoms
    ``u_j = vec(A_j B_j^T)`` for a decreasing barrier weight ``t``. The product
    basis is appended with a small weight so the start is strictly feasible.
    Returns the moved atoms as unit rows; they are only candidates for the
    active set, so no optimality claim is attached.
    """
    dA, dB = int(dims[0]), int(dims[1])
    n = dA * dB
    V = np.concatenate([np.asarray(vectors, dtype=complex).reshape(-1, n), np.eye(n, dtype=complex)])
    w = np.concatenate([np.asarray(weights, dtype=float), np.full(n, 1e-3)])
    blocks = []
    for v, wj in zip(V, w):
        U, s, Vh = np.linalg.svd(v.reshape(dA, dB) * math.sqrt(max(wj, 0.0)), full_matrices=False)
        r = np.sqrt(s[:k])
        blocks.append(np.concatenate([(U[:, :k] * r).ravel(), (Vh[:k].T * r).ravel()]))
    N = len(blocks)
    z0 = np.concatenate(blocks)
    x = np.concatenate([z0.real, z0.imag])
    sa, sz = dA * k, k * (dA + dB)

    def factors(x):
        z = (x[: x.size // 2] + 1j * x[x.size // 2:]).reshape(N, sz)
        return z[:, :sa].reshape(N, dA, k), z[:, sa:].reshape(N, dB, k)

    for t in barriers:

        def f(x, t=t):
            A, B = factors(x)
            U = np.einsum("nar,nbr->nab", A, B).reshape(N, n)
            Y = U.T @ U.conj()
            try:
                L = np.linalg.cholesky(Y - rho)
            except np.linalg.LinAlgError:
                return 1e10, np.zeros_like(x)
            val = float(np.trace(Y).real) - 2.0 * t * float(np.sum(np.log(np.diag(L).real)))
            G = np.eye(n) - t * np.linalg.inv(Y - rho)
            GU = (U @ G.T).reshape(N, dA, dB)
            gA = 2.0 * np.einsum("nab,nbr->nar", GU, B.conj())
            gB = 2.0 * np.einsum("nab,nar->nbr", GU, A.conj())
            g = np.concatenate([gA.reshape(N, -1), gB.reshape(N, -1)], axis=1).ravel()
            return val, np.concatenate([g.real, g.imag])

        x = minimize(f, x, jac=True, method="L-BFGS-B", options={"maxiter": maxiter, "gtol": 1e-12, "ftol": 1e-15}).x
    A, B = factors(x)
    U = np.einsum("nar,nbr->nab", A, B).reshape(N, n)
    norms = np.linalg.norm(U, axis=1)
    keep = norms > 1e-6
    return U[keep] / norms[keep, None]


def _state_and_dims(rho, dims) -> Tuple[np.ndarray, Tuple[int, int]]:
    if isinstance(rho, BipartiteState):
        return rho.operator, tuple(rho.dims)
    op = as_hermitian(rho)
    if dims is None:
        raise ValueError("dims required for a bare operator")
    BipartiteState(op, dims)
    return op, tuple(int(d) for d in dims)


def robustness_bounds(
    rho,
    k: int,
    config: Optional[RobustnessConfig] = None,
    dims: Optional[Tuple[int, int]] = None,
    atoms: Sequence[np.ndarray] = (),
) -> RobustnessCertificate:
    """Certified interval ``[lower, upper]`` containing ``R_{S_k}(rho)``.

    ``atoms`` are extra Schmidt-rank-<=k vectors for the initial active set,
    e.g. a known decomposition of ``rho``.
    """
    cfg = config or RobustnessConfig()
    op, dims = _state_and_dims(rho, dims)
    dA, dB = dims
    if not 1 <= k <= min(dA, dB):
        raise ValueError(f"k must lie in [1, {min(dA, dB)}], got {k}")
    n = dA * dB
    tol = cfg.tolerances.sdp_gap

    w, V = np.linalg.eigh(op)
    pure = w[-2] <= 1e-12 * w[-1] and schmidt_decompose(V[:, -1], dims).rank <= k
    if k == min(dA, dB) or pure:
        # every state is in S_k, or rho is itself a single admissible atom
        if pure:
            w, V = np.array([1.0]), V[:, -1:]
        keep = w > 0
        dec = Decomposition(w[keep], V[:, keep].T, max(0.0, -w.min()), (dA, dB))
        wit = SchmidtWitness(np.zeros((n, n), dtype=complex), k, (dA, dB), 0.0, 0, cfg.seed, "trivial")
        return RobustnessCertificate(k, 0.0, dec.robustness, wit, dec, int(keep.sum()), 0)

    ppt_low, ppt_W = -np.inf, None
    if k == 1 and cfg.use_ppt:
        ppt_low, ppt_W = ppt_robustness_lower(op, dims, tol)

    base = initial_active_set(dims, k, op)
    for v in atoms:
        v = np.asarray(v, dtype=complex).ravel()
        if schmidt_decompose(v / np.linalg.norm(v), dims).rank > k:
            raise ValueError(f"atom has Schmidt rank above {k}")
        _add_vectors(base, [v / np.linalg.norm(v)])
    active = list(base)
    best_lower, best_W, best_oracle = -np.inf, None, 0.0
    best_dec = None
    history = []
    converged = False
    rounds = 0
    for rounds in range(1, cfg.max_rounds + 1):
        V = np.array(active)
        W, mu, sol = _active_set_sdp(op, V, tol)
        dec = _repair_decomposition(op, V, mu, dims)
        if best_dec is None or dec.robustness < best_dec.robustness:
            best_dec = dec
        support = mu > 1e-9 * max(1.0, mu.max())
        # warm starts from the heaviest support atoms
        heavy = V[support][np.argsort(mu[support])[::-1][:8]]
        oracle = min_schmidt_k_expectation(W, dims, k, restarts=cfg.restarts, seed=cfg.seed + rounds, starts=list(heavy))
        low, Wc = _certified_lower(W, op, oracle.value)
        if low > best_lower:
            best_lower, best_W, best_oracle = low, W, oracle.value
        history.append((max(best_lower, ppt_low, 0.0), best_dec.robustness))
        if best_dec.robustness - max(best_lower, ppt_low) <= cfg.target_gap:
            converged = True
            break
        cuts = sorted((c for c in oracle.local_minima if c[0] < -cfg.cut_eps), key=lambda c: c[0])
        new = [v for _, v in cuts[: cfg.max_cuts_per_round]]
        if cfg.polish and support.any():
            new += list(polish_atoms(op, dims, k, V[support], mu[support]))
        if len(active) > cfg.max_active:
            active = list(base) + list(V[support])
        if _add_vectors(active, new) == 0:
            converged = True
            break

    # final certification with escalated restarts
    final = min_schmidt_k_expectation(best_W, dims, k, restarts=cfg.final_restarts, seed=cfg.seed + 7919)
    oracle_value = min(final.value, best_oracle)
    lower, Wc = _certified_lower(best_W, op, oracle_value)
    source = "cutting-plane"
    if ppt_W is not None and ppt_low > lower:
        lower, Wc, source = ppt_low, ppt_W, "ppt"
    if lower <= 0.0:
        # nothing detected; the zero operator is the exact witness for 0
        lower, Wc, source = 0.0, np.zeros((n, n), dtype=complex), "trivial"
    recheck = min_schmidt_k_expectation(Wc, dims, k, restarts=cfg.restarts, seed=cfg.seed + 104729).value
    upper = best_dec.robustness
    if upper < lower <= upper + 1e-9:
        # both bounds are exact up to rounding here
        lower = upper
    witness = SchmidtWitness(Wc, k, (dA, dB), recheck, cfg.final_restarts, cfg.seed, source)
    return RobustnessCertificate(k, lower, upper, witness, best_dec, len(active), rounds, history, converged)


def robustness_hierarchy(
    rho,
    ks: Sequence[int],
    config: Optional[RobustnessConfig] = None,
    dims: Optional[Tuple[int, int]] = None,
) -> Dict[int, RobustnessCertificate]:
    """Certificates for several k with bounds shared along ``S_1 c S_2 c ...``.

    A decomposition into Schmidt-rank-<=k' projectors also serves every
    k >= k', and a witness for S_k is also one for every k' <= k. Sharing
    both keeps the intervals ordered in k.
    """
    op, dims = _state_and_dims(rho, dims)
    certs = {k: robustness_bounds(op, k, config, dims) for k in sorted(set(ks))}
    order = sorted(certs)
    out = {}
    for k in order:
        c = certs[k]
        best_up = min((certs[j] for j in order if j <= k), key=lambda x: x.upper)
        best_lo = max((certs[j] for j in order if j >= k), key=lambda x: x.lower)
        out[k] = RobustnessCertificate(
            k,
            min(best_lo.lower, best_up.upper) if best_lo.lower > best_up.upper else best_lo.lower,
            best_up.upper,
            best_lo.witness if best_lo is not c else c.witness,
            best_up.decomposition,
            c.active_set_size,
            c.rounds,
            c.history,
            c.converged,
        )
    return out


# -- local-dimension changes of witnesses -----------------------------------


@dataclass(frozen=True)
class EmbeddedWitness:
    operator: np.ndarray  # (P_A (x) P_B) W (P_A (x) P_B) on the original space
    compressed: np.ndarray  # same operator in the basis of the marginal ranges
    state: np.ndarray  # rho in that basis
    isometries: Tuple[np.ndarray, np.ndarray]  # columns span range(rho_A), range(rho_B)


def embed_witness(W, rho, dims: Optional[Tuple[int, int]] = None, tol: float = 1e-10) -> EmbeddedWitness:
    """Compress a witness onto the local supports of ``rho``.

    ``tr(W' rho) = tr(W rho)`` because ``rho`` lives inside the product of
    its marginal ranges, and W' stays feasible since local projections never
    raise the Schmidt rank.
    """
    op, dims = _state_and_dims(rho, dims)
    H = as_hermitian(W)
    VA = _range_isometry(partial_trace(op, dims, "B"), tol)
    VB = _range_isometry(partial_trace(op, dims, "A"), tol)
    V = np.kron(VA, VB)
    P = V @ V.conj().T
    return EmbeddedWitness(P @ H @ P, V.conj().T @ H @ V, V.conj().T @ op @ V, (VA, VB))


def _range_isometry(M: np.ndarray, tol: float) -> np.ndarray:
    w, V = np.linalg.eigh(M)
    return V[:, w > tol * max(1.0, w.max())][:, ::-1]


@dataclass(frozen=True)
class PaddedWitness:
    operator: np.ndarray  # W on (dA + extra) (x) dB
    dims: Tuple[int, int]
    extra: int  # number of added local dimensions on A
    level: float  # tr_A W = level * 1_B

    def embed_state(self, rho: np.ndarray) -> np.ndarray:
        """Zero-pad an operator on the original dA (x) dB into the padded space."""
        dA = self.dims[0] - self.extra
        dB = self.dims[1]
        R = np.zeros(self.dims * 2, dtype=complex)
        R[:dA, :, :dA, :] = np.asarray(rho).reshape(dA, dB, dA, dB)
        n = self.dims[0] * dB
        return R.reshape(n, n)


def pad_witness(W, dims: Tuple[int, int], tol: float = 1e-12) -> PaddedWitness:
    """Extend A so the witness gets a marginal proportional to the identity.

    With ``w = ||tr_A W||`` and ``D = w 1 - tr_A W`` (PSD), the block
    ``Delta = (1_m / m) (x) D`` on ``m = max(1, ceil(||D||))`` new A-levels is
    PSD, satisfies ``Delta <= 1`` and brings ``tr_A`` up to ``w 1`` exactly.
    Being block diagonal, the result is still nonnegative on S_k and agrees
    with W on states supported on the old space.
    """
    H = as_hermitian(W)
    dA, dB = int(dims[0]), int(dims[1])
    WB = partial_trace(H, (dA, dB), "A")
    w = operator_norm(WB)
    D = w * np.eye(dB) - WB
    if operator_norm(D) <= tol * max(1.0, w):
        return PaddedWitness(H, (dA, dB), 0, float(np.real(np.trace(WB))) / dB)
    m = max(1, int(math.ceil(operator_norm(D) - 1e-12)))
    D = 0.5 * (D + D.conj().T)
    n0, n1 = dA * dB, (dA + m) * dB
    out = np.zeros((dA + m, dB, dA + m, dB), dtype=complex)
    out[:dA, :, :dA, :] = H.reshape(dA, dB, dA, dB)
    for i in range(dA, dA + m):
        out[i, :, i, :] = D / m
    return PaddedWitness(out.reshape(n1, n1), (dA + m, dB), m, float(w))


def search_order_reversal(
    dims: Tuple[int, int],
    k1: int,
    k2: int,
    trials: int = 10,
    config: Optional[RobustnessConfig] = None,
    rank: int = 2,
) -> List[Dict]:
    """Look for states whose robustness order flips between two levels.

    Samples low-rank random states and reports pairs with certified intervals
    ``R_k1(a) < R_k1(b)`` and ``R_k2(a) > R_k2(b)``; an empty list means none
    was found, not that none exists.
    """
    cfg = config or RobustnessConfig()
    rng = np.random.default_rng(cfg.seed)
    from .quantum import random_state

    samples = []
    for _ in range(trials):
        rho = random_state(dims, rng, rank=rank)
        h = robustness_hierarchy(rho, [k1, k2], cfg)
        samples.append((rho, h[k1], h[k2]))
    found = []
    for i, (_, a1, a2) in enumerate(samples):
        for j, (_, b1, b2) in enumerate(samples):
            if a1.upper < b1.lower and a2.lower > b2.upper:
                found.append({
                    "a": i,
                    "b": j,
                    f"R{k1}_a": [a1.lower, a1.upper],
                    f"R{k1}_b": [b1.lower, b1.upper],
                    f"R{k2}_a": [a2.lower, a2.upper],
                    f"R{k2}_b": [b2.lower, b2.upper],
                })
    return found
