"""Binary state and channel discrimination.

Helstrom guessing, see-saw estimates of the Schmidt-rank-restricted norm of a
Hermiticity-preserving map, the diamond norm SDP, and the pipeline turning a
trace-preserving k-positive map into a pair of channels that every state of
Schmidt number > k discriminates better than any state in S_k.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import DEFAULT
from .linalg import as_hermitian, eigvalsh, hermitian_basis, jordan_parts, min_eig, operator_norm, partial_trace, trace_norm
from .quantum import (
    BipartiteState,
    ChannelRep,
    choi_of_map,
    is_channel,
    is_tp,
    random_pure_schmidt_rank,
)
from .schmidt import min_schmidt_k_expectation
from .sdp import Block, SdpError, SdpProblem, solve


def helstrom(rho1, rho2, tol: float = DEFAULT.compare) -> float:
    """Optimal guessing probability ``(1 + ||rho1 - rho2||_1) / 2`` for subnormalized inputs."""
    r1, r2 = as_hermitian(rho1), as_hermitian(rho2)
    if r1.shape != r2.shape:
        raise ValueError("states must have the same dimension")
    if min(min_eig(r1), min_eig(r2)) < -tol:
        raise ValueError("states must be positive semidefinite")
    total = float(np.real(np.trace(r1) + np.trace(r2)))
    if abs(total - 1.0) > tol:
        raise ValueError(f"traces must sum to 1, got {total:.12g}")
    return 0.5 * (1.0 + trace_norm(r1 - r2))


@dataclass(frozen=True)
class BinaryTask:
    phi1: ChannelRep
    phi2: ChannelRep
    p: float = 0.5

    def __post_init__(self):
        if (self.phi1.d_in, self.phi1.d_out) != (self.phi2.d_in, self.phi2.d_out):
            raise ValueError("channels must have matching dimensions")
        if not 0.0 < self.p < 1.0:
            raise ValueError("prior must lie in (0, 1)")
        for ch in (self.phi1, self.phi2):
            if not is_channel(ch, 1e-8):
                raise ValueError("both maps must be CPTP")

    @property
    def difference(self) -> ChannelRep:
        return self.p * self.phi1 - (1.0 - self.p) * self.phi2

    def guessing_probability(self, rho, d_anc: int) -> float:
        """Best guess with probe ``rho`` on anc (x) in."""
        return helstrom(self.p * self.phi1.partial(rho, d_anc), (1 - self.p) * self.phi2.partial(rho, d_anc))


# -- norms of Hermiticity-preserving maps ------------------------------------


@dataclass
class KnormEstimate:
    value: float
    vector: np.ndarray  # input on anc (x) in, Schmidt rank <= k
    k: int


def _output_norm(theta: ChannelRep, psi: np.ndarray) -> Tuple[float, np.ndarray]:
    X = theta.partial(np.outer(psi, psi.conj()), theta.d_in)
    w, V = np.linalg.eigh(0.5 * (X + X.conj().T))
    Q = (V * np.sign(w)) @ V.conj().T
    return float(np.sum(np.abs(w))), Q


def knorm_estimate(
    theta: ChannelRep,
    k: int,
    restarts: int = 16,
    seed: int = 0,
    iters: int = 200,
    starts: Sequence[np.ndarray] = (),
) -> KnormEstimate:
    """See-saw lower bound on ``sup ||(id (x) theta)(sigma)||_1`` over sigma in S_k.

    The ancilla has the input dimension. The objective is convex in the input,
    so pure Schmidt-rank-<=k inputs suffice. Each sweep fixes the Helstrom
    observable ``Q`` of the current output and then maximizes
    ``<psi|(id (x) theta^dag)(Q)|psi>`` with the Schmidt-rank oracle started at
    the current vector, so the value never decreases.
    """
    d = theta.d_in
    if not 1 <= k <= d:
        raise ValueError(f"k must lie in [1, {d}], got {k}")
    rng = np.random.default_rng(seed)
    inits = [np.asarray(v, dtype=complex) / np.linalg.norm(v) for v in starts]
    inits += [random_pure_schmidt_rank(d, d, k, rng) for _ in range(restarts)]
    best = KnormEstimate(0.0, inits[0] if inits else random_pure_schmidt_rank(d, d, k, rng), k)
    for psi in inits:
        value, Q = _output_norm(theta, psi)
        for _ in range(iters):
            H = theta.partial_adjoint(Q, d)
            nxt = min_schmidt_k_expectation(-H, (d, d), k, restarts=0, starts=[psi]).vector
            new_value, new_Q = _output_norm(theta, nxt)
            if new_value <= value + 1e-13:
                break
            psi, value, Q = nxt, new_value, new_Q
        if value > best.value:
            best = KnormEstimate(value, psi, k)
    return best


def knorm_hierarchy(theta: ChannelRep, ks: Sequence[int], restarts: int = 16, seed: int = 0) -> Dict[int, KnormEstimate]:
    """Estimates for increasing k, each warm-started from the previous optimizer
    (a Schmidt-rank-k' vector is admissible for every k >= k')."""
    out: Dict[int, KnormEstimate] = {}
    prev: List[np.ndarray] = []
    for k in sorted(set(ks)):
        est = knorm_estimate(theta, k, restarts, seed, starts=prev)
        if out:
            last = out[max(out)]
            if last.value >= est.value:
                est = KnormEstimate(last.value, last.vector, k)
        out[k] = est
        prev = [est.vector]
    return out


def diamond_norm(theta: ChannelRep, tol: float = DEFAULT.sdp_gap) -> float:
    """``max <J, W>`` s.t. ``-rho (x) 1 <= W <= rho (x) 1``, ``tr rho = 1``.

    J is the unnormalized Choi on in (x) out. Valid for any
    Hermiticity-preserving map; W is split as ``(N - P) / 2`` with
    ``N + P = 2 rho (x) 1``.
    """
    din, dout = theta.d_in, theta.d_out
    n = din * dout
    J = din * theta.choi
    if np.max(np.abs(J)) == 0.0:
        return 0.0
    basis = hermitian_basis(n)
    blocks = [Block("s", din, True), Block("s", n, True), Block("s", n, True)]
    cons = [([np.eye(din), None, None], 1.0)]
    for B in basis:
        Bin = partial_trace(B, (din, dout), "B")
        cons.append(([-2.0 * Bin, B, B], 0.0))
    prob = SdpProblem.from_constraints(blocks, [np.zeros((din, din)), -0.5 * J, 0.5 * J], cons, sense="max")
    sol = solve(prob, tol=tol)
    sol.require_optimal()
    return float(sol.primal_value)


# -- the trace-annihilating construction -------------------------------------


def is_k_positive(ch: ChannelRep, k: int, restarts: int = 64, seed: int = 0, tol: float = 1e-9) -> bool:
    """k-positivity as nonnegativity of the Choi on Schmidt-rank-<=k vectors.

    Exact for ``k = min(d_in, d_out)``; otherwise as reliable as the oracle.
    """
    m = min(ch.d_in, ch.d_out)
    value = min_schmidt_k_expectation(ch.choi, (ch.d_in, ch.d_out), min(k, m), restarts=restarts, seed=seed).value
    return value >= -tol


def ta_from_ktp(ktp: ChannelRep, tol: float = DEFAULT.compare) -> ChannelRep:
    """``X -> L(X) (+) (-tr X)|f><f|`` with the flag ``f`` as one extra output level."""
    chk = is_tp(ktp, tol)
    if not chk.ok:
        raise ValueError(f"map is not trace preserving (residual {chk.residual:.3e})")
    d_out = ktp.d_out

    def action(X):
        out = np.zeros((d_out + 1, d_out + 1), dtype=complex)
        out[:d_out, :d_out] = ktp(X)
        out[d_out, d_out] = -np.trace(X)
        return out

    return choi_of_map(action, ktp.d_in, d_out + 1)


def trace_annihilation_residual(ta: ChannelRep) -> float:
    return float(np.max(np.abs(partial_trace(ta.choi, (ta.d_in, ta.d_out), "B"))))


@dataclass(frozen=True)
class ChannelPair:
    phi1: ChannelRep
    phi2: ChannelRep
    c: float

    @property
    def difference(self) -> ChannelRep:
        return self.phi1 - self.phi2

    def output_trace_norm(self, rho, d_anc: Optional[int] = None) -> float:
        """``||(id (x) (phi1 - phi2))(rho)||_1``."""
        if isinstance(rho, BipartiteState):
            rho, d_anc = rho.operator, rho.dims[0]
        d_anc = self.phi1.d_in if d_anc is None else d_anc
        return trace_norm(self.difference.partial(rho, d_anc))


def channel_pair_from_ta(ta: ChannelRep, tol: float = 1e-9) -> ChannelPair:
    """CPTP maps with ``c ta = phi1 - phi2``.

    The Jordan parts of the Choi give CP maps ``L_a``, ``L_b`` with a common
    ``A = L_a^dag(1) = L_b^dag(1)``. With ``a = ||A||`` the completion
    ``T(X) = tr((a 1 - A) X) omega`` (omega maximally mixed) makes
    ``(L_{a,b} + T) / a`` trace preserving, and ``c = 1 / a``.
    """
    res = trace_annihilation_residual(ta)
    if res > tol:
        raise ValueError(f"map is not trace annihilating (residual {res:.3e})")
    din, dout = ta.d_in, ta.d_out
    Jp, Jm = jordan_parts(ta.choi)
    A = din * partial_trace(Jp, (din, dout), "B").T
    a = operator_norm(A)
    if a <= tol:
        raise ValueError("zero map: no channel pair")
    Tc = np.kron((a * np.eye(din) - A).T, np.eye(dout) / dout) / din
    phi1 = ChannelRep((Jp + Tc) / a, din, dout)
    phi2 = ChannelRep((Jm + Tc) / a, din, dout)
    return ChannelPair(phi1, phi2, 1.0 / a)


@dataclass(frozen=True)
class AdvantageReport:
    c: float
    value_with_rho: float
    bound_Sk: float
    margin: float
    p_guess_rho: float
    p_guess_Sk: float

    def to_dict(self) -> Dict[str, float]:
        return {
            "c": self.c,
            "value_with_rho": self.value_with_rho,
            "bound_Sk": self.bound_Sk,
            "margin": self.margin,
            "p_guess_rho": self.p_guess_rho,
            "p_guess_Sk": self.p_guess_Sk,
        }


def binary_advantage(rho, k: int, ktp: ChannelRep, check_positivity: bool = True) -> Tuple[AdvantageReport, ChannelPair]:
    """Advantage of ``rho`` in the pair built from a TP k-positive map.

    ``value_with_rho`` is the output trace norm of the pair difference,
    ``bound_Sk = 2c`` the common value on S_k, and the guessing
    probabilities use equal priors: ``p = 1/2 + ||.||_1 / 4``.
    """
    if isinstance(rho, BipartiteState):
        op, (dA, dB) = rho.operator, rho.dims
    else:
        op, (dA, dB) = rho
        BipartiteState(op, (dA, dB))
    if dB != ktp.d_in:
        raise ValueError(f"map input {ktp.d_in} does not match d_B={dB}")
    if check_positivity and not is_k_positive(ktp, k):
        raise ValueError(f"map is not {k}-positive")
    pair = channel_pair_from_ta(ta_from_ktp(ktp))
    value = pair.output_trace_norm(op, dA)
    bound = 2.0 * pair.c
    report = AdvantageReport(pair.c, value, bound, value - bound, 0.5 + 0.25 * value, 0.5 + 0.25 * bound)
    return report, pair


def sampled_sk_trace_norms(pair: ChannelPair, k: int, samples: int = 200, seed: int = 0) -> np.ndarray:
    """Output trace norms for random Schmidt-rank-<=k pure probes (ancilla = input dimension)."""
    d = pair.phi1.d_in
    rng = np.random.default_rng(seed)
    vals = np.empty(samples)
    for s in range(samples):
        v = random_pure_schmidt_rank(d, d, k, rng)
        vals[s] = pair.output_trace_norm(np.outer(v, v.conj()), d)
    return vals


def isotropic_margin(d: int, k: int, c: float) -> float:
    """``c * 2 (d - k) / (d (d k - 1))``: margin of phi+_d with the t = 1/k reduction map."""
    return c * 2.0 * (d - k) / (d * (d * k - 1))
