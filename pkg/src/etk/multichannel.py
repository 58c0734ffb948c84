"""Multichannel discrimination tailored to a Schmidt-number witness.

A witness ``W <= 1`` whose A-marginal-trace is proportional to the identity
gives ``F = 1 - W >= 0``, read as the Choi operator of ``c`` times a unital CP
map. Its adjoint ``L`` is a channel B -> A. Conjugating ``L`` by the d_A^2
Weyl operators and decoding with the Bell measurement yields a guessing
probability ``tr(F rho) / c = (1 - tr(W rho)) / c`` for any probe ``rho``.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import DEFAULT
from .linalg import as_hermitian, min_eig, partial_trace
from .quantum import (
    BipartiteState,
    ChannelRep,
    bell_povm,
    choi_of_map,
    is_channel,
    max_entangled,
    random_pure_schmidt_rank,
    weyl,
    weyl_indices,
)
from .robustness import PaddedWitness, RobustnessCertificate, RobustnessConfig, pad_witness, robustness_bounds
from .sdp import Block, SdpProblem, guessing_probability_sdp, solve
from .linalg import hermitian_basis


class CertificationError(RuntimeError):
    """A computed quantity falls outside its certified interval."""


def witness_to_channel(W, dims: Tuple[int, int], tol: float = 1e-9) -> Tuple[ChannelRep, float]:
    """Channel ``L: B -> A`` and constant c with ``F = 1 - W = c chi_{L^dag}``.

    ``dims = (d_A, d_B)`` of the (already padded) witness. With the trace-one
    Choi convention, unitality of ``L^dag`` fixes ``c = tr(F) d_A / d_B``.
    """
    H = as_hermitian(W)
    dA, dB = int(dims[0]), int(dims[1])
    F = np.eye(dA * dB) - H
    if min_eig(F) < -tol:
        raise ValueError("1 - W is not positive semidefinite: W <= 1 fails")
    trF = float(np.real(np.trace(F)))
    if trF <= tol:
        raise ValueError("1 - W vanishes: no channel")
    FB = partial_trace(F, (dA, dB), "A")
    dev = np.max(np.abs(FB - np.eye(dB) * trF / dB))
    if dev > 1e-8 * max(1.0, trF):
        raise ValueError(f"tr_A W is not proportional to the identity (deviation {dev:.3e}); pad the witness first")
    c = trF * dA / dB
    dual = ChannelRep(F / c, dA, dB)  # L^dag: A -> B, unital
    ch = choi_of_map(dual.adjoint, dB, dA)
    return ch, c


@dataclass(frozen=True)
class MultichannelTask:
    channels: Tuple[ChannelRep, ...]  # ordered as weyl_indices(d_A)
    base: ChannelRep
    c: float
    d_A: int

    @property
    def priors(self) -> np.ndarray:
        return np.full(len(self.channels), 1.0 / len(self.channels))

    @property
    def d_B(self) -> int:
        return self.base.d_in

    def outputs(self, rho) -> List[np.ndarray]:
        """Subnormalized outputs ``(1/d_A^2) (id (x) G_kl)(rho)`` on A (x) A."""
        R = as_hermitian(rho)
        p = 1.0 / len(self.channels)
        return [p * g.partial(R, self.d_A) for g in self.channels]


def build_task(base: ChannelRep, c: float, d_A: Optional[int] = None) -> MultichannelTask:
    d = base.d_out if d_A is None else int(d_A)
    if base.d_out != d:
        raise ValueError(f"channel output {base.d_out} does not match d_A={d}")
    if not is_channel(base, 1e-8):
        raise ValueError("base map is not CPTP")
    w = weyl(d)
    chans = []
    for k, l in weyl_indices(d):
        U = np.kron(np.eye(base.d_in), w.op(k, l))
        chans.append(ChannelRep(U @ base.choi @ U.conj().T, base.d_in, d))
    return MultichannelTask(tuple(chans), base, float(c), d)


def guess_with_bell(task: MultichannelTask, rho) -> float:
    """Success probability of the Bell-measurement decoder."""
    M = bell_povm(task.d_A)
    return float(sum(np.real(np.trace(m @ o)) for m, o in zip(M, task.outputs(rho))))


def optimal_guess(task: MultichannelTask, rho, tol: float = DEFAULT.sdp_gap) -> float:
    """Optimal-POVM guessing probability via the general SDP (one block per channel)."""
    return guessing_probability_sdp(task.outputs(rho), tol)[0]


def covariant_optimal_guess(task: MultichannelTask, rho, tol: float = DEFAULT.sdp_gap) -> float:
    """Optimal guessing probability using Weyl covariance of the ensemble.

    Averaging any POVM over the covariance group keeps its value, so one may
    take ``M_kl = (1 (x) U_kl) N (1 (x) U_kl)^dag`` with ``tr_2 N = 1 / d``;
    the value is ``tr(N (id (x) L)(rho))``.
    """
    d = task.d_A
    omega = task.base.partial(as_hermitian(rho), d)
    basis = hermitian_basis(d)
    cons = [([np.kron(B, np.eye(d))], float(np.real(np.trace(B))) / d) for B in basis]
    prob = SdpProblem.from_constraints([Block("s", d * d, True)], [omega], cons, sense="max")
    sol = solve(prob, tol=tol)
    sol.require_optimal()
    return float(sol.primal_value)


@dataclass(frozen=True)
class CeilingReport:
    ceiling: float  # 1 / c
    empirical: float  # best optimal-POVM value found on sampled S_k probes
    samples: int
    holds: bool


def bound_S_k(task: MultichannelTask, k: int, samples: int = 200, seed: int = 0, tol: float = 1e-7) -> CeilingReport:
    """``1 / c`` with an empirical check over random Schmidt-rank-<=k probes."""
    rng = np.random.default_rng(seed)
    dA, dB = task.d_A, task.d_B
    best = 0.0
    for _ in range(samples):
        v = random_pure_schmidt_rank(dA, dB, k, rng)
        best = max(best, covariant_optimal_guess(task, np.outer(v, v.conj())))
    ceiling = 1.0 / task.c
    return CeilingReport(ceiling, best, samples, best <= ceiling + tol)


@dataclass
class MultichannelReport:
    d_A: int
    k: int
    c: float
    p_guess_rho: float
    bound_Sk: float
    ratio: float
    robustness_interval: Tuple[float, float]
    consistent: bool
    task: Optional[MultichannelTask] = field(default=None, repr=False)

    def to_dict(self) -> Dict:
        return {
            "d_A": self.d_A,
            "k": self.k,
            "c": self.c,
            "p_guess_rho": self.p_guess_rho,
            "bound_Sk": self.bound_Sk,
            "ratio": self.ratio,
            "robustness_interval": list(self.robustness_interval),
            "consistent": self.consistent,
        }


def task_from_witness(W, dims: Tuple[int, int]) -> Tuple[MultichannelTask, PaddedWitness]:
    padded = pad_witness(W, dims)
    ch, c = witness_to_channel(padded.operator, padded.dims)
    return build_task(ch, c), padded


def advantage_ratio(
    rho,
    k: int,
    certificate: Optional[RobustnessCertificate] = None,
    config: Optional[RobustnessConfig] = None,
    slack: float = 1e-6,
) -> MultichannelReport:
    """Ratio ``p_guess(rho) / (1/c)`` in the task built from the certified witness.

    The ratio equals ``1 - tr(W rho)``; it is checked against the certified
    interval, ``lower - slack <= ratio - 1 <= upper + slack``.
    """
    if not isinstance(rho, BipartiteState):
        raise TypeError("rho must be a BipartiteState")
    cert = certificate if certificate is not None else robustness_bounds(rho, k, config)
    if cert.k != k:
        raise ValueError(f"certificate is for k={cert.k}, not {k}")
    task, padded = task_from_witness(cert.witness.operator, rho.dims)
    p = guess_with_bell(task, padded.embed_state(rho.operator))
    ratio = p * task.c
    ok = cert.lower - slack <= ratio - 1.0 <= cert.upper + slack
    return MultichannelReport(task.d_A, k, task.c, p, 1.0 / task.c, ratio, (cert.lower, cert.upper), ok, task)
