"""States, channels, instruments, the Choi isomorphism and Weyl/Bell structures.

Choi convention: ``choi = (id (x) L)(|phi+><phi+|)`` with the normalized
maximally entangled vector on the input space, so TP maps have unit-trace
Choi operators. Indices are ordered (input, output).
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .config import DEFAULT
from .linalg import (
    DimensionError,
    as_hermitian,
    as_matrix,
    eigvalsh,
    max_eig,
    min_eig,
    partial_trace,
)


class Check(NamedTuple):
    ok: bool
    residual: float


@dataclass(frozen=True)
class BipartiteState:
    operator: np.ndarray
    dims: Tuple[int, int]

    def __post_init__(self):
        rho = as_hermitian(self.operator)
        dA, dB = int(self.dims[0]), int(self.dims[1])
        if rho.shape != (dA * dB, dA * dB):
            raise DimensionError(f"state of shape {rho.shape} does not match dims ({dA}, {dB})")
        if abs(np.trace(rho).real - 1.0) > DEFAULT.compare:
            raise ValueError(f"state trace {np.trace(rho).real:.12g} != 1")
        if min_eig(rho) < -DEFAULT.psd_floor:
            raise ValueError(f"state is not positive semidefinite (min eigenvalue {min_eig(rho):.3e})")
        object.__setattr__(self, "operator", rho)
        object.__setattr__(self, "dims", (dA, dB))

    @property
    def dim(self) -> int:
        return self.dims[0] * self.dims[1]

    def marginal(self, keep: str) -> np.ndarray:
        return partial_trace(self.operator, self.dims, "B" if keep == "A" else "A")


class ChannelRep:
    """A linear map on operators held as its (trace-one convention) Choi operator.

    Also used for plain Hermiticity-preserving maps such as differences of
    channels; the CP/TP properties are checked, not assumed.
    """

    def __init__(self, choi, d_in: int, d_out: int, normalization: str = "trace-one"):
        J = as_matrix(choi)
        if normalization not in ("trace-one", "unnormalized"):
            raise ValueError(f"unknown Choi normalization {normalization!r}")
        if J.shape != (d_in * d_out, d_in * d_out):
            raise DimensionError(f"Choi of shape {J.shape} does not match d_in={d_in}, d_out={d_out}")
        if normalization == "unnormalized":
            J = J / d_in
        self.choi = as_hermitian(J)
        self.d_in = int(d_in)
        self.d_out = int(d_out)
        self.normalization = "trace-one"

    def __repr__(self):
        return f"ChannelRep(d_in={self.d_in}, d_out={self.d_out})"

    @cached_property
    def _J4(self) -> np.ndarray:
        # J4[i, o, j, p] = <i o| J |j p> with J the unnormalized Choi
        return (self.d_in * self.choi).reshape(self.d_in, self.d_out, self.d_in, self.d_out)

    def __call__(self, X) -> np.ndarray:
        X = as_matrix(X)
        if X.shape != (self.d_in, self.d_in):
            raise DimensionError(f"input of shape {X.shape} does not match d_in={self.d_in}")
        return np.einsum("ij,iojp->op", X, self._J4)

    def adjoint(self, Y) -> np.ndarray:
        """Heisenberg-picture action, ``tr(Y L(X)) = tr(L^dag(Y) X)``."""
        Y = as_matrix(Y)
        if Y.shape != (self.d_out, self.d_out):
            raise DimensionError(f"input of shape {Y.shape} does not match d_out={self.d_out}")
        return np.einsum("po,iojp->ji", Y, self._J4)

    def partial(self, rho, d_anc: int) -> np.ndarray:
        """``(id_anc (x) L)(rho)`` for ``rho`` on anc (x) in."""
        R = as_matrix(rho)
        if R.shape != (d_anc * self.d_in, d_anc * self.d_in):
            raise DimensionError(
                f"operator of shape {R.shape} does not match ancilla {d_anc} x input {self.d_in}"
            )
        R4 = R.reshape(d_anc, self.d_in, d_anc, self.d_in)
        out = np.einsum("aibj,iojp->aobp", R4, self._J4)
        n = d_anc * self.d_out
        return out.reshape(n, n)

    def partial_adjoint(self, Y, d_anc: int) -> np.ndarray:
        Y = as_matrix(Y)
        if Y.shape != (d_anc * self.d_out, d_anc * self.d_out):
            raise DimensionError("operator does not match ancilla x output dimensions")
        Y4 = Y.reshape(d_anc, self.d_out, d_anc, self.d_out)
        K = np.einsum("bpao,iojp->bjai", Y4, self._J4)
        n = d_anc * self.d_in
        return K.reshape(n, n)

    # linear structure on maps
    def _combine(self, other: "ChannelRep", sign: float) -> "ChannelRep":
        if (self.d_in, self.d_out) != (other.d_in, other.d_out):
            raise DimensionError("maps have different dimensions")
        return ChannelRep(self.choi + sign * other.choi, self.d_in, self.d_out)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, scalar: float):
        return ChannelRep(float(scalar) * self.choi, self.d_in, self.d_out)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def to_dict(self):
        from .io import matrix_to_dict

        d = matrix_to_dict(self.choi)
        d.update({"d_in": self.d_in, "d_out": self.d_out, "normalization": self.normalization})
        return d


@dataclass(frozen=True)
class Instrument:
    subchannels: Tuple[ChannelRep, ...]

    def __post_init__(self):
        subs = tuple(self.subchannels)
        if not subs:
            raise ValueError("an instrument needs at least one subchannel")
        d = (subs[0].d_in, subs[0].d_out)
        if any((s.d_in, s.d_out) != d for s in subs):
            raise DimensionError("subchannels must share input and output dimensions")
        for s in subs:
            if not is_cp(s).ok:
                raise ValueError("subchannel is not completely positive")
            if not is_trace_nonincreasing(s).ok:
                raise ValueError("subchannel increases trace")
        if not is_tp(self.total).ok:
            raise ValueError("subchannels do not sum to a trace-preserving map")
        object.__setattr__(self, "subchannels", subs)

    @property
    def total(self) -> ChannelRep:
        out = self.subchannels[0]
        for s in self.subchannels[1:]:
            out = out + s
        return out

    @classmethod
    def from_channels(cls, channels: Sequence[ChannelRep], priors: Sequence[float]) -> "Instrument":
        """The instrument ``{p_i L_i}`` of channels applied with prior probabilities ``p_i``."""
        if len(channels) != len(priors):
            raise ValueError("need one prior per channel")
        if abs(sum(priors) - 1.0) > DEFAULT.compare or min(priors) < 0:
            raise ValueError("priors must be a probability distribution")
        return cls(tuple(p * ch for p, ch in zip(priors, channels)))


def instrument_guessing_probability(inst: Instrument, rho, d_anc: int):
    """Optimal guessing probability of the branch taken, with fixed probe state ``rho``."""
    from .sdp import guessing_probability_sdp

    outs = [s.partial(rho, d_anc) for s in inst.subchannels]
    return guessing_probability_sdp(outs)


# -- states ----------------------------------------------------------------


def max_entangled_vector(d: int) -> np.ndarray:
    if d < 1:
        raise ValueError("dimension must be positive")
    v = np.zeros(d * d, dtype=complex)
    v[:: d + 1] = 1.0 / np.sqrt(d)
    return v


def max_entangled(d: int) -> BipartiteState:
    v = max_entangled_vector(d)
    return BipartiteState(np.outer(v, v.conj()), (d, d))


def embedded_max_entangled(m: int, d: int) -> np.ndarray:
    """|phi+_m><phi+_m| on C^m (x) C^d, using the first m basis vectors of the second factor."""
    if m > d:
        raise ValueError("m must not exceed d")
    v = np.zeros(m * d, dtype=complex)
    for i in range(m):
        v[i * d + i] = 1.0 / np.sqrt(m)
    return np.outer(v, v.conj())


def product_state(a, b) -> np.ndarray:
    v = np.kron(np.asarray(a, dtype=complex).ravel(), np.asarray(b, dtype=complex).ravel())
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def isotropic_state(d: int, fidelity: float) -> BipartiteState:
    """``F |phi+><phi+| + (1 - F) (1 - |phi+><phi+|) / (d^2 - 1)``."""
    phi = max_entangled(d).operator
    n = d * d
    rho = fidelity * phi + (1 - fidelity) * (np.eye(n) - phi) / (n - 1)
    return BipartiteState(rho, (d, d))


# -- Choi isomorphism ------------------------------------------------------


def choi_of_map(action: Callable[[np.ndarray], np.ndarray], d_in: int, d_out: Optional[int] = None) -> ChannelRep:
    """Choi operator of a linear map given by its action on matrices."""
    blocks = {}
    for i in range(d_in):
        for j in range(d_in):
            E = np.zeros((d_in, d_in), dtype=complex)
            E[i, j] = 1.0
            blocks[i, j] = as_matrix(action(E))
    out_dim = blocks[0, 0].shape[0]
    if d_out is not None and out_dim != d_out:
        raise DimensionError(f"map produces {out_dim}-dimensional outputs, expected {d_out}")
    J = np.zeros((d_in, out_dim, d_in, out_dim), dtype=complex)
    for (i, j), B in blocks.items():
        if B.shape != (out_dim, out_dim):
            raise DimensionError("map outputs have inconsistent shapes")
        J[i, :, j, :] = B
    return ChannelRep(J.reshape(d_in * out_dim, d_in * out_dim) / d_in, d_in, out_dim)


def map_from_choi(ch: ChannelRep) -> Callable[[np.ndarray], np.ndarray]:
    return ch.__call__


def apply_partial(channel: ChannelRep, state) -> np.ndarray:
    """``(id (x) L)(rho)`` acting on the second factor of a bipartite state."""
    if isinstance(state, BipartiteState):
        dA, dB = state.dims
        rho = state.operator
    else:
        rho, (dA, dB) = state
    if dB != channel.d_in:
        raise DimensionError(f"channel input {channel.d_in} does not match d_B={dB}")
    return channel.partial(rho, dA)


def identity_channel(d: int) -> ChannelRep:
    return ChannelRep(max_entangled(d).operator, d, d)


def unitary_channel(U) -> ChannelRep:
    U = as_matrix(U)
    d = U.shape[0]
    return choi_of_map(lambda X: U @ X @ U.conj().T, U.shape[1], d)


def depolarizing_channel(d: int) -> ChannelRep:
    return ChannelRep(np.eye(d * d) / (d * d), d, d)


def transpose_map(d: int) -> ChannelRep:
    return choi_of_map(lambda X: X.T, d, d)


# -- property checks -------------------------------------------------------


def is_tp(ch: ChannelRep, tol: float = DEFAULT.compare) -> Check:
    r = partial_trace(ch.choi, (ch.d_in, ch.d_out), "B") - np.eye(ch.d_in) / ch.d_in
    res = float(np.max(np.abs(r)))
    return Check(res <= tol, res)


def is_trace_nonincreasing(ch: ChannelRep, tol: float = DEFAULT.compare) -> Check:
    r = partial_trace(ch.choi, (ch.d_in, ch.d_out), "B") - np.eye(ch.d_in) / ch.d_in
    res = max_eig(r)
    return Check(res <= tol, max(res, 0.0))


def is_unital(ch: ChannelRep, tol: float = DEFAULT.compare) -> Check:
    r = partial_trace(ch.choi, (ch.d_in, ch.d_out), "A") - np.eye(ch.d_out) / ch.d_in
    res = float(np.max(np.abs(r)))
    return Check(res <= tol, res)


def is_cp(ch: ChannelRep, tol: float = DEFAULT.compare) -> Check:
    w = min_eig(ch.choi)
    return Check(w >= -tol, max(-w, 0.0))


def is_channel(ch: ChannelRep, tol: float = DEFAULT.compare) -> bool:
    return is_tp(ch, tol).ok and is_cp(ch, tol).ok


def choi_min_eig(ch: ChannelRep) -> float:
    return float(eigvalsh(ch.choi)[0])


# -- Weyl operators and the Bell basis -------------------------------------


@dataclass(frozen=True)
class WeylOperators:
    d: int
    X: np.ndarray
    Z: np.ndarray
    omega: complex

    def op(self, k: int, l: int) -> np.ndarray:
        """``X^k Z^l``."""
        return np.linalg.matrix_power(self.X, k % self.d) @ np.linalg.matrix_power(self.Z, l % self.d)


def weyl(d: int) -> WeylOperators:
    if d < 1:
        raise ValueError("dimension must be positive")
    X = np.roll(np.eye(d, dtype=complex), 1, axis=0)  # X|n> = |n+1 mod d>
    omega = np.exp(2j * np.pi / d)
    Z = np.diag(omega ** np.arange(d))
    return WeylOperators(d, X, Z, omega)


def weyl_indices(d: int) -> List[Tuple[int, int]]:
    return [(k, l) for k in range(d) for l in range(d)]


def bell_povm(d: int) -> List[np.ndarray]:
    """The d^2 projectors ``(1 (x) X^k Z^l) phi+ (1 (x) X^k Z^l)^dag``, ordered by (k, l)."""
    if d < 2:
        raise ValueError("Bell basis needs d >= 2")
    W = weyl(d)
    v = max_entangled_vector(d)
    out = []
    for k, l in weyl_indices(d):
        u = np.kron(np.eye(d), W.op(k, l)) @ v
        out.append(np.outer(u, u.conj()))
    return out


# -- random sampling -------------------------------------------------------


def random_density(n: int, rng: np.random.Generator, rank: Optional[int] = None) -> np.ndarray:
    """Hilbert-Schmidt (rank = n) or induced-measure random density operator."""
    r = n if rank is None else rank
    G = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_state(dims: Tuple[int, int], rng: np.random.Generator, rank: Optional[int] = None) -> BipartiteState:
    return BipartiteState(random_density(dims[0] * dims[1], rng, rank), dims)


def random_pure_schmidt_rank(dA: int, dB: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Random unit vector on C^dA (x) C^dB whose coefficient matrix has rank <= k."""
    A = rng.standard_normal((dA, k)) + 1j * rng.standard_normal((dA, k))
    B = rng.standard_normal((k, dB)) + 1j * rng.standard_normal((k, dB))
    v = (A @ B).ravel()
    return v / np.linalg.norm(v)


def random_isometry(d_in: int, d_out: int, rng: np.random.Generator) -> np.ndarray:
    G = rng.standard_normal((d_out, d_in)) + 1j * rng.standard_normal((d_out, d_in))
    Q, R = np.linalg.qr(G)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_channel(d_in: int, d_out: int, rng: np.random.Generator, kraus_rank: Optional[int] = None) -> ChannelRep:
    """Random CPTP map: partial trace over an environment of a random isometry."""
    r = kraus_rank if kraus_rank is not None else d_in * d_out
    r = max(r, -(-d_in // d_out))
    V = random_isometry(d_in, d_out * r, rng)
    V4 = V.reshape(d_out, r, d_in)

    def action(X):
        return np.einsum("aei,ij,bej->ab", V4, X, V4.conj())

    return choi_of_map(action, d_in, d_out)
