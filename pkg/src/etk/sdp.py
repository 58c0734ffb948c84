"""Small dense semidefinite-program solver.

Solves the standard primal/dual pair

    minimize    <C, X>                 maximize    b.y
    subject to  <A_i, X> = b_i         subject to  C - sum_i y_i A_i = S
                X >= 0                             S >= 0

where ``X`` is block diagonal. Blocks are either PSD matrix blocks (real
symmetric or complex Hermitian) or nonnegative-orthant blocks. Hermitian
blocks are embedded into real symmetric blocks of twice the size, so the
iteration itself is real-valued.

The method is an infeasible-start primal-dual interior-point iteration using
the HKM search direction with Mehrotra predictor-corrector steps.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .config import DEFAULT

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITERATIONS = "max-iterations"


class SdpError(RuntimeError):
    """Raised when a caller requires an optimal solution and the solver did not reach one."""

    def __init__(self, status: str, message: str = ""):
        super().__init__(f"SDP solver status {status!r}" + (f": {message}" if message else ""))
        self.status = status


@dataclass(frozen=True)
class Block:
    kind: str  # "s" (PSD matrix) or "l" (nonnegative orthant)
    size: int
    complex: bool = False

    def __post_init__(self):
        if self.kind not in ("s", "l"):
            raise ValueError(f"unknown block kind {self.kind!r}")
        if self.size < 1:
            raise ValueError("block size must be positive")
        if self.kind == "l" and self.complex:
            raise ValueError("orthant blocks are real")


@dataclass
class SdpProblem:
    """Block SDP in standard primal form.

    ``C[j]`` is the objective block ``j`` (an ``n x n`` matrix for ``"s"``
    blocks, a length-``n`` vector for ``"l"`` blocks). ``A[j]`` stacks the
    constraint coefficients of block ``j`` with a leading constraint axis, so
    ``A[j][i]`` is the coefficient of constraint ``i``.
    """

    blocks: List[Block]
    C: List[np.ndarray]
    A: List[np.ndarray]
    b: np.ndarray
    sense: str = "min"

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float).ravel()
        m = self.b.size
        if len(self.C) != len(self.blocks) or len(self.A) != len(self.blocks):
            raise ValueError("C and A must have one entry per block")
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        C, A = [], []
        for blk, Cj, Aj in zip(self.blocks, self.C, self.A):
            dtype = complex if blk.complex else float
            if blk.kind == "s":
                shape = (blk.size, blk.size)
                Cj = np.zeros(shape, dtype) if Cj is None else np.asarray(Cj, dtype=dtype)
                Aj = np.zeros((m,) + shape, dtype) if Aj is None else np.asarray(Aj, dtype=dtype)
                if Cj.shape != shape or Aj.shape != (m,) + shape:
                    raise ValueError(f"block data shape mismatch for {blk}")
                if np.max(np.abs(Cj - Cj.conj().T), initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(Cj), initial=0.0)):
                    raise ValueError("objective block is not Hermitian")
                if m and np.max(np.abs(Aj - Aj.conj().transpose(0, 2, 1)), initial=0.0) > 1e-9 * max(
                    1.0, np.max(np.abs(Aj), initial=0.0)
                ):
                    raise ValueError("constraint coefficient block is not Hermitian")
                Cj = 0.5 * (Cj + Cj.conj().T)
                Aj = 0.5 * (Aj + Aj.conj().transpose(0, 2, 1))
            else:
                Cj = np.zeros(blk.size) if Cj is None else np.asarray(Cj, dtype=float).ravel()
                Aj = np.zeros((m, blk.size)) if Aj is None else np.asarray(Aj, dtype=float).reshape(m, blk.size)
                if Cj.shape != (blk.size,):
                    raise ValueError(f"block data shape mismatch for {blk}")
            C.append(Cj)
            A.append(Aj)
        self.C, self.A = C, A

    @property
    def num_constraints(self) -> int:
        return self.b.size

    @classmethod
    def from_constraints(cls, blocks, C, constraints, sense="min") -> "SdpProblem":
        """Build from a list of ``(coefficients_per_block, rhs)`` pairs; ``None`` means a zero block."""
        m = len(constraints)
        A = []
        for j, blk in enumerate(blocks):
            dtype = complex if blk.complex else float
            shape = (blk.size, blk.size) if blk.kind == "s" else (blk.size,)
            Aj = np.zeros((m,) + shape, dtype=dtype)
            for i, (coeffs, _) in enumerate(constraints):
                if coeffs[j] is not None:
                    Aj[i] = coeffs[j]
            A.append(Aj)
        b = np.array([rhs for _, rhs in constraints], dtype=float)
        return cls(list(blocks), list(C), A, b, sense)

    def to_dict(self) -> Dict:
        return {
            "blocks": [{"kind": b.kind, "size": b.size, "complex": b.complex} for b in self.blocks],
            "C": [_encode(c) for c in self.C],
            "A": [_encode(a) for a in self.A],
            "b": self.b.tolist(),
            "sense": self.sense,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "SdpProblem":
        blocks = [Block(d["kind"], int(d["size"]), bool(d.get("complex", False))) for d in data["blocks"]]
        return cls(blocks, [_decode(c) for c in data["C"]], [_decode(a) for a in data["A"]], data["b"], data["sense"])


@dataclass
class SdpSolution:
    status: str
    primal: List[np.ndarray]
    dual: np.ndarray
    slack: List[np.ndarray]
    primal_value: float
    dual_value: float
    iterations: int
    info: Dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return abs(self.primal_value - self.dual_value)

    def require_optimal(self) -> "SdpSolution":
        if self.status != OPTIMAL:
            raise SdpError(self.status, str(self.info.get("message", "")))
        return self

    def to_dict(self) -> Dict:
        return {
            "status": self.status,
            "primal": [_encode(x) for x in self.primal],
            "dual": self.dual.tolist(),
            "primal_value": self.primal_value,
            "dual_value": self.dual_value,
            "iterations": self.iterations,
            "info": {k: v for k, v in self.info.items() if isinstance(v, (int, float, str, bool))},
        }


def _encode(a: np.ndarray):
    a = np.asarray(a)
    return {"re": np.real(a).tolist(), "im": np.imag(a).tolist(), "shape": list(a.shape)}


def _decode(d) -> np.ndarray:
    re = np.asarray(d["re"], dtype=float).reshape(d["shape"])
    im = np.asarray(d["im"], dtype=float).reshape(d["shape"])
    return re + 1j * im if np.any(im) else re


# -- real embedding ---------------------------------------------------------


def _embed(M: np.ndarray) -> np.ndarray:
    """Hermitian -> real symmetric of double size, scaled so <embed(C), embed(X)>/2 = tr(CX)."""
    re, im = np.real(M), np.imag(M)
    top = np.concatenate([re, -im], axis=-1)
    bot = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def _compress(Xr: np.ndarray, n: int) -> np.ndarray:
    P, Q, R, T = Xr[:n, :n], Xr[:n, n:], Xr[n:, :n], Xr[n:, n:]
    X = 0.5 * (P + T) + 0.5j * (R - Q)
    return 0.5 * (X + X.conj().T)


class _RealForm:
    """The problem with Hermitian blocks embedded as real symmetric ones."""

    def __init__(self, p: SdpProblem):
        self.p = p
        sign = 1.0 if p.sense == "min" else -1.0
        self.kinds, self.sizes, self.C, self.A = [], [], [], []
        for blk, Cj, Aj in zip(p.blocks, p.C, p.A):
            if blk.kind == "s" and blk.complex:
                Cr, Ar = 0.5 * _embed(Cj), 0.5 * _embed(Aj)
                n = 2 * blk.size
            elif blk.kind == "s":
                Cr, Ar, n = np.real(Cj), np.real(Aj), blk.size
            else:
                Cr, Ar, n = Cj, Aj, blk.size
            self.kinds.append(blk.kind)
            self.sizes.append(n)
            self.C.append(sign * np.asarray(Cr, dtype=float))
            self.A.append(np.asarray(Ar, dtype=float))
        self.b = p.b.copy()
        self.m = self.b.size
        self.nu = sum(self.sizes)
        self.Aflat = [Aj.reshape(self.m, -1) for Aj in self.A]

    def op(self, X: Sequence[np.ndarray]) -> np.ndarray:
        out = np.zeros(self.m)
        for Af, Xj in zip(self.Aflat, X):
            out += Af @ Xj.ravel()
        return out

    def adj(self, y: np.ndarray) -> List[np.ndarray]:
        out = []
        for k, Aj in zip(self.kinds, self.A):
            out.append(np.tensordot(y, Aj, axes=1))
        return out

    def complex_weight(self, j: int) -> float:
        blk = self.p.blocks[j]
        return 0.5 if blk.kind == "s" and blk.complex else 1.0


def _inner(X: Sequence[np.ndarray], S: Sequence[np.ndarray]) -> float:
    return float(sum(np.vdot(x.ravel(), s.ravel()).real for x, s in zip(X, S)))


def _max_step(kind: str, X: np.ndarray, dX: np.ndarray, L=None) -> float:
    if kind == "l":
        neg = dX < 0
        if not np.any(neg):
            return np.inf
        return float(np.min(-X[neg] / dX[neg]))
    if L is None:
        L = np.linalg.cholesky(X)
    Li = sla.solve_triangular(L, np.eye(L.shape[0]), lower=True)
    G = Li @ dX @ Li.T
    lam = np.linalg.eigvalsh(0.5 * (G + G.T))[0]
    return np.inf if lam >= 0 else float(-1.0 / lam)


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def solve(
    p: SdpProblem,
    tol: float = DEFAULT.sdp_gap,
    feas_tol: Optional[float] = None,
    max_iter: int = DEFAULT.sdp_max_iter,
) -> SdpSolution:
    """Solve ``p``; see module docstring for the problem form.

    On status ``optimal`` the relative gap ``|primal - dual| / (1 + |primal|)``
    and the scaled residuals are below ``tol``. Infeasibility and unboundedness
    are detected heuristically (diverging iterates); ``info["heuristic"]`` is
    set whenever such a status is reported.
    """
    feas_tol = tol if feas_tol is None else feas_tol
    rf = _RealForm(p)
    m = rf.m
    nb = len(rf.kinds)

    normb = np.linalg.norm(rf.b)
    normC = max(np.linalg.norm(c) for c in rf.C)
    normA = [np.linalg.norm(Af, axis=1) if m else np.zeros(0) for Af in rf.Aflat]

    # SDPT3-style starting point
    X, S = [], []
    for j, (k, n) in enumerate(zip(rf.kinds, rf.sizes)):
        nA = normA[j]
        xi = max(10.0, np.sqrt(n), *(n * (1 + np.abs(rf.b)) / (1 + nA))) if m else max(10.0, np.sqrt(n))
        eta = max(10.0, np.sqrt(n), np.linalg.norm(rf.C[j]), *(nA if m else [0.0]))
        X.append(xi * (np.eye(n) if k == "s" else np.ones(n)))
        S.append(eta * (np.eye(n) if k == "s" else np.ones(n)))
    y = np.zeros(m)

    status = MAX_ITERATIONS
    best = None
    info: Dict = {}
    it = 0
    for it in range(1, max_iter + 1):
        AtY = rf.adj(y)
        rp = rf.b - rf.op(X)
        Rd = [rf.C[j] - S[j] - AtY[j] for j in range(nb)]
        pobj = _inner(rf.C, X)
        dobj = float(rf.b @ y)
        mu = _inner(X, S) / rf.nu
        pinf = np.linalg.norm(rp) / (1.0 + normb)
        dinf = np.sqrt(sum(np.linalg.norm(r) ** 2 for r in Rd)) / (1.0 + normC)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj))
        score = max(pinf, dinf, gap)
        if best is None or score < best[0]:
            best = (score, [x.copy() for x in X], y.copy(), [s.copy() for s in S], it)
        if pinf <= feas_tol and dinf <= feas_tol and gap <= tol:
            status = OPTIMAL
            break

        # divergence heuristics
        xnorm = max(np.max(np.abs(x)) for x in X)
        ynorm = np.max(np.abs(y)) if m else 0.0
        if ynorm > 1e8 and dobj > 1e8 and dinf < 1e-6:
            status = INFEASIBLE
            info["heuristic"] = True
            info["message"] = "dual objective diverges; primal presumed infeasible"
            break
        if xnorm > 1e8 and pobj < -1e8 and pinf < 1e-6:
            status = UNBOUNDED
            info["heuristic"] = True
            info["message"] = "primal objective diverges; problem presumed unbounded"
            break

        Sinv, Lx, Ls = [], [], []
        try:
            for k, Xj, Sj in zip(rf.kinds, X, S):
                if k == "s":
                    Ls_j = np.linalg.cholesky(Sj)
                    Li = sla.solve_triangular(Ls_j, np.eye(Sj.shape[0]), lower=True)
                    Sinv.append(Li.T @ Li)
                    Lx.append(np.linalg.cholesky(Xj))
                    Ls.append(Ls_j)
                else:
                    Sinv.append(1.0 / Sj)
                    Lx.append(None)
                    Ls.append(None)
        except np.linalg.LinAlgError:
            info["message"] = "lost positive definiteness"
            break

        # Schur complement M_ij = <A_i, X A_j S^-1>
        M = np.zeros((m, m))
        for j, k in enumerate(rf.kinds):
            if k == "s":
                G = X[j] @ rf.A[j] @ Sinv[j]
                M += rf.Aflat[j] @ G.transpose(0, 2, 1).reshape(m, -1).T
            else:
                M += (rf.A[j] * (X[j] * Sinv[j])) @ rf.A[j].T
        M = 0.5 * (M + M.T)
        solve_M = _factor(M)

        def direction(sigma_mu, corr):
            H = []
            for j, k in enumerate(rf.kinds):
                if k == "s":
                    Hj = sigma_mu * Sinv[j] - X[j]
                    if corr is not None:
                        Hj = Hj - _sym(corr[0][j] @ corr[1][j] @ Sinv[j])
                else:
                    Hj = sigma_mu * Sinv[j] - X[j]
                    if corr is not None:
                        Hj = Hj - corr[0][j] * corr[1][j] * Sinv[j]
                H.append(Hj)
            XRS = []
            for j, k in enumerate(rf.kinds):
                XRS.append(X[j] @ Rd[j] @ Sinv[j] if k == "s" else X[j] * Rd[j] * Sinv[j])
            rhs = rp - rf.op(H) + rf.op(XRS)
            dy = solve_M(rhs)
            AtDy = rf.adj(dy)
            dS = [Rd[j] - AtDy[j] for j in range(nb)]
            dX = []
            for j, k in enumerate(rf.kinds):
                if k == "s":
                    dX.append(H[j] - _sym(X[j] @ dS[j] @ Sinv[j]))
                else:
                    dX.append(H[j] - X[j] * dS[j] * Sinv[j])
            return dX, dy, dS

        def steps(dX, dS):
            ap = min(_max_step(k, X[j], dX[j], Lx[j]) for j, k in enumerate(rf.kinds))
            ad = min(_max_step(k, S[j], dS[j], Ls[j]) for j, k in enumerate(rf.kinds))
            return ap, ad

        dXa, dya, dSa = direction(0.0, None)
        ap, ad = steps(dXa, dSa)
        ap, ad = min(1.0, ap), min(1.0, ad)
        mu_aff = _inner([X[j] + ap * dXa[j] for j in range(nb)], [S[j] + ad * dSa[j] for j in range(nb)]) / rf.nu
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0

        dX, dy, dS = direction(sigma * mu, (dXa, dSa))
        ap, ad = steps(dX, dS)
        gamma = 0.9 + 0.09 * min(ap, ad, 1.0)
        ap, ad = min(1.0, gamma * ap), min(1.0, gamma * ad)

        X = [X[j] + ap * dX[j] for j in range(nb)]
        y = y + ad * dy
        S = [S[j] + ad * dS[j] for j in range(nb)]
        X = [_sym(x) if k == "s" else x for x, k in zip(X, rf.kinds)]
        S = [_sym(s) if k == "s" else s for s, k in zip(S, rf.kinds)]
        if max(ap, ad) < 1e-12:
            info["message"] = "step length collapsed"
            break
    else:
        it = max_iter

    if status != OPTIMAL and best is not None:
        _, X, y, S, _ = best
    return _finish(p, rf, X, y, S, status, it, info)


def _factor(M: np.ndarray):
    m = M.shape[0]
    if m == 0:
        return lambda r: np.zeros(0)
    scale = max(1.0, float(np.max(np.abs(np.diag(M)))))
    try:
        cf = sla.cho_factor(M + 1e-15 * scale * np.eye(m), lower=True, check_finite=False)
        return lambda r: sla.cho_solve(cf, r, check_finite=False)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(M)
        cut = 1e-13 * max(1.0, float(np.max(np.abs(w))))
        winv = np.where(w > cut, 1.0 / np.where(w > cut, w, 1.0), 0.0)
        return lambda r: V @ (winv * (V.T @ r))


def _finish(p, rf, X, y, S, status, it, info) -> SdpSolution:
    primal, slack = [], []
    for blk, Xj, Sj in zip(p.blocks, X, S):
        if blk.kind == "s" and blk.complex:
            primal.append(_compress(Xj, blk.size))
            slack.append(2.0 * _compress(Sj, blk.size))
        else:
            primal.append(Xj.copy())
            slack.append(Sj.copy())
    sign = 1.0 if p.sense == "min" else -1.0
    pval = float(sum(_block_inner(blk, Cj, Xj) for blk, Cj, Xj in zip(p.blocks, p.C, primal)))
    dual = sign * y
    dval = float(p.b @ dual)
    if p.sense == "max":
        slack = [-s for s in slack]
    pres = np.linalg.norm(p.b - np.array(
        [sum(_block_inner(blk, Aj[i], Xj) for blk, Aj, Xj in zip(p.blocks, p.A, primal)) for i in range(p.b.size)]
    )) if p.b.size else 0.0
    info = dict(info)
    info["primal_residual"] = float(pres)
    return SdpSolution(status, primal, dual, slack, pval, dval, it, info)


def _block_inner(blk: Block, Cj: np.ndarray, Xj: np.ndarray) -> float:
    if blk.kind == "s":
        return float(np.real(np.sum(Cj.conj() * Xj)))
    return float(Cj @ Xj)


def guessing_probability_sdp(states, tol: float = DEFAULT.sdp_gap):
    """Optimal guessing probability for subnormalized states ``p_i rho_i``.

    Returns ``(value, povm)`` where ``povm`` maximizes ``sum_i tr(M_i rho_i)``
    subject to ``M_i >= 0`` and ``sum_i M_i = 1``.
    """
    mats = [np.asarray(s, dtype=complex) for s in states]
    if not mats:
        raise ValueError("need at least one state")
    n = mats[0].shape[0]
    if any(r.shape != (n, n) for r in mats):
        raise ValueError("states must share a common dimension")
    from .linalg import hermitian_basis, min_eig

    for r in mats:
        if min_eig(r) < -1e-9:
            raise ValueError("states must be positive semidefinite")
    N = len(mats)
    basis = hermitian_basis(n)
    eye = np.eye(n)
    blocks = [Block("s", n, True) for _ in range(N)]
    # completeness: <B_a, sum_i M_i> = <B_a, 1> for every Hermitian basis element
    A = [basis.copy() for _ in range(N)]
    b = np.real(np.einsum("kij,ji->k", basis, eye))
    prob = SdpProblem(blocks, mats, A, b, sense="max")
    sol = solve(prob, tol=tol).require_optimal()
    povm = [0.5 * (M + M.conj().T) for M in sol.primal]
    return sol.primal_value, povm
