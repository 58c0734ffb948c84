import json

import numpy as np
import pytest

from etk.discrimination import helstrom
from etk.linalg import trace_norm
from etk.quantum import random_density
from etk.sdp import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    Block,
    SdpError,
    SdpProblem,
    SdpSolution,
    guessing_probability_sdp,
    solve,
)
from conftest import phi_plus


def test_min_trace_with_fixed_entry():
    p = SdpProblem.from_constraints([Block("s", 2)], [np.eye(2)], [([np.diag([1.0, 0.0])], 1.0)])
    sol = solve(p)
    assert sol.status == OPTIMAL
    assert abs(sol.primal_value - 1) < 1e-7
    assert np.linalg.eigvalsh(sol.primal[0]).min() > -1e-8


def test_trace_norm_sdp_matches_eigenvalues():
    # ||A||_1 = min tr(P + N) s.t. P - N = A, P, N >= 0
    A = np.diag([1.0, -1.0])
    basis = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), np.array([[0, 1.0], [1.0, 0]])]
    cons = [([B, -B], float(np.trace(B @ A))) for B in basis]
    p = SdpProblem.from_constraints([Block("s", 2), Block("s", 2)], [np.eye(2), np.eye(2)], cons)
    sol = solve(p)
    assert abs(sol.primal_value - trace_norm(A)) < 1e-7


def test_min_eigenvalue_as_dual():
    # max lambda s.t. A - lambda 1 >= 0  is the dual of  min <A, X>, tr X = 1
    A = np.diag([3.0, 5.0])
    sol = solve(SdpProblem.from_constraints([Block("s", 2)], [A], [([np.eye(2)], 1.0)]))
    assert abs(sol.dual_value - 3) < 1e-7
    assert abs(sol.primal_value - 3) < 1e-7


def test_complex_block():
    # min <C, X> with complex off-diagonal, tr X = 1 -> lowest eigenvalue of C
    C = np.array([[1.0, 1j], [-1j, 1.0]])
    sol = solve(SdpProblem.from_constraints([Block("s", 2, True)], [C], [([np.eye(2)], 1.0)]))
    assert abs(sol.primal_value - 0.0) < 1e-7


def test_lp_block():
    # min x1 + 2 x2 s.t. x1 + x2 = 1
    p = SdpProblem([Block("l", 2)], [np.array([1.0, 2.0])], [np.array([[1.0, 1.0]])], [1.0])
    sol = solve(p)
    assert abs(sol.primal_value - 1) < 1e-7


def test_optimal_postconditions(rng):
    n = 3
    G = rng.standard_normal((n, n))
    C = G + G.T
    sol = solve(SdpProblem.from_constraints([Block("s", n)], [C], [([np.eye(n)], 1.0)]), tol=1e-8)
    assert sol.status == OPTIMAL
    assert abs(sol.primal_value - sol.dual_value) <= 1e-8 * (1 + abs(sol.primal_value))
    assert abs(np.trace(sol.primal[0]) - 1) <= 1e-8
    assert np.linalg.eigvalsh(sol.primal[0]).min() >= -1e-8
    # weak duality in the minimization sense
    assert sol.dual_value <= sol.primal_value + 1e-8


def test_infeasible_detected():
    # X >= 0 with X_11 = -1
    p = SdpProblem.from_constraints([Block("s", 2)], [np.eye(2)], [([np.diag([1.0, 0.0])], -1.0)])
    sol = solve(p)
    assert sol.status == INFEASIBLE
    assert sol.info.get("heuristic") is True
    with pytest.raises(SdpError):
        sol.require_optimal()


def test_unbounded_detected():
    # min -x11 - x22 s.t. x12 = 0 has no lower bound
    p = SdpProblem.from_constraints([Block("s", 2)], [-np.eye(2)], [([np.array([[0, 0.5], [0.5, 0]])], 0.0)])
    sol = solve(p)
    assert sol.status == UNBOUNDED


def test_problem_json_round_trip():
    p = SdpProblem.from_constraints([Block("s", 2, True), Block("l", 1)], [np.eye(2), np.ones(1)],
                                    [([np.eye(2), np.ones(1)], 1.0)], sense="max")
    q = SdpProblem.from_dict(json.loads(json.dumps(p.to_dict())))
    assert q.sense == "max" and q.blocks == p.blocks
    assert all(np.array_equal(a, b) for a, b in zip(p.A, q.A))
    s = solve(SdpProblem.from_constraints([Block("s", 2)], [np.eye(2)], [([np.eye(2)], 1.0)]))
    assert json.loads(json.dumps(s.to_dict()))["status"] == OPTIMAL


def test_guessing_orthogonal():
    v, _ = guessing_probability_sdp([np.diag([0.5, 0]), np.diag([0, 0.5])])
    assert abs(v - 1) < 1e-7


def test_guessing_zero_plus():
    plus = np.full((2, 2), 0.5)
    v, povm = guessing_probability_sdp([0.5 * np.diag([1.0, 0]), 0.5 * plus])
    assert abs(v - 0.5 * (1 + 1 / np.sqrt(2))) < 1e-7
    assert np.abs(sum(povm) - np.eye(2)).max() < 1e-7


def test_guessing_bell_states():
    X = np.array([[0, 1], [1, 0]])
    Z = np.diag([1, -1])
    states = []
    for U in (np.eye(2), Z, X, X @ Z):
        V = np.kron(np.eye(2), U)
        states.append(0.25 * V @ phi_plus(2) @ V.conj().T)
    v, _ = guessing_probability_sdp(states)
    assert abs(v - 1) < 1e-7


def test_guessing_matches_helstrom(rng):
    for i in range(50):
        n = 2 + i % 2
        p = rng.uniform(0.2, 0.8)
        r1 = p * random_density(n, rng)
        r2 = (1 - p) * random_density(n, rng)
        v, _ = guessing_probability_sdp([r1, r2])
        assert abs(v - helstrom(r1, r2)) < 1e-7


def test_unitary_invariance(rng):
    from etk.quantum import random_isometry

    states = [0.3 * random_density(3, rng), 0.3 * random_density(3, rng), 0.4 * random_density(3, rng)]
    U = random_isometry(3, 3, rng)
    v1, _ = guessing_probability_sdp(states)
    v2, _ = guessing_probability_sdp([U @ s @ U.conj().T for s in states])
    assert abs(v1 - v2) < 1e-7
