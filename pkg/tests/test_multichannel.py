import numpy as np
import pytest

from etk.linalg import partial_trace
from etk.multichannel import (
    advantage_ratio,
    bound_S_k,
    build_task,
    covariant_optimal_guess,
    guess_with_bell,
    optimal_guess,
    task_from_witness,
    witness_to_channel,
)
from etk.quantum import (
    BipartiteState,
    bell_povm,
    identity_channel,
    is_channel,
    max_entangled,
    product_state,
    random_channel,
    random_density,
    random_state,
)
from etk.robustness import RobustnessConfig, pad_witness, robustness_bounds
from conftest import phi_plus


def test_witness_to_channel_identity(rng):
    W = np.eye(4) - 2 * phi_plus(2)
    ch, c = witness_to_channel(W, (2, 2))
    assert abs(c - 2) < 1e-12
    assert np.abs(ch.choi - phi_plus(2)).max() < 1e-12
    F = np.eye(4) - W
    for _ in range(20):
        tau = random_density(4, rng)
        lhs = np.trace(F @ tau).real
        rhs = c * np.trace(phi_plus(2) @ ch.partial(tau, 2)).real
        assert abs(lhs - rhs) < 1e-8


@pytest.mark.parametrize("d,k", [(3, 1), (3, 2), (4, 2)])
def test_witness_to_channel_c_is_d_over_k(d, k):
    W = np.eye(d * d) - (d / k) * phi_plus(d)
    ch, c = witness_to_channel(W, (d, d))
    assert abs(c - d / k) < 1e-12
    assert np.abs(ch.choi - phi_plus(d)).max() < 1e-12


def test_witness_to_channel_rejects():
    with pytest.raises(ValueError):
        witness_to_channel(np.eye(4), (2, 2))
    with pytest.raises(ValueError):
        witness_to_channel(2 * np.eye(4), (2, 2))
    with pytest.raises(ValueError):
        witness_to_channel(np.diag([0, 1, 1, 1.0]), (2, 2))


def test_duality_on_padded_witnesses(rng):
    # random feasible witnesses: W = 1 - F with F >= 0, padded, then identity checked
    for _ in range(100):
        dA, dB = 2, 2 + rng.integers(0, 2)
        G = rng.standard_normal((dA * dB, dA * dB)) + 1j * rng.standard_normal((dA * dB, dA * dB))
        F = G @ G.conj().T
        W = np.eye(dA * dB) - F / np.linalg.eigvalsh(F).max()
        padded = pad_witness(W, (dA, dB))
        ch, c = witness_to_channel(padded.operator, padded.dims)
        assert is_channel(ch, 1e-8)
        rho = random_density(dA * dB, rng)
        tau = padded.embed_state(rho)
        Fp = np.eye(tau.shape[0]) - padded.operator
        d = padded.dims[0]
        rhs = c * np.trace(phi_plus(d) @ ch.partial(tau, d)).real
        assert abs(np.trace(Fp @ tau).real - rhs) < 1e-8


def test_build_task_bell_projectors():
    task = build_task(identity_channel(2), 2.0)
    assert len(task.channels) == 4 and abs(task.priors.sum() - 1) < 1e-15
    assert np.abs(task.channels[0].choi - identity_channel(2).choi).max() == 0
    M = bell_povm(2)
    for g, m in zip(task.channels, M):
        assert is_channel(g, 1e-10)
        assert np.abs(g.choi - m).max() < 1e-12


def test_build_task_dim_mismatch(rng):
    with pytest.raises(ValueError):
        build_task(random_channel(2, 3, rng), 1.0, d_A=2)


def test_guess_with_bell_examples():
    task, _ = task_from_witness(np.eye(4) - 2 * phi_plus(2), (2, 2))
    assert abs(guess_with_bell(task, phi_plus(2)) - 1) < 1e-8
    assert abs(guess_with_bell(task, np.eye(4) / 4) - 0.25) < 1e-8
    assert abs(guess_with_bell(task, product_state([1, 0], [1, 0])) - 0.5) < 1e-8


def test_guess_with_bell_equals_witness_chain(rng):
    for d in (2, 3):
        W = np.eye(d * d) - d * phi_plus(d)
        task, padded = task_from_witness(W, (d, d))
        for _ in range(5):
            rho = random_density(d * d, rng)
            p = guess_with_bell(task, padded.embed_state(rho))
            assert abs(p - (1 - np.trace(W @ rho).real) / task.c) < 1e-8


def test_covariant_matches_general_sdp(rng):
    task, _ = task_from_witness(np.eye(4) - 2 * phi_plus(2), (2, 2))
    for _ in range(4):
        rho = random_density(4, rng)
        assert abs(covariant_optimal_guess(task, rho) - optimal_guess(task, rho)) < 1e-6


@pytest.mark.parametrize("d,k,W,expected", [
    (2, 1, np.eye(4) - 2 * phi_plus(2), 0.5),
    (3, 1, np.eye(9) - 3 * phi_plus(3), 1 / 3),
    (4, 2, np.eye(16) - 2 * phi_plus(4), 0.5),
])
def test_bound_S_k(d, k, W, expected):
    task, _ = task_from_witness(W, (d, d))
    rep = bound_S_k(task, k, samples=200 if d == 2 else 40, seed=1)
    assert abs(rep.ceiling - expected) < 1e-9
    assert rep.holds and rep.empirical <= expected + 1e-7


def test_ratio_phi2():
    rep = advantage_ratio(max_entangled(2), 1)
    assert abs(rep.ratio - 2) < 1e-5 and rep.consistent


def test_ratio_phi4_k2():
    rep = advantage_ratio(max_entangled(4), 2)
    assert abs(rep.ratio - 2) < 1e-5 and rep.consistent


def test_ratio_separable():
    rho = BipartiteState(product_state([0.6, 0.8], [1, 0, 0]), (2, 3))
    rep = advantage_ratio(rho, 1)
    assert rep.ratio <= 1 + 1e-6 and rep.consistent


def test_ratio_certificate_k_mismatch():
    cert = robustness_bounds(max_entangled(2), 1)
    with pytest.raises(ValueError):
        advantage_ratio(max_entangled(2), 2, certificate=cert)


def test_sandwich_and_converse(rng):
    cfg = RobustnessConfig(max_rounds=6)
    for i in range(3):
        rho = random_state((3, 3), rng)
        for k in (1, 2):
            cert = robustness_bounds(rho, k, cfg)
            rep = advantage_ratio(rho, k, certificate=cert)
            assert cert.lower - 1e-6 <= rep.ratio - 1 <= cert.upper + 1e-6
            if i == 0:
                _, padded = task_from_witness(cert.witness.operator, rho.dims)
                best = covariant_optimal_guess(rep.task, padded.embed_state(rho.operator))
                assert best <= (1 + cert.upper) / rep.c + 1e-6
