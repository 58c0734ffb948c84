"""Acceptance criteria 1-6, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from etk.discrimination import (
    binary_advantage,
    diamond_norm,
    helstrom,
    isotropic_margin,
    knorm_estimate,
    knorm_hierarchy,
    sampled_sk_trace_norms,
)
from etk.linalg import partial_trace
from etk.multichannel import advantage_ratio, bound_S_k, guess_with_bell, task_from_witness
from etk.quantum import (
    bell_povm,
    choi_of_map,
    map_from_choi,
    max_entangled,
    random_channel,
    random_density,
    random_state,
)
from etk.robustness import RobustnessConfig, pad_witness, robustness_hierarchy
from etk.schmidt import reduction_family
from etk.sdp import guessing_probability_sdp
from conftest import phi_plus

SANDWICH_CONFIG = RobustnessConfig(max_rounds=8)
_cache = {}


def announce(n, ok, detail):
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}", flush=True)
    return ok


def criterion_1():
    worst_width, worst_time, bad = 0.0, 0.0, []
    for d, k in [(2, 1), (3, 1), (3, 2), (4, 1), (4, 2), (4, 3)]:
        t0 = time.perf_counter()
        cert = robustness_hierarchy(max_entangled(d), [k])[k]
        dt = time.perf_counter() - t0
        exact = d / k - 1
        width = cert.upper - cert.lower
        worst_width, worst_time = max(worst_width, width), max(worst_time, dt)
        if not (cert.lower <= exact <= cert.upper and width <= 1e-4 and dt <= 60):
            bad.append((d, k, cert.lower, cert.upper, dt))
    return announce(1, not bad, f"max width {worst_width:.2e}, max time {worst_time:.1f}s {bad or ''}")


def criterion_2():
    L, _ = reduction_family(2, 1.0)
    rep, pair = binary_advantage(max_entangled(2), 1, L.channel)
    sampled = sampled_sk_trace_norms(pair, 1, samples=200, seed=0).max()
    ok = abs(pair.c - 2 / 3) <= 1e-9
    ok &= abs(rep.value_with_rho - 2) <= 1e-7
    ok &= abs(sampled - 4 / 3) <= 1e-7
    err = 0.0
    for d in (2, 3, 4):
        for k in range(1, d):
            Lk, _ = reduction_family(d, 1 / k)
            r, _ = binary_advantage(max_entangled(d), k, Lk.channel)
            err = max(err, abs(r.margin - isotropic_margin(d, k, r.c)))
    ok &= err <= 1e-6
    return announce(2, ok, f"c={pair.c:.12f} norm={rep.value_with_rho:.10f} S1 max={sampled:.10f} margin err={err:.1e}")


def criterion_3():
    task, _ = task_from_witness(np.eye(4) - 2 * phi_plus(2), (2, 2))
    p = guess_with_bell(task, phi_plus(2))
    ceil = bound_S_k(task, 1, samples=200, seed=0)
    rep = advantage_ratio(max_entangled(2), 1)
    ok = abs(p - 1) <= 1e-8
    ok &= abs(ceil.ceiling - 0.5) <= 1e-7 and ceil.empirical <= 0.5 + 1e-7
    ok &= abs(ceil.empirical - 0.5) <= 1e-7
    ok &= abs(rep.ratio - 2) <= 1e-5
    return announce(3, ok, f"p_guess={p:.10f} ceiling={ceil.ceiling:.10f} empirical={ceil.empirical:.10f} ratio={rep.ratio:.8f}")


def sandwich_data():
    if "sandwich" not in _cache:
        t0 = time.perf_counter()
        rows = []
        for seed in range(20):
            rho = random_state((3, 3), np.random.default_rng(seed))
            certs = robustness_hierarchy(rho, [1, 2], SANDWICH_CONFIG)
            for k in (1, 2):
                rep = advantage_ratio(rho, k, certificate=certs[k])
                rows.append((seed, k, certs[k].lower, certs[k].upper, rep.ratio))
        _cache["sandwich"] = (rows, time.perf_counter() - t0)
    return _cache["sandwich"]


def criterion_4():
    rows, elapsed = sandwich_data()
    bad = [r for r in rows if not (r[2] - 1e-5 <= r[4] - 1 <= r[3] + 1e-5)]
    ok = not bad and elapsed <= 300
    widths = [r[3] - r[2] for r in rows]
    return announce(4, ok, f"{len(rows)} runs in {elapsed:.0f}s, max width {max(widths):.2e} {bad or ''}")


def criterion_5():
    rng = np.random.default_rng(5)
    fails = []
    # CJ round trip
    err = 0.0
    for i in range(100):
        ch = random_channel(2 + i % 3, 2 + (i // 3) % 2, rng)
        back = choi_of_map(map_from_choi(ch), ch.d_in, ch.d_out)
        err = max(err, np.abs(back.choi - ch.choi).max())
    if err > 1e-9:
        fails.append(f"CJ {err:.1e}")
    # Bell POVM completeness and orthogonality
    for d in range(2, 6):
        M = bell_povm(d)
        if np.abs(sum(M) - np.eye(d * d)).max() > 1e-12:
            fails.append(f"Bell completeness d={d}")
        G = np.array([[np.trace(a @ b).real for b in M] for a in M])
        if np.abs(G - np.eye(d * d)).max() > 1e-12:
            fails.append(f"Bell orthogonality d={d}")
    # padding lemma
    for i in range(100):
        dA, dB = (2, 2) if i % 2 else (2, 3)
        n = dA * dB
        G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        F = G @ G.conj().T
        W = np.eye(n) - F / np.linalg.eigvalsh(F).max()
        p = pad_witness(W, (dA, dB))
        WB = partial_trace(W, (dA, dB), "A")
        w = np.abs(np.linalg.eigvalsh(WB)).max()
        rho = random_density(n, rng)
        if (
            np.abs(partial_trace(p.operator, p.dims, "A") - w * np.eye(dB)).max() > 1e-12
            or np.linalg.eigvalsh(np.eye(p.operator.shape[0]) - p.operator).min() < -1e-12
            or abs(np.trace(p.operator @ p.embed_state(rho)) - np.trace(W @ rho)) > 1e-12
        ):
            fails.append(f"padding {i}")
    # Helstrom vs SDP
    err = 0.0
    for i in range(50):
        d = 2 + i % 3
        q = rng.uniform(0.1, 0.9)
        r1, r2 = q * random_density(d, rng), (1 - q) * random_density(d, rng)
        err = max(err, abs(helstrom(r1, r2) - guessing_probability_sdp([r1, r2])[0]))
    if err > 1e-7:
        fails.append(f"Helstrom {err:.1e}")
    # diamond vs see-saw
    err = 0.0
    for i in range(20):
        d = 2 + i % 2
        theta = random_channel(d, 2, rng) - random_channel(d, 2, rng)
        err = max(err, abs(diamond_norm(theta) - knorm_estimate(theta, d, restarts=8, seed=i).value))
    if err > 1e-5:
        fails.append(f"diamond {err:.1e}")
    # hierarchy monotonicity: robustness intervals and D_k estimates
    rows, _ = sandwich_data()
    by_seed = {}
    for seed, k, lo, up, _ in rows:
        by_seed.setdefault(seed, {})[k] = (lo, up)
    for seed, iv in by_seed.items():
        if not (iv[2][0] <= iv[1][0] and iv[2][1] <= iv[1][1]):
            fails.append(f"robustness order {seed}")
    for i in range(20):
        theta = random_channel(3, 2, rng) - random_channel(3, 2, rng)
        h = knorm_hierarchy(theta, [1, 2, 3], restarts=4, seed=i)
        if not h[1].value <= h[2].value <= h[3].value:
            fails.append(f"D_k order {i}")
    return announce(5, not fails, "CJ, Bell, padding, Helstrom, diamond, hierarchy " + (str(fails) if fails else "ok"))


def criterion_6():
    err, bad = 0.0, []
    for t in (Fraction(1), Fraction(1, 2), Fraction(1, 3)):
        for d in (2, 3, 4):
            _, rep = reduction_family(d, float(t))
            expected = min(int(1 / t), d)
            if rep.level != expected:
                bad.append((d, str(t), rep.level))
            for m, v in enumerate(rep.min_eigenvalues, start=1):
                err = max(err, abs(v - (1 / m - float(t)) / (d - float(t))))
    ok = not bad and err <= 1e-10
    return announce(6, ok, f"levels {'match' if not bad else bad}, eigenvalue err {err:.1e}")


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_criterion(n, capsys):
    with capsys.disabled():
        print()
        ok = globals()[f"criterion_{n}"]()
    assert ok


if __name__ == "__main__":
    results = [globals()[f"criterion_{n}"]() for n in range(1, 7)]
    sys.exit(0 if all(results) else 1)
