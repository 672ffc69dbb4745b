"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``.  All statistical checks
use pinned seeds.  Criterion 10c is marked xfail: the requested sign-change
count is above the structural ceiling of these chains (see the test body).
"""

import json
import time

import numpy as np
import pytest

from vortexchain import (
    Ordering,
    RingSpec,
    asymptotic_variance_kenney,
    asymptotic_variance_series,
    build_uniform_ring,
    chain_from_parts,
    compare_asymptotic,
    cycle_vortex,
    find_loop,
    hermitian_inverse_residual,
    hermitian_skew_split,
    insert_vortex,
    lp_max_feasible_entry,
    max_feasible_epsilon,
    mean_hitting_time_exact,
    run_correlation_experiment,
    run_ring_experiment,
    strict_improvement_witness,
    vortex_basis,
)
from vortexchain import fileio

from conftest import path_chain, random_ergodic_chain, random_reversible_chain

SEED_CRIT_1 = 101
SEED_CRIT_2 = 202
SEED_CRIT_3 = 30300
SEED_CRIT_8 = 88
SEED_CRIT_9 = 99
SEED_CRIT_10 = 0

HITTING_WINDOW = (0.7 * 128.0, 1.3 * 128.0)


def note(criterion: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")


@pytest.fixture(scope="module")
def vortex_cases():
    """100 pinned (reversible loop chain, half-strength flow, f) triples."""
    rng = np.random.default_rng(SEED_CRIT_3)
    cases = []
    for _ in range(100):
        size = int(rng.integers(3, 9))
        chain = random_reversible_chain(rng, size)
        cycle = find_loop(chain)
        direction = cycle_vortex(cycle, 1.0, size)
        eps = 0.5 * max_feasible_epsilon(chain.joint, direction)
        flow = eps * direction
        pair = insert_vortex(chain, flow, epsilon_used=eps)
        f = rng.normal(size=size)
        cases.append((chain, pair, flow, f))
    return cases


def _ring64_payload():
    spec = RingSpec(64, 0.5, vortex_epsilon_prob=0.25)
    report = run_ring_experiment(
        spec,
        seed=SEED_CRIT_8,
        hitting_replicas=2000,
        variance_replicas=8,
        variance_lengths=(10**3, 10**4),
    )
    return report.to_dict()


def _ring16_payload():
    spec = RingSpec(16, 0.5)
    report = run_ring_experiment(
        spec,
        seed=SEED_CRIT_9,
        hitting_replicas=50,
        variance_replicas=64,
        variance_lengths=(10**3, 10**4, 10**5),
    )
    return report.to_dict()


def _correlation_outputs():
    result = run_correlation_experiment(
        size=128, kappa=1.0, length=1000, lags=600, seed=SEED_CRIT_10
    )
    return result, fileio.correlation_csv(result), fileio.dumps(result.report.to_dict())


@pytest.fixture(scope="module")
def artifacts():
    """The criterion 8-10 outputs, serialized once; criterion 11 re-runs them."""
    result, csv_text, report_text = _correlation_outputs()
    return {
        "ring64": fileio.dumps(_ring64_payload()),
        "ring16": fileio.dumps(_ring16_payload()),
        "correlation": result,
        "correlation_csv": csv_text,
        "correlation_report": report_text,
    }


def test_criterion_1_oracle_equivalence():
    rng = np.random.default_rng(SEED_CRIT_1)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        size = int(rng.integers(3, 9))
        chain = random_ergodic_chain(rng, size)
        f = rng.normal(size=size)
        kv = asymptotic_variance_kenney(chain, f).sigma2
        sv = asymptotic_variance_series(chain, f, tail_tol=1e-10).sigma2
        worst = max(worst, abs(kv - sv) / max(1.0, kv))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-6 and elapsed < 10.0
    note("1", ok, f"kenney vs series on 50 random chains, worst rel dev {worst:.2e}, {elapsed:.2f}s")
    assert worst < 1e-6
    assert elapsed < 10.0


def test_criterion_2_split_inverse_identity():
    rng = np.random.default_rng(SEED_CRIT_2)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        size = int(rng.integers(2, 9))
        raw = rng.normal(size=(size, size))
        h, s = hermitian_skew_split(raw)
        shift = abs(float(np.linalg.eigvalsh(h)[0])) + 1.0
        worst = max(worst, hermitian_inverse_residual(h + shift * np.eye(size) + s))
    # exact 2x2 case: both sides are 2I
    hand = np.array([[1.0, 1.0], [-1.0, 1.0]])
    lhs = np.linalg.inv(hermitian_skew_split(np.linalg.inv(hand))[0])
    hand_dev = float(np.max(np.abs(lhs - 2.0 * np.eye(2))))
    worst_hand = hermitian_inverse_residual(hand)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-10 and hand_dev < 1e-14 and worst_hand < 1e-14 and elapsed < 1.0
    note("2", ok, f"identity residual on 100 matrices, worst {worst:.2e}; 2x2 hand case dev {hand_dev:.1e}; {elapsed:.2f}s")
    assert worst < 1e-10
    assert hand_dev < 1e-14
    assert elapsed < 1.0


def test_criterion_3_vortex_never_hurts(vortex_cases):
    start = time.perf_counter()
    worst = -np.inf
    orderings_ok = True
    for chain, pair, _, f in vortex_cases:
        st = asymptotic_variance_kenney(chain, f).sigma2
        sa = asymptotic_variance_kenney(pair.forward, f).sigma2
        worst = max(worst, sa - st)
        if compare_asymptotic(pair.forward, chain).ordering is not Ordering.A_DOMINATES:
            orderings_ok = False
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and orderings_ok and elapsed < 30.0
    note("3", ok, f"100 vortex insertions, worst sigma2 increase {worst:.2e}, all dominate: {orderings_ok}, {elapsed:.2f}s")
    assert worst <= 1e-10
    assert orderings_ok
    assert elapsed < 30.0


def test_criterion_4_strict_witness(vortex_cases):
    min_gap = np.inf
    for chain, pair, flow, _ in vortex_cases:
        witness = strict_improvement_witness(chain, flow)
        before = asymptotic_variance_kenney(chain, witness).sigma2
        after = asymptotic_variance_kenney(pair.forward, witness).sigma2
        min_gap = min(min_gap, before - after)
    ok = min_gap > 1e-12
    note("4", ok, f"strict improvement witness on all 100 cases, smallest gap {min_gap:.2e}")
    assert min_gap > 1e-12


def test_criterion_5_epsilon_monotonicity():
    chain = build_uniform_ring(16, 0.5)
    f = np.cos(2.0 * np.pi * np.arange(16) / 16)
    from vortexchain.experiments import epsilon_grid, ring_flow

    direction = ring_flow(16, 1.0)
    eps_max = max_feasible_epsilon(chain.joint, direction)
    grid = epsilon_grid(eps_max)
    values = []
    for eps in grid:
        target = chain if eps == 0.0 else insert_vortex(chain, ring_flow(16, eps)).forward
        values.append(asymptotic_variance_kenney(target, f, allow_nonergodic=True).sigma2)
    steps = np.diff(values)
    worst_step = float(steps.max())
    ok = worst_step <= 1e-12
    note("5", ok, f"sigma2 over {len(grid)}-point grid: {values[0]:.4f} down to {values[-1]:.2e}, worst step {worst_step:.2e}")
    assert worst_step <= 1e-12


def test_criterion_6_basis_dimension():
    expected = {3: 1, 4: 3, 5: 6, 6: 10, 7: 15, 8: 21, 9: 28, 10: 36}
    ranks = {size: vortex_basis(size).rank() for size in range(3, 11)}
    ok = ranks == expected
    note("6", ok, f"basis ranks {list(ranks.values())} == {list(expected.values())}")
    assert ranks == expected


def test_criterion_7_tree_impossibility():
    lp_ok = True
    loop_ok = True
    for size in (4, 5, 6):
        chain = path_chain(size)
        assert find_loop(chain) is None
        if lp_max_feasible_entry(chain.joint) >= 1e-8:
            lp_ok = False
        # close the path into a loop by moving holding mass onto a new edge
        joint = np.array(chain.joint)
        delta = 1.0 / (8.0 * size)
        joint[0, size - 1] += delta
        joint[size - 1, 0] += delta
        joint[0, 0] -= delta
        joint[size - 1, size - 1] -= delta
        pi = joint.sum(axis=1)
        looped = chain_from_parts(joint / pi[:, None], pi)
        cycle = find_loop(looped)
        assert cycle is not None
        if max_feasible_epsilon(looped.joint, cycle_vortex(cycle, 1.0, size)) <= 0.0:
            loop_ok = False
    ok = lp_ok and loop_ok
    note("7", ok, f"paths S=4..6 admit only zero flow (LP), loop-closed variants give eps_max > 0")
    assert lp_ok
    assert loop_ok


def test_criterion_8_ring_hitting_times(artifacts):
    start = time.perf_counter()
    chain = build_uniform_ring(32, 0.5)
    exact = mean_hitting_time_exact(chain, 0, 16)
    payload = json.loads(artifacts["ring64"])
    empirical = payload["hitting"]["vortex_empirical"]["value"]
    lo, hi = HITTING_WINDOW
    elapsed = time.perf_counter() - start
    ok = abs(exact - 256.0) <= 1e-9 and lo <= empirical <= hi
    note(
        "8",
        ok,
        f"S=32 antipode exact {exact:.9f} (=S^2/4); S=64 vortex empirical {empirical:.1f} "
        f"in [{lo:.1f}, {hi:.1f}] (=S/(2*eps) +/- 30%)",
    )
    assert abs(exact - 256.0) <= 1e-9
    assert lo <= empirical <= hi
    assert elapsed < 60.0


def test_criterion_9_deterministic_limit(artifacts):
    payload = json.loads(artifacts["ring16"])
    block = payload["deterministic_limit"]
    slope = block["loglog_slope"]
    ok = slope <= -0.8
    note("9", ok, f"T*Var at eps_max over T={block['lengths']}: {['%.2e' % v for v in block['t_var_empirical']]}, slope {slope:.2f}")
    assert slope <= -0.8


def test_criterion_10a_coverage(artifacts):
    result = artifacts["correlation"]
    ok = result.coverage_vortex >= 0.95 and result.coverage_reversible < 0.6
    note(
        "10a",
        ok,
        f"coverage at T=1000: vortex {result.coverage_vortex:.3f} (>= 0.95), "
        f"reversible {result.coverage_reversible:.3f} (< 0.6)",
    )
    assert result.coverage_vortex >= 0.95
    assert result.coverage_reversible < 0.6


def test_criterion_10b_correlation_mass(artifacts):
    result = artifacts["correlation"]
    sum_rev = float(np.abs(result.corr_reversible).sum())
    sum_vor = float(np.abs(result.corr_vortex).sum())
    ok = sum_vor < sum_rev
    note("10b", ok, f"sum |corr| over 600 lags: vortex {sum_vor:.1f} < reversible {sum_rev:.1f}")
    assert sum_vor < sum_rev


@pytest.mark.xfail(
    strict=True,
    reason=(
        "structurally unattainable: f has spatial period 64 on the 128-ring and the "
        "chain moves at most one state per step, so the correlation cannot change "
        "sign more than ~once per 32 lags (about 6 crossings in 200 lags at the "
        "deterministic limit); observed maximum over all feasible strengths and "
        "seeds is 5-6, and the sign alternation only becomes visible across the "
        "full 600-lag window"
    ),
)
def test_criterion_10c_sign_changes(artifacts):
    result = artifacts["correlation"]
    seg = result.corr_vortex[:200]
    changes = int(np.sum(np.sign(seg[:-1]) != np.sign(seg[1:])))
    note("10c", changes >= 10, f"vortex-curve sign changes within tau <= 200: {changes} (>= 10 required)")
    assert changes >= 10


def test_criterion_11_byte_identical_reruns(artifacts):
    ring64_again = fileio.dumps(_ring64_payload())
    ring16_again = fileio.dumps(_ring16_payload())
    _, csv_again, report_again = _correlation_outputs()
    ok = (
        ring64_again == artifacts["ring64"]
        and ring16_again == artifacts["ring16"]
        and csv_again == artifacts["correlation_csv"]
        and report_again == artifacts["correlation_report"]
    )
    note("11", ok, "criteria 8-10 reruns with identical seeds reproduce byte-identical JSON/CSV")
    assert ring64_again == artifacts["ring64"]
    assert ring16_again == artifacts["ring16"]
    assert csv_again == artifacts["correlation_csv"]
    assert report_again == artifacts["correlation_report"]
