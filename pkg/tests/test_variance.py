import numpy as np
import pytest

from vortexchain import (
    Ordering,
    asymptotic_variance_kenney,
    asymptotic_variance_series,
    chain_from_parts,
    compare_asymptotic,
    hermitian_inverse_residual,
    hermitian_skew_split,
    reverse_operator,
    validate_chain,
    variance_kernel,
)
from vortexchain.errors import MismatchedStationary, NonErgodic, SingularInput

from conftest import brute_force_sigma2, random_ergodic_chain, random_reversible_chain


class TestHermitianSkewSplit:
    def test_symmetric_input(self):
        x = np.array([[2.0, 1.0], [1.0, 3.0]])
        h, s = hermitian_skew_split(x)
        assert np.array_equal(h, x)
        assert np.array_equal(s, np.zeros((2, 2)))

    def test_skew_input(self):
        x = np.array([[0.0, 1.0], [-1.0, 0.0]])
        h, s = hermitian_skew_split(x)
        assert np.array_equal(h, np.zeros((2, 2)))
        assert np.array_equal(s, x)

    def test_mixed(self):
        h, s = hermitian_skew_split(np.array([[1.0, 2.0], [0.0, 1.0]]))
        assert np.allclose(h, [[1.0, 1.0], [1.0, 1.0]])
        assert np.allclose(s, [[0.0, 1.0], [-1.0, 0.0]])

    def test_reconstruction(self, rng):
        x = rng.normal(size=(6, 6))
        h, s = hermitian_skew_split(x)
        assert np.max(np.abs(h + s - x)) < 1e-15
        assert np.array_equal(h, h.T)
        assert np.array_equal(s, -s.T)


class TestKenney:
    def test_constant_function_zero_variance(self, rng):
        chain = random_ergodic_chain(rng, 5)
        report = asymptotic_variance_kenney(chain, np.full(5, 3.7))
        assert report.sigma2 == pytest.approx(0.0, abs=1e-12)

    def test_iid_chain_gives_vf(self):
        chain = validate_chain([[0.5, 0.5], [0.5, 0.5]])
        report = asymptotic_variance_kenney(chain, [1.0, -1.0])
        assert report.sigma2 == pytest.approx(report.vf, abs=1e-12)
        assert report.vf == pytest.approx(1.0)

    def test_two_state_closed_form(self):
        # lag-tau correlation of a 2-state chain is lambda^tau with
        # lambda = 1 - 0.1 - 0.2, so sigma2 = V[f] (1+lambda)/(1-lambda) = 34/27
        chain = validate_chain([[0.9, 0.1], [0.2, 0.8]])
        report = asymptotic_variance_kenney(chain, [1.0, 0.0])
        assert report.sigma2 == pytest.approx(34 / 27, rel=1e-12)

    def test_matches_brute_force_series(self, rng):
        chain = random_ergodic_chain(rng, 4)
        f = rng.normal(size=4)
        expected = brute_force_sigma2(chain.transition, chain.stationary, f)
        got = asymptotic_variance_kenney(chain, f).sigma2
        assert got == pytest.approx(expected, rel=1e-8, abs=1e-8)

    def test_uniform_three_ring_example(self):
        # odd rings without holding are aperiodic (2- and 3-cycles coexist)
        a = np.zeros((3, 3))
        for s in range(3):
            a[s, (s + 1) % 3] = 0.5
            a[s, (s - 1) % 3] = 0.5
        chain = validate_chain(a)
        assert chain.ergodic
        f = [1.0, 0.0, -1.0]
        oracle = brute_force_sigma2(chain.transition, chain.stationary, f)
        assert asymptotic_variance_kenney(chain, f).sigma2 == pytest.approx(oracle, abs=1e-8)

    def test_nonergodic_needs_override(self):
        cycle = validate_chain(np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]], dtype=float))
        with pytest.raises(NonErgodic):
            asymptotic_variance_kenney(cycle, [1.0, 0.0, -1.0])
        report = asymptotic_variance_kenney(cycle, [1.0, 0.0, -1.0], allow_nonergodic=True)
        assert report.warnings
        assert report.sigma2 == pytest.approx(0.0, abs=1e-12)  # deterministic cycle

    def test_reverse_symmetry(self, rng):
        for size in (3, 6):
            chain = random_ergodic_chain(rng, size)
            rev = chain_from_parts(
                reverse_operator(chain.transition, chain.stationary), chain.stationary
            )
            f = rng.normal(size=size)
            a = asymptotic_variance_kenney(chain, f).sigma2
            b = asymptotic_variance_kenney(rev, f).sigma2
            assert abs(a - b) < 1e-10

    def test_shift_invariance(self, rng):
        chain = random_ergodic_chain(rng, 6)
        f = rng.normal(size=6)
        base = asymptotic_variance_kenney(chain, f).sigma2
        shifted = asymptotic_variance_kenney(chain, f + 17.0).sigma2
        assert abs(base - shifted) < 1e-9

    def test_scale_equivariance(self, rng):
        chain = random_ergodic_chain(rng, 6)
        f = rng.normal(size=6)
        base = asymptotic_variance_kenney(chain, f).sigma2
        scaled = asymptotic_variance_kenney(chain, 3.0 * f).sigma2
        assert scaled == pytest.approx(9.0 * base, rel=1e-9)

    def test_kernel_hermitian_part_positive(self, rng):
        for size in (2, 4, 8):
            chain = random_ergodic_chain(rng, size)
            h, s = hermitian_skew_split(variance_kernel(chain))
            assert np.linalg.eigvalsh(h)[0] > 0.0
            # the kernel's skew part is minus the joint distribution's
            assert np.allclose(s, -hermitian_skew_split(chain.joint)[1], atol=1e-15)


class TestSeries:
    def test_iid_chain(self):
        chain = validate_chain([[0.5, 0.5], [0.5, 0.5]])
        report = asymptotic_variance_series(chain, [2.0, 0.0])
        assert report.sigma2 == pytest.approx(report.vf, abs=1e-10)

    def test_agrees_with_kenney_on_holding_ring(self):
        a = np.zeros((3, 3))
        for s in range(3):
            a[s, (s + 1) % 3] = 0.45
            a[s, (s - 1) % 3] = 0.45
            a[s, s] = 0.1
        chain = validate_chain(a)
        f = [1.0, 0.0, -1.0]
        kv = asymptotic_variance_kenney(chain, f).sigma2
        sv = asymptotic_variance_series(chain, f, tail_tol=1e-12).sigma2
        assert sv == pytest.approx(kv, abs=1e-6)

    def test_reversible_chain_equal_lag_covariances(self, rng):
        # B = A for reversible chains, so both series halves coincide and
        # the total matches the closed form
        chain = random_reversible_chain(rng, 5)
        f = rng.normal(size=5)
        kv = asymptotic_variance_kenney(chain, f).sigma2
        sv = asymptotic_variance_series(chain, f).sigma2
        assert sv == pytest.approx(kv, rel=1e-7, abs=1e-8)

    def test_refuses_periodic(self):
        cycle = validate_chain(np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]], dtype=float))
        with pytest.raises(NonErgodic):
            asymptotic_variance_series(cycle, [1.0, 0.0, -1.0])

    def test_truncation_lag_recorded(self, rng):
        chain = random_ergodic_chain(rng, 4)
        report = asymptotic_variance_series(chain, rng.normal(size=4))
        assert report.truncation_lag is not None
        assert 1 <= report.truncation_lag < 10**6


class TestHermitianInverseResidual:
    def test_spd_reduces_to_identity(self, rng):
        a = rng.normal(size=(4, 4))
        x = a @ a.T + 4.0 * np.eye(4)
        assert hermitian_inverse_residual(x) < 1e-12

    def test_hand_case_two_by_two(self):
        # X = [[1,1],[-1,1]]: [X]_H = I, [X]_S^T [X]_S = I, X^-1 = [[1,-1],[1,1]]/2,
        # so both sides equal 2I
        x = np.array([[1.0, 1.0], [-1.0, 1.0]])
        assert hermitian_inverse_residual(x) < 1e-14
        lhs = np.linalg.inv(hermitian_skew_split(np.linalg.inv(x))[0])
        assert np.allclose(lhs, 2 * np.eye(2))

    def test_random_shifted(self, rng):
        a = rng.normal(size=(4, 4))
        h, s = hermitian_skew_split(a)
        shift = abs(np.linalg.eigvalsh(h)[0]) + 1.0
        x = h + shift * np.eye(4) + s
        assert hermitian_inverse_residual(x) < 1e-10

    def test_singular_rejected(self):
        with pytest.raises(SingularInput):
            hermitian_inverse_residual(np.zeros((3, 3)))


class TestCompareAsymptotic:
    def test_equal_chains(self, rng):
        chain = random_ergodic_chain(rng, 5)
        assert compare_asymptotic(chain, chain).ordering is Ordering.EQUAL

    def test_lazy_chain_is_dominated(self, rng):
        chain = random_reversible_chain(rng, 5)
        lazy = chain_from_parts(
            0.5 * np.eye(5) + 0.5 * chain.transition, chain.stationary
        )
        result = compare_asymptotic(chain, lazy)
        assert result.ordering is Ordering.A_DOMINATES

    def test_mismatched_stationary(self, rng):
        a = random_ergodic_chain(rng, 4)
        b = validate_chain(rng.dirichlet(np.ones(4), size=4))
        with pytest.raises(MismatchedStationary):
            compare_asymptotic(a, b)

    def test_diagnostics_cross_check(self, rng):
        chain = random_reversible_chain(rng, 4)
        lazy = chain_from_parts(0.5 * np.eye(4) + 0.5 * chain.transition, chain.stationary)
        result = compare_asymptotic(chain, lazy, diagnostics=True)
        assert result.condition3_ordering is result.ordering

    def test_vortices_on_different_loops_incomparable(self):
        from vortexchain import Cycle, cycle_vortex, insert_vortex, max_feasible_epsilon

        chain = random_reversible_chain(np.random.default_rng(5), 4)
        arms = []
        for cycle in (Cycle((0, 1, 2)), Cycle((0, 2, 3))):
            d = cycle_vortex(cycle, 1.0, 4)
            eps = 0.6 * max_feasible_epsilon(chain.joint, d)
            arms.append(insert_vortex(chain, eps * d).forward)
        assert compare_asymptotic(arms[0], arms[1]).ordering is Ordering.INCOMPARABLE
        # and the base chain is dominated by either arm, seen from both sides
        assert compare_asymptotic(chain, arms[0]).ordering is Ordering.A_PRIME_DOMINATES
        assert compare_asymptotic(arms[0], chain).ordering is Ordering.A_DOMINATES


class TestVarianceReportSerialization:
    def test_json_schema_keys(self, rng):
        chain = random_ergodic_chain(rng, 3)
        report = asymptotic_variance_series(chain, [1.0, 0.0, -1.0])
        payload = report.to_dict()
        assert set(payload) == {"sigma2", "method", "vf", "truncation_lag", "warnings"}
        assert payload["method"] == "series"
