"""
test_testers.py

Unit tests for the collision statistics, the mixedness, closeness and purity
testers, instance-dependent certification and the batched closeness tester.
"""

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from src.errors import InvalidParameter, ShapeError
from src.estimators.sources import FixedSource, UniformPovmSource
from src.harness.verify import bow_variance_table, collision_trials, law_gaps, statistic_law_gaps
from src.qcore.operators import hs_norm, purity
from src.qcore.states import diagonal_state, random_density
from src.testers.bow import (
    BowBatchDistribution,
    bow_batched_test,
    bow_batches,
    joint_outcomes,
    swap_test,
    swap_test_probability,
)
from src.testers.bucketing import bucket_label, bucket_plan, certify, instance_complexity
from src.testers.collision import (
    chebyshev_batches,
    collision_statistic,
    collision_variance,
    hs_statistic_moments,
    purity_estimate,
    purity_statistic_moments,
)
from src.testers.mixedness import (
    closeness_test_tcopy,
    closeness_test_uniform,
    mixedness_batches,
    mixedness_test,
    purity_test,
)

SEEDS = st.integers(min_value=0, max_value=2 ** 32 - 1)

ZERO = np.diag([1.0, 0.0])
ONE = np.diag([0.0, 1.0])


class TestCollisionStatistic:
    """Tests for the pair-averaged collision statistic and its moments."""

    def test_known_values(self):
        """Test the pair average on hand-computed inputs."""
        assert collision_statistic([ZERO, ZERO, ZERO]) == pytest.approx(1.0)
        assert collision_statistic([np.eye(2) / 2, ZERO]) == pytest.approx(0.5)
        assert collision_statistic([ZERO, ONE]) == pytest.approx(0.0)

    def test_needs_two_estimates(self):
        """Test a single estimate is rejected."""
        with pytest.raises(InvalidParameter):
            collision_statistic([ZERO])

    def test_fixed_source_is_exact(self, qutrit_state, rng):
        """Test a fixed source gives the purity exactly with zero variance."""
        source = FixedSource(qutrit_state, copies_per_sample=2)
        report = purity_estimate(source, 5, rng)
        assert report.statistic == pytest.approx(purity(qutrit_state))
        assert report.copies_used == 10
        mean, variance = purity_statistic_moments(source, 5)
        assert mean == pytest.approx(purity(qutrit_state))
        assert variance == pytest.approx(0.0, abs=1e-12)

    def test_variance_matches_simulation(self, qubit_state):
        """Test the U-statistic variance against repeated uniform-POVM runs."""
        rng = np.random.default_rng(5)
        source = UniformPovmSource(qubit_state)
        n = 10
        values = [purity_estimate(source, n, rng).statistic for _ in range(1500)]
        mean, variance = purity_statistic_moments(source, n)
        assert np.mean(values) == pytest.approx(mean, abs=5.0 * np.sqrt(variance / len(values)))
        assert np.var(values, ddof=1) == pytest.approx(variance, rel=0.2)

    def test_uniform_moments(self, qubit_state):
        """Test the mean is tr(((rho + I)/(d + 1))^2) for the uniform source."""
        mean, _ = purity_statistic_moments(UniformPovmSource(qubit_state), 4)
        expected = (qubit_state + np.eye(2)) / 3
        assert mean == pytest.approx(float(np.real(np.trace(expected @ expected))))

    @settings(max_examples=15, deadline=None)
    @given(d=st.integers(min_value=2, max_value=4), n=st.integers(min_value=2, max_value=64), seed=SEEDS)
    def test_uniform_variance_bound(self, d, n, seed):
        """Test Var <= 10 (tr Delta^2 / (n d^4) + 1 / (n^2 d^2)) for the one-copy tester."""
        rng = np.random.default_rng(seed)
        rho, sigma = random_density(d, d, rng), random_density(d, d, rng)
        delta_sq = hs_norm(np.asarray(rho) - np.asarray(sigma)) ** 2
        _, variance = hs_statistic_moments(UniformPovmSource(rho), UniformPovmSource(sigma), n)
        assert variance <= 10.0 * (delta_sq / (n * d ** 4) + 1.0 / (n * n * d * d))

    def test_chebyshev_batches(self, qubit_state):
        """Test the batch count is the smallest meeting the Chebyshev target."""
        source = UniformPovmSource(qubit_state)
        mean, second = source.exact_mean(), source.exact_second_moment()
        n = chebyshev_batches(source, tolerance=0.05, fail_prob=0.2)
        assert collision_variance(mean, second, n) <= 0.2 * 0.05 ** 2
        assert collision_variance(mean, second, n - 1) > 0.2 * 0.05 ** 2

    def test_chebyshev_rejects_bad_arguments(self, qubit_state):
        """Test non-positive tolerance is rejected."""
        with pytest.raises(InvalidParameter):
            chebyshev_batches(UniformPovmSource(qubit_state), tolerance=0.0, fail_prob=0.1)

    def test_grouped_statistics_match_single_runs(self, rng):
        """Test the vectorized group statistic equals collision_statistic on each group."""
        pool = np.stack([np.asarray(random_density(2, 2, rng)) for _ in range(13)])
        grouped = collision_trials(pool, 4)
        assert grouped.shape == (3,)
        for k in range(3):
            assert grouped[k] == pytest.approx(collision_statistic(pool[4 * k:4 * k + 4]))

    def test_law_gaps_on_exact_normal_sample(self):
        """Test a standard normal sample sits within a few standard errors of (0, 1)."""
        values = np.random.default_rng(2).standard_normal(20_000)
        mean_gap, var_gap = law_gaps(values, 0.0, 1.0)
        assert mean_gap < 4.0 and var_gap < 4.0
        assert law_gaps(values + 0.1, 0.0, 1.0)[0] > 10.0

    @pytest.mark.parametrize("t", [1, 2])
    def test_sampled_laws_match_exact_moments(self, t):
        """Test purity and Hilbert-Schmidt statistics against their exact mean and variance."""
        rng = np.random.default_rng(40 + t)
        rho, sigma = random_density(2, 2, rng), random_density(2, 2, rng)
        gaps = statistic_law_gaps(rho, sigma, 2000, rng, n_values=(4, 6), t_values=(t,))
        assert len(gaps) == 8
        assert max(gaps.values()) <= 5.0


class TestMixednessTester:
    """Tests for the t-copy mixedness tester."""

    def test_accepts_maximally_mixed(self, mixed_qubit):
        """Test I/2 is accepted."""
        verdict = mixedness_test(mixed_qubit, 1.0, 2, confidence_reps=3, rng=np.random.default_rng(1), n=400)
        assert verdict.accept
        assert verdict.verdict == "accept"
        assert verdict.threshold == pytest.approx(1.0 / 4.0)
        assert verdict.n_batches == 1200
        assert verdict.copies_used == 2400

    def test_rejects_pure_state(self, pure_qubit):
        """Test a pure qubit (trace distance 1 from I/2) is rejected."""
        verdict = mixedness_test(pure_qubit, 1.0, 2, confidence_reps=3, rng=np.random.default_rng(2), n=400)
        assert not verdict.accept
        assert verdict.details["accept_votes"] <= 1
        assert verdict.statistic == pytest.approx(np.median(verdict.details["centered"]))

    def test_clamps_t_to_d_squared(self, mixed_qubit):
        """Test t above d^2 is reduced and the request is recorded."""
        verdict = mixedness_test(mixed_qubit, 1.0, 5, confidence_reps=1, rng=np.random.default_rng(3), n=2)
        assert verdict.t == 4
        assert verdict.details["t_requested"] == 5

    def test_generator_is_required(self, mixed_qubit):
        """Test the tester needs an explicit generator and is reproducible with one."""
        with pytest.raises(TypeError):
            mixedness_test(mixed_qubit, 1.0, 2, n=4)
        first = mixedness_test(mixed_qubit, 1.0, 2, np.random.default_rng(9), n=20)
        second = mixedness_test(mixed_qubit, 1.0, 2, np.random.default_rng(9), n=20)
        assert first.details["centered"] == second.details["centered"]

    def test_batch_count_shape(self):
        """Test more copies per batch never needs more batches."""
        assert mixedness_batches(4, 4, 0.5) <= mixedness_batches(4, 1, 0.5)

    @pytest.mark.parametrize("eps", [0.0, -0.1, 2.5])
    def test_rejects_bad_eps(self, mixed_qubit, eps):
        """Test eps outside (0, 2] raises."""
        with pytest.raises(InvalidParameter):
            mixedness_test(mixed_qubit, eps, 2, rng=np.random.default_rng(0), n=2)


class TestClosenessTesters:
    """Tests for the one-copy and t-copy closeness testers."""

    def test_uniform_tester(self, mixed_qubit):
        """Test identical states pass and orthogonal pure states fail."""
        rng = np.random.default_rng(7)
        null = closeness_test_uniform(mixed_qubit, mixed_qubit, 1.0, 300, rng)
        alt = closeness_test_uniform(ZERO, ONE, 1.0, 300, rng)
        assert null.accept and not alt.accept
        assert null.threshold == pytest.approx(1.0 / 18.0)
        assert null.copies_used == 600
        assert null.t == 1

    def test_tcopy_tester(self, mixed_qubit):
        """Test the PTSW closeness tester on the same pair of instances."""
        rng = np.random.default_rng(8)
        null = closeness_test_tcopy(mixed_qubit, mixed_qubit, 1.0, 2, 200, rng)
        alt = closeness_test_tcopy(ZERO, ONE, 1.0, 2, 200, rng)
        assert null.accept and not alt.accept
        assert alt.threshold == pytest.approx(0.5)
        assert alt.copies_used == 800

    def test_dimension_mismatch(self, qubit_state, qutrit_state, rng):
        """Test sources on different dimensions are refused."""
        with pytest.raises(ShapeError):
            closeness_test_uniform(qubit_state, qutrit_state, 0.5, 4, rng)


class TestPurityTester:
    """Tests for multiplicative-error purity estimation."""

    def test_pure_state(self, pure_qubit):
        """Test the relative error on a pure state is within eps."""
        verdict = purity_test(pure_qubit, 0.5, 2, 400, np.random.default_rng(9))
        assert verdict.accept
        assert verdict.details["purity"] == pytest.approx(1.0)
        assert verdict.statistic == pytest.approx(abs(verdict.details["estimate"] - 1.0))

    def test_rejects_eps_above_one(self, pure_qubit, rng):
        """Test relative error above 1 is not a valid target."""
        with pytest.raises(InvalidParameter):
            purity_test(pure_qubit, 1.5, 2, 4, rng)


class TestBucketing:
    """Tests for dyadic bucketing and instance-dependent certification."""

    def test_bucket_label(self):
        """Test the dyadic index floor(-log2 lambda)."""
        assert bucket_label(1.0) == 0
        assert bucket_label(0.5) == 1
        assert bucket_label(0.3) == 1
        assert bucket_label(0.125) == 3

    def test_plan_on_dyadic_sigma(self, dyadic_sigma):
        """Test buckets, tail and invariants for diag(1/2, 1/4, 1/8, 1/8)."""
        plan = bucket_plan(dyadic_sigma, 0.5)
        assert plan.tail_set == ()
        assert [b.label for b in plan.buckets] == [1, 2, 3]
        assert plan.bucket(3).dim == 2
        assert len(plan.pair_tests) == 3
        assert all(plan.invariants().values())

    def test_tail_is_dropped(self):
        """Test eigenvalues below eps^2 / 20 in total form the tail."""
        sigma = diagonal_state([0.6, 0.396, 0.002, 0.002])
        plan = bucket_plan(sigma, 0.5)
        assert len(plan.tail_set) == 2
        assert plan.tail_mass == pytest.approx(0.004)
        assert plan.invariants()["tail_mass"]

    @settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(d=st.integers(min_value=2, max_value=6), eps=st.floats(min_value=0.1, max_value=1.5), seed=SEEDS)
    def test_invariants_hold(self, d, eps, seed):
        """Test plan invariants on random spectra."""
        sigma = random_density(d, d, np.random.default_rng(seed))
        assert all(bucket_plan(sigma, eps).invariants().values())

    def test_certify_null_and_alternative(self, mixed_qubit):
        """Test sigma itself is certified and a far pure state is not."""
        rng = np.random.default_rng(13)
        null = certify(mixed_qubit, mixed_qubit, 0.5, 2, rng)
        alt = certify(mixed_qubit, ZERO, 0.5, 2, rng)
        assert null.accept
        assert not alt.accept
        assert null.details["buckets"] == [[0, 1]]
        assert any(check["kind"] == "diag" for check in null.details["checks"])
        assert null.threshold == 1.0

    def test_certify_shape_mismatch(self, dyadic_sigma, qubit_state, rng):
        """Test rho must match sigma's dimension."""
        with pytest.raises(ShapeError):
            certify(dyadic_sigma, qubit_state, 0.5, 2, rng)

    def test_instance_complexity_decreases_with_t(self, dyadic_sigma):
        """Test the instance-dependent copy bound shrinks as t grows."""
        assert instance_complexity(dyadic_sigma, 0.5, 4) < instance_complexity(dyadic_sigma, 0.5, 1)


class TestBowTester:
    """Tests for the batched closeness tester and the SWAP test."""

    @pytest.mark.parametrize("t", [2, 4])
    def test_batch_law(self, t, rng):
        """Test the per-batch estimate is unbiased and within the variance bound."""
        rho, sigma = random_density(2, 2, rng), random_density(2, 2, rng)
        law = BowBatchDistribution(rho, sigma, t)
        delta_sq = hs_norm(np.asarray(rho) - np.asarray(sigma)) ** 2
        assert law.mean() == pytest.approx(delta_sq, abs=1e-8)
        assert law.variance() <= 10.0 * (1.0 / t ** 2 + delta_sq / t)
        assert sum(o.probability for o in law.outcomes) == pytest.approx(1.0)

    def test_variance_shrinks_with_batch_size(self):
        """Test Var z stays under 10 (1/t^2 + ||Delta||^2 / t) and never grows with t."""
        table = bow_variance_table(t_values=(2, 4, 8), distances=(0.0, 0.5))
        for (distance, t), (law, bound) in table.items():
            assert law.mean() == pytest.approx(distance ** 2, abs=1e-8)
            assert law.variance() <= bound
        for distance in (0.0, 0.5):
            variances = [table[(distance, t)][0].variance() for t in (2, 4, 8)]
            assert np.all(np.diff(variances) <= 1e-12)

    def test_sampled_batches_follow_law(self, rng):
        """Test sampled batch estimates match the exact mean and variance."""
        law, _ = bow_variance_table(t_values=(8,), distances=(0.5,))[(0.5, 8)]
        assert max(law_gaps(law.sample(4000, rng), law.mean(), law.variance())) <= 5.0

    def test_needs_two_copies(self, qubit_state):
        """Test t = 1 is rejected."""
        with pytest.raises(InvalidParameter):
            BowBatchDistribution(qubit_state, qubit_state, 1)

    def test_decisions(self, mixed_qubit):
        """Test identical states are accepted and orthogonal ones rejected."""
        rng = np.random.default_rng(19)
        null = bow_batched_test(mixed_qubit, mixed_qubit, 0.5, 2, 2000, rng)
        alt = bow_batched_test(ZERO, ONE, 0.5, 2, 400, rng)
        assert null.accept and not alt.accept
        assert null.threshold == pytest.approx(0.75 * 0.25)
        assert null.copies_used == 2 * 2 * 2000
        assert alt.details["exact_mean"] == pytest.approx(2.0)

    def test_batch_count(self):
        """Test the default batch count formula."""
        assert bow_batches(2, 0.5, constant=1.0) == 6

    def test_swap_test(self, qubit_state, pure_qubit, rng):
        """Test Pr[+1] = (1 + tr(rho sigma)) / 2 and the +-1 outcome."""
        expected = (1.0 + float(np.real(np.trace(qubit_state @ pure_qubit)))) / 2.0
        assert swap_test_probability(qubit_state, pure_qubit) == pytest.approx(expected)
        assert swap_test(qubit_state, pure_qubit, rng) in (-1, 1)

    def test_joint_outcomes_normalized(self, qubit_state, mixed_qubit):
        """Test the joint label distribution sums to one."""
        outcomes = joint_outcomes(qubit_state, mixed_qubit, 2)
        assert sum(o.probability for o in outcomes) == pytest.approx(1.0)
