"""
test_chi2lab.py

Unit tests for hard-instance ensembles, rank-one POVMs and their Lueders
channels, and the exact chi-square divergence toolkit.
"""

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from src.chi2lab.channels import (
    RankOnePovm,
    computational_basis_povm,
    induced_channel,
    lueders_channel,
    outcome_distribution,
    random_rank_one_povm,
)
from src.chi2lab.divergence import (
    adversarial_basis,
    chi2_exact,
    chi2_order_table,
    ingster_suslina_bound,
    linearized_terms,
    normalization_removal_gap,
    phi_lueders,
    phi_matrix,
    projected_norm,
    run_scenario,
)
from src.chi2lab.instances import HardInstanceEnsemble, almost_eps_fraction, hard_instance, validate_operator_basis
from src.errors import InvalidParameter, ResourceLimit, ShapeError
from src.qcore.operators import gellmann_basis, operator_norm
from src.qcore.states import to_json

SEEDS = st.integers(min_value=0, max_value=2 ** 32 - 1)


class TestHardInstances:
    """Tests for the Rademacher hard-instance ensemble."""

    def test_states_are_valid(self):
        """Test every rho_z is a density matrix with clamped deviation."""
        ensemble = HardInstanceEnsemble(3, 5, 0.4)
        for z in ensemble.all_signs():
            rho = np.asarray(ensemble.rho(z))
            assert np.trace(rho).real == pytest.approx(1.0)
            assert operator_norm(ensemble.clamped_delta(z)) <= 1.0 / 3.0 + 1e-12

    def test_clamp_is_active_for_large_eps(self):
        """Test a_z < 1 once d ||Delta_z||_op exceeds one."""
        ensemble = HardInstanceEnsemble(2, 3, 0.9)
        z = np.ones(3)
        assert ensemble.a(z) < 1.0
        assert operator_norm(ensemble.clamped_delta(z)) == pytest.approx(0.5)

    def test_qubit_instances_are_eps_far(self):
        """Test with d = 2, ell = 3 every unclamped instance sits at trace distance 2 eps."""
        assert almost_eps_fraction(HardInstanceEnsemble(2, 3, 0.3)) == 1.0

    def test_sign_order(self):
        """Test signs enumerate with +1 first."""
        signs = HardInstanceEnsemble(2, 2, 0.1).all_signs()
        assert signs.tolist() == [[1, 1], [1, -1], [-1, 1], [-1, -1]]

    def test_helper_matches_ensemble(self):
        """Test hard_instance builds the same state as the ensemble."""
        z = np.array([1.0, -1.0])
        state = hard_instance(2, 2, 0.2, None, z)
        assert np.allclose(np.asarray(state), np.asarray(HardInstanceEnsemble(2, 2, 0.2).rho(z)))

    @pytest.mark.parametrize("d,ell", [(2, 0), (2, 4), (1, 1)])
    def test_rejects_bad_sizes(self, d, ell):
        """Test ell outside [1, d^2 - 1] and d < 2 are refused."""
        with pytest.raises(InvalidParameter):
            HardInstanceEnsemble(d, ell, 0.1)

    def test_basis_validation(self):
        """Test a basis without I/sqrt(d) last is rejected."""
        basis = gellmann_basis(2)
        validate_operator_basis(basis, 2)
        with pytest.raises(InvalidParameter):
            validate_operator_basis(basis[::-1], 2)

    def test_sign_enumeration_cap(self):
        """Test ell above the enumeration cap is a resource limit."""
        with pytest.raises(ResourceLimit):
            HardInstanceEnsemble(4, 13, 0.1).all_signs()


class TestPovmsAndChannels:
    """Tests for rank-one POVMs and Lueders channels."""

    @settings(max_examples=20, deadline=None)
    @given(dim=st.integers(min_value=2, max_value=4), extra=st.integers(min_value=0, max_value=4), seed=SEEDS)
    def test_lueders_axioms(self, dim, extra, seed):
        """Test the Lueders channel is unital, trace preserving and PSD in Liouville form."""
        povm = random_rank_one_povm(dim, dim + extra, np.random.default_rng(seed))
        channel = lueders_channel(povm)
        assert channel.is_unital()
        assert channel.is_trace_preserving()
        liouville = channel.liouville
        assert np.allclose(liouville, liouville.conj().T, atol=1e-10)
        assert np.min(np.linalg.eigvalsh(liouville)) >= -1e-10
        assert np.max(np.linalg.eigvalsh(liouville)) <= 1.0 + 1e-10

    def test_outcome_distribution(self, qubit_state, rng):
        """Test outcome probabilities on rho^(x)2 sum to one."""
        povm = random_rank_one_povm(4, 6, rng)
        probs = outcome_distribution(povm, qubit_state, 2)
        assert probs.sum() == pytest.approx(1.0)
        assert np.all(probs >= 0)

    def test_outcome_distribution_shape(self, qubit_state):
        """Test a POVM on the wrong dimension is refused."""
        with pytest.raises(ShapeError):
            outcome_distribution(computational_basis_povm(3), qubit_state, 1)

    def test_incomplete_povm(self):
        """Test elements that do not sum to I are rejected."""
        with pytest.raises(InvalidParameter):
            RankOnePovm(np.array([[1.0, 0.0], [0.0, 0.5]]))

    def test_too_few_outcomes(self, rng):
        """Test a rank-one POVM needs at least dim outcomes."""
        with pytest.raises(InvalidParameter):
            random_rank_one_povm(3, 2, rng)

    def test_json_forms(self, rng):
        """Test both the vector and the element-list JSON forms load."""
        povm = random_rank_one_povm(2, 3, rng)
        loaded = RankOnePovm.from_json(povm.to_json())
        assert np.allclose(loaded.vectors, povm.vectors)
        from_elements = RankOnePovm.from_json({"outcomes": [to_json(povm.element(x)) for x in range(3)]})
        for x in range(3):
            assert np.allclose(from_elements.element(x), povm.element(x), atol=1e-10)

    def test_induced_channel(self, rng):
        """Test H~ is the channel itself at t = 1 and a unital channel on C^d at t = 2."""
        single = lueders_channel(random_rank_one_povm(2, 3, rng))
        assert induced_channel(single, 2, 1) is single
        induced = induced_channel(lueders_channel(random_rank_one_povm(4, 5, rng)), 2, 2)
        assert induced.in_dim == 2
        assert induced.is_unital()
        assert induced.is_trace_preserving()
        assert np.real(induced.trace()) <= 2.0 + 1e-9

    def test_induced_channel_dimension(self, rng):
        """Test the channel must act on d^t."""
        with pytest.raises(ShapeError):
            induced_channel(lueders_channel(random_rank_one_povm(2, 2, rng)), 2, 2)


class TestDivergence:
    """Tests for exact chi-square divergences and their bounds."""

    @settings(max_examples=10, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(
        t=st.integers(min_value=1, max_value=2),
        n=st.integers(min_value=1, max_value=2),
        ell=st.integers(min_value=1, max_value=3),
        eps=st.floats(min_value=0.05, max_value=0.4),
        seed=SEEDS,
    )
    def test_chi2_below_ingster_suslina(self, t, n, ell, eps, seed):
        """Test 0 <= chi2 <= the Ingster-Suslina bound."""
        rng = np.random.default_rng(seed)
        ensemble = HardInstanceEnsemble(2, ell, eps)
        schedule = [random_rank_one_povm(2 ** t, 2 ** t + 1, rng) for _ in range(n)]
        exact = chi2_exact(ensemble, schedule, n, t)
        assert exact >= 0.0
        assert exact <= ingster_suslina_bound(ensemble, schedule, n, t) + 1e-12

    def test_chi2_vanishes_at_zero_eps(self, rng):
        """Test the mixture equals I/d when eps = 0."""
        ensemble = HardInstanceEnsemble(2, 3, 0.0)
        assert chi2_exact(ensemble, [random_rank_one_povm(2, 3, rng)], 2, 1) == pytest.approx(0.0, abs=1e-12)

    def test_single_schedule_is_repeated(self, rng):
        """Test one POVM is reused across all rounds."""
        ensemble = HardInstanceEnsemble(2, 2, 0.3)
        povm = random_rank_one_povm(2, 3, rng)
        assert chi2_exact(ensemble, [povm], 2, 1) == pytest.approx(chi2_exact(ensemble, [povm, povm], 2, 1))

    def test_round_cap(self, rng):
        """Test more than three rounds is a resource limit."""
        with pytest.raises(ResourceLimit):
            chi2_exact(HardInstanceEnsemble(2, 1, 0.1), [random_rank_one_povm(2, 2, rng)], 4, 1)

    @pytest.mark.parametrize("t", [1, 2])
    def test_phi_lueders_route(self, t, rng):
        """Test phi from outcome distributions equals d^t tr(Delta H(Delta'))."""
        ensemble = HardInstanceEnsemble(2, 3, 0.3)
        povm = random_rank_one_povm(2 ** t, 2 ** t + 2, rng)
        phi = phi_matrix(ensemble, povm, t)
        signs = ensemble.all_signs()
        for a, b in ((0, 0), (1, 6), (5, 2)):
            assert phi[a, b] == pytest.approx(phi_lueders(ensemble, povm, t, signs[a], signs[b]), abs=1e-10)

    def test_linearization_sums_to_total(self, rng):
        """Test the four bilinear pieces add up to the full pairing."""
        ensemble = HardInstanceEnsemble(2, 3, 0.2)
        channel = lueders_channel(random_rank_one_povm(4, 6, rng))
        signs = ensemble.all_signs()
        terms = linearized_terms(ensemble, channel, signs[1], signs[4], 2)
        assert terms.ll + terms.nonlinear == pytest.approx(terms.total, abs=1e-12)
        assert set(terms.to_dict()) >= {"ll", "nonlinear", "linear_nonlinear_ratio"}

    def test_linearization_rate(self, rng):
        """Test the non-linear part shrinks like eps^3."""
        channel = lueders_channel(random_rank_one_povm(4, 6, rng))
        z = np.ones(3)
        grid = 0.0125 * 2.0 ** np.arange(5)
        nonlinear = [abs(linearized_terms(HardInstanceEnsemble(2, 3, eps), channel, z, z, 2).nonlinear) for eps in grid]
        slope = np.polyfit(np.log(grid), np.log(nonlinear), 1)[0]
        assert slope == pytest.approx(3.0, abs=0.3)

    def test_adversarial_basis(self, rng):
        """Test the chosen basis is valid and beats Gell-Mann and the largest eigenvectors."""
        for _ in range(50):
            channel = lueders_channel(random_rank_one_povm(2, int(rng.integers(2, 8)), rng))
            chosen = adversarial_basis(channel, 2)
            largest = adversarial_basis(channel, 2, smallest=False)
            validate_operator_basis(chosen.basis, 2)
            assert chosen.projected_norm <= math.sqrt(2.0) + 1e-10
            assert chosen.projected_norm <= projected_norm(channel, gellmann_basis(2), 2) + 1e-10
            assert chosen.projected_norm <= largest.projected_norm + 1e-10
            assert np.all(np.diff(chosen.eigenvalues) >= -1e-9)
            assert np.all(np.diff(largest.eigenvalues) <= 1e-9)

    def test_adversarial_basis_rejects_ell(self, rng):
        """Test ell must leave out the identity direction."""
        with pytest.raises(InvalidParameter):
            adversarial_basis(lueders_channel(random_rank_one_povm(2, 3, rng)), 4)

    @pytest.mark.parametrize("d,t", [(2, 1), (2, 2), (4, 1)])
    def test_normalization_removal(self, d, t, rng):
        """Test clamping raises the exponential moment by at most 4exp(-d), for every ell <= 10."""
        channel = lueders_channel(random_rank_one_povm(d ** t, d ** t + 2, rng))
        induced = induced_channel(channel, d, t)
        for ell in range(1, min(10, d * d - 1) + 1):
            with_clamp, without = normalization_removal_gap(HardInstanceEnsemble(d, ell, 0.9), induced, 2, t)
            assert with_clamp <= without + 4.0 * math.exp(-d) + 1e-12

    def test_order_table(self, rng):
        """Test min-max over schedules dominates max-min over ensembles."""
        g = gellmann_basis(2)
        ensembles = {
            "gellmann": HardInstanceEnsemble(2, 2, 0.3),
            "diagonal-first": HardInstanceEnsemble(2, 2, 0.3, basis=(g[2], g[1], g[0], g[3])),
        }
        schedules = {f"random-{k}": [random_rank_one_povm(2, 3, rng)] for k in range(3)}
        order = chi2_order_table(ensembles, schedules, 1, 1)
        assert order.table.shape == (2, 3)
        assert order.minmax >= order.maxmin - 1e-12


class TestScenarios:
    """Tests for scenario files."""

    def test_run_scenario_file(self, scenario_file):
        """Test a scenario loads from disk and reports both quantities."""
        result = run_scenario(scenario_file)
        assert set(result) == {"chi2_exact", "is_bound", "per_term_breakdown"}
        assert result["chi2_exact"] <= result["is_bound"] + 1e-12
        assert [row["round"] for row in result["per_term_breakdown"]] == [0, 1]

    def test_scenario_is_deterministic(self, sample_scenario):
        """Test the seed fixes the random schedule."""
        assert run_scenario(sample_scenario)["chi2_exact"] == run_scenario(sample_scenario)["chi2_exact"]

    def test_adversarial_scenario(self, sample_scenario):
        """Test the adversarial basis option runs end to end."""
        result = run_scenario({**sample_scenario, "basis": "adversarial"})
        assert result["chi2_exact"] >= 0.0

    def test_missing_key(self, sample_scenario):
        """Test an incomplete scenario names the missing key."""
        scenario = dict(sample_scenario)
        del scenario["ell"]
        with pytest.raises(InvalidParameter, match="ell"):
            run_scenario(scenario)
