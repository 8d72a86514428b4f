"""
test_schurweyl.py

Unit tests for partitions and characters, isotypic projectors, weak Schur
sampling, GL(d) irrep isometries and the Haar moment oracle.
"""

import math
from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.errors import InvalidParameter, PreconditionError
from src.qcore.operators import kron_power, swap_operator
from src.qcore.states import haar_state, maximally_mixed, random_density
from src.schurweyl.moments import haar_moment_oracle
from src.schurweyl.partitions import (
    Partition,
    as_partition,
    character,
    class_size,
    content_sum,
    cycle_type,
    gl_dimension,
    irrep_dimension,
    partitions,
)
from src.schurweyl.projectors import (
    conditional_state,
    expected_partition_length,
    irrep_isometry,
    lie_generators,
    projector_matrix,
    weak_schur_distribution,
    weak_schur_sample,
)

SEEDS = st.integers(min_value=0, max_value=2 ** 32 - 1)


class TestPartitions:
    """Tests for partition enumeration and parsing."""

    @pytest.mark.parametrize("t,count", [(1, 1), (2, 2), (3, 3), (4, 5), (5, 7), (6, 11)])
    def test_counts(self, t, count):
        """Test the number of partitions of t."""
        assert len(partitions(t)) == count

    def test_order_and_parse(self):
        """Test lexicographic-descending order and string parsing."""
        assert [p.parts for p in partitions(3)] == [(3,), (2, 1), (1, 1, 1)]
        assert as_partition("(2,1)") == Partition((2, 1))
        assert Partition.parse("3 1") == Partition((3, 1))

    def test_rejects_increasing(self):
        """Test that an increasing tuple is not a partition."""
        with pytest.raises(InvalidParameter):
            Partition((1, 2))

    def test_transpose(self):
        """Test conjugate partitions."""
        assert Partition((3, 1)).transpose() == Partition((2, 1, 1))


class TestCharacters:
    """Tests for dimensions, characters and class data."""

    def test_known_dimensions(self):
        """Test hook-length and hook-content dimensions on small shapes."""
        assert irrep_dimension((2, 1)) == 2
        assert irrep_dimension((3, 1)) == 3
        assert gl_dimension((2, 1), 2) == 2
        assert gl_dimension((2, 1), 3) == 8
        assert gl_dimension((1, 1, 1), 2) == 0

    def test_known_characters(self):
        """Test the character table of S_3 on the standard representation."""
        assert character((2, 1), (1, 1, 1)) == 2
        assert character((2, 1), (2, 1)) == 0
        assert character((2, 1), (3,)) == -1
        assert character((1, 1, 1), (2, 1)) == -1

    def test_class_data(self):
        """Test cycle types, class sizes and contents."""
        assert cycle_type((1, 0, 2)) == Partition((2, 1))
        assert class_size((2, 1)) == 3
        assert content_sum((2,)) == 1
        assert content_sum((1, 1)) == -1

    @pytest.mark.parametrize("t", [3, 4, 5])
    def test_row_orthogonality(self, t):
        """Test sum_mu |C_mu| chi^lam(mu) chi^nu(mu) = t! delta."""
        shapes = partitions(t)
        for lam in shapes:
            for nu in shapes:
                total = sum(class_size(mu) * character(lam, mu) * character(nu, mu) for mu in shapes)
                assert total == (factorial(t) if lam == nu else 0)

    @pytest.mark.parametrize("d,t", [(2, 3), (3, 3), (2, 5), (4, 4)])
    def test_schur_weyl_dimension_count(self, d, t):
        """Test sum_lam dim_lam * dim GL_lam(d) = d^t."""
        assert sum(irrep_dimension(lam) * gl_dimension(lam, d) for lam in partitions(t)) == d ** t


class TestProjectors:
    """Tests for isotypic projectors of (C^d)^t."""

    @pytest.mark.parametrize("d,t", [(2, 2), (2, 3), (3, 3), (2, 4)])
    def test_resolution_of_identity(self, d, t):
        """Test projectors are idempotent, orthogonal and complete."""
        projs = [projector_matrix(lam, d) for lam in partitions(t)]
        assert np.allclose(sum(projs), np.eye(d ** t), atol=1e-10)
        for i, a in enumerate(projs):
            assert np.allclose(a @ a, a, atol=1e-10)
            for b in projs[i + 1:]:
                assert np.allclose(a @ b, 0.0, atol=1e-10)

    def test_traces(self):
        """Test tr Pi_lam = dim_lam * dim GL_lam(d)."""
        for lam in partitions(3):
            trace = float(np.real(np.trace(projector_matrix(lam, 3))))
            assert trace == pytest.approx(irrep_dimension(lam) * gl_dimension(lam, 3))

    def test_two_copy_projectors(self):
        """Test Pi_(2) = (I + SWAP)/2 and Pi_(1,1) = (I - SWAP)/2."""
        swap = swap_operator(2)
        assert np.allclose(projector_matrix((2,), 2), (np.eye(4) + swap) / 2)
        assert np.allclose(projector_matrix((1, 1), 2), (np.eye(4) - swap) / 2)

    def test_commutes_with_tensor_power(self, qutrit_state):
        """Test [Pi_lam, rho^(x)t] = 0."""
        power = kron_power(qutrit_state, 3)
        for lam in partitions(3):
            proj = projector_matrix(lam, 3)
            assert np.allclose(proj @ power, power @ proj, atol=1e-10)

    def test_projectors_are_read_only(self):
        """Test cached projector arrays cannot be mutated."""
        with pytest.raises(ValueError):
            projector_matrix((2, 1), 2)[0, 0] = 0.0


class TestWeakSchurSampling:
    """Tests for the exact partition distribution and conditional states."""

    def test_maximally_mixed_two_copies(self):
        """Test p((2)) = 3/4 and p((1,1)) = 1/4 on I/2."""
        dist = weak_schur_distribution(maximally_mixed(2), 2)
        assert dist[Partition((2,))] == pytest.approx(0.75)
        assert dist[Partition((1, 1))] == pytest.approx(0.25)

    def test_pure_state_is_symmetric(self, rng):
        """Test a pure state always lands in the symmetric block."""
        dist = weak_schur_distribution(haar_state(3, rng).projector(), 3)
        assert dist[Partition((3,))] == pytest.approx(1.0)

    @settings(max_examples=15, deadline=None)
    @given(d=st.integers(min_value=2, max_value=3), t=st.integers(min_value=2, max_value=4), seed=SEEDS)
    def test_matches_projector_traces(self, d, t, seed):
        """Test power-sum probabilities equal tr(Pi_lam rho^(x)t)."""
        rho = np.asarray(random_density(d, d, np.random.default_rng(seed)))
        power = kron_power(rho, t)
        dist = weak_schur_distribution(rho, t)
        assert sum(dist.values()) == pytest.approx(1.0)
        for lam, p in dist.items():
            assert p == pytest.approx(float(np.real(np.trace(projector_matrix(lam, d) @ power))), abs=1e-9)

    @settings(max_examples=30, deadline=None)
    @given(
        d=st.integers(min_value=2, max_value=4),
        t=st.integers(min_value=1, max_value=5),
        rank=st.integers(min_value=1, max_value=4),
        seed=SEEDS,
    )
    def test_expected_length_bound(self, d, t, rank, seed):
        """Test E[len(lam)] <= min(2 sqrt(t), d)."""
        rho = random_density(d, min(rank, d), np.random.default_rng(seed))
        assert expected_partition_length(rho, t) <= min(2.0 * math.sqrt(t), d) + 1e-10

    def test_conditional_state(self, qubit_state):
        """Test the conditional state is a unit-trace block of rho^(x)t."""
        cond = conditional_state(qubit_state, 3, (2, 1))
        proj = projector_matrix((2, 1), 2)
        assert np.trace(cond).real == pytest.approx(1.0)
        assert np.allclose(proj @ cond @ proj, cond)

    def test_zero_weight_branch(self, pure_qubit):
        """Test a zero-probability partition raises."""
        with pytest.raises(InvalidParameter):
            conditional_state(pure_qubit, 2, (1, 1))

    def test_sample(self, qubit_state, rng):
        """Test a sampled outcome carries a reachable label and a valid state."""
        outcome = weak_schur_sample(qubit_state, 3, rng)
        assert outcome.lam.t == 3
        assert outcome.probability > 0
        assert outcome.conditional.trace() == pytest.approx(1.0)


class TestIrrepIsometries:
    """Tests for single-copy GL(d) irrep isometries and their generators."""

    @pytest.mark.parametrize("lam,d", [((2, 1), 2), ((2, 1), 3), ((3, 1), 2), ((2, 2), 2)])
    def test_isometry(self, lam, d):
        """Test W^dag W = I with width dim GL_lam(d), inside the lam block."""
        w = irrep_isometry(lam, d)
        assert w.shape[1] == gl_dimension(lam, d)
        assert np.allclose(w.conj().T @ w, np.eye(w.shape[1]), atol=1e-10)
        assert np.allclose(projector_matrix(lam, d) @ w, w, atol=1e-10)

    def test_generators_satisfy_gl_relations(self):
        """Test [E_ab, E_cd] = delta_bc E_ad - delta_da E_cb on (2,1), d = 3."""
        gens = lie_generators((2, 1), 3)
        for a in range(3):
            for b in range(3):
                for c in range(3):
                    for e in range(3):
                        lhs = gens[a, b] @ gens[c, e] - gens[c, e] @ gens[a, b]
                        rhs = (b == c) * gens[a, e] - (e == a) * gens[c, b]
                        assert np.allclose(lhs, rhs, atol=1e-9)


class TestHaarMomentOracle:
    """Tests for the exact Hayashi-outcome moment oracle."""

    def test_one_copy_first_moment(self, qutrit_state):
        """Test the oracle at n = 1 gives (rho + I)/(d + 1)."""
        first = np.asarray(haar_moment_oracle(qutrit_state, 3, 1))
        assert np.allclose(first, (qutrit_state + np.eye(3)) / 4)

    def test_moments_are_states(self, qubit_state):
        """Test both moments have unit trace."""
        for k in (1, 2):
            assert np.trace(np.asarray(haar_moment_oracle(qubit_state, 2, k))).real == pytest.approx(1.0)

    def test_rejects_non_symmetric_support(self):
        """Test the singlet is rejected as outside the symmetric subspace."""
        singlet = np.array([0, 1, -1, 0]) / math.sqrt(2)
        with pytest.raises(PreconditionError):
            haar_moment_oracle(np.outer(singlet, singlet), 2, 1)

    def test_rejects_third_moment(self, qubit_state):
        """Test only k in {1, 2} is supported."""
        with pytest.raises(InvalidParameter):
            haar_moment_oracle(qubit_state, 2, 3)
