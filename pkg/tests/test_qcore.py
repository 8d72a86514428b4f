"""
test_qcore.py

Unit tests for the dense linear-algebra core: state containers, Haar
sampling, tensor and permutation operators, partial traces, norms,
serialization and superoperators.
"""

import json
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from src.errors import InvalidDimension, InvalidParameter, ResourceLimit, ShapeError
from src.qcore.operators import (
    gellmann_basis,
    hs_distance,
    hs_norm,
    in_sos_cone,
    kron_power,
    partial_trace,
    permutation_operator,
    permute_registers,
    purity,
    schatten,
    swap_operator,
    sym_dimension,
    symmetric_basis,
    symmetric_projector,
    trace_distance,
    trace_norm,
)
from src.qcore.states import (
    DensityMatrix,
    HermitianOp,
    PureState,
    from_json,
    haar_state,
    haar_unitary,
    maximally_mixed,
    random_density,
    to_json,
)
from src.qcore.superop import Superoperator

SEEDS = st.integers(min_value=0, max_value=2 ** 32 - 1)


class TestContainers:
    """Tests for Hermitian, density and pure-state containers."""

    def test_density_rejects_non_unit_trace(self):
        """Test that a density matrix must have unit trace."""
        with pytest.raises(InvalidParameter):
            DensityMatrix(np.eye(2))

    def test_density_rejects_negative_eigenvalue(self):
        """Test that a density matrix must be PSD."""
        with pytest.raises(InvalidParameter):
            DensityMatrix(np.diag([1.5, -0.5]))

    def test_hermitian_rejects_non_square(self):
        """Test that non-square input raises ShapeError."""
        with pytest.raises(ShapeError):
            HermitianOp(np.zeros((2, 3)))

    def test_hermitian_rejects_skew(self):
        """Test that a non-Hermitian matrix is rejected."""
        with pytest.raises(InvalidParameter):
            HermitianOp(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_entries_are_read_only(self, qubit_state):
        """Test that container entries cannot be mutated in place."""
        state = DensityMatrix(qubit_state)
        with pytest.raises(ValueError):
            state.entries[0, 0] = 1.0

    def test_pure_state_projector(self, rng):
        """Test that a pure state's projector is a rank-one density matrix."""
        psi = haar_state(3, rng)
        density = psi.density()
        assert density.purity() == pytest.approx(1.0)
        assert np.allclose(psi.projector() @ psi.projector(), psi.projector())

    def test_maximally_mixed(self):
        """Test I/d has purity 1/d."""
        assert maximally_mixed(4).purity() == pytest.approx(0.25)

    def test_invalid_dimension(self, rng):
        """Test that zero dimension is rejected."""
        with pytest.raises(InvalidDimension):
            maximally_mixed(0)
        with pytest.raises(InvalidDimension):
            haar_unitary(0, rng)

    def test_random_density_rank(self, rng):
        """Test that random_density produces the requested rank."""
        rho = np.asarray(random_density(4, 2, rng))
        eigs = np.linalg.eigvalsh(rho)
        assert np.sum(eigs > 1e-10) == 2
        with pytest.raises(InvalidParameter):
            random_density(3, 4, rng)


class TestSerialization:
    """Tests for the interleaved JSON matrix format."""

    def test_known_encoding(self):
        """Test the row-major (re, im) layout on a fixed matrix."""
        op = np.array([[0.5, 0.25j], [-0.25j, 0.5]])
        assert to_json(op) == {"dim": 2, "data": [0.5, 0.0, 0.0, 0.25, 0.0, -0.25, 0.5, 0.0]}

    def test_from_json_string_and_kinds(self, qubit_state):
        """Test decoding from a JSON string into a density matrix."""
        text = json.dumps(to_json(qubit_state))
        decoded = from_json(text, kind="density")
        assert isinstance(decoded, DensityMatrix)
        assert np.allclose(decoded.entries, qubit_state)

    def test_pure_state_encoding(self, rng):
        """Test pure states are encoded as vectors."""
        psi = haar_state(3, rng)
        decoded = from_json(to_json(psi), kind="pure")
        assert isinstance(decoded, PureState)
        assert np.allclose(decoded.amplitudes, psi.amplitudes)

    def test_wrong_length(self):
        """Test that a truncated payload raises ShapeError."""
        with pytest.raises(ShapeError):
            from_json({"dim": 2, "data": [1.0, 0.0]})


class TestHaarSampling:
    """Tests for Haar unitaries and states."""

    @settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(d=st.integers(min_value=1, max_value=6), seed=SEEDS)
    def test_unitary(self, d, seed):
        """Test that haar_unitary returns a unitary matrix."""
        u = haar_unitary(d, np.random.default_rng(seed))
        assert np.allclose(u @ u.conj().T, np.eye(d), atol=1e-10)

    def test_state_second_moment(self):
        """Test E|psi><psi| = I/d within Monte Carlo error."""
        rng = np.random.default_rng(5)
        d, samples = 3, 4000
        mean = sum(haar_state(d, rng).projector() for _ in range(samples)) / samples
        # each entry has standard error below 1/sqrt(samples)
        assert np.max(np.abs(mean - np.eye(d) / d)) < 4.0 / math.sqrt(samples)


class TestTensorsAndPermutations:
    """Tests for tensor powers, permutation operators and register reordering."""

    def test_kron_power_zero(self):
        """Test that the zeroth tensor power is the 1x1 identity."""
        assert np.allclose(kron_power(np.eye(2), 0), np.ones((1, 1)))

    def test_swap_exchanges_factors(self, qubit_state, pure_qubit):
        """Test SWAP (A x B) SWAP = B x A."""
        swap = swap_operator(2)
        assert np.allclose(swap @ np.kron(qubit_state, pure_qubit) @ swap, np.kron(pure_qubit, qubit_state))

    def test_permutation_is_unitary_and_composes(self):
        """Test V(pi) is a permutation matrix and V(pi)^3 = I for a 3-cycle."""
        v = permutation_operator((1, 2, 0), 2)
        assert np.allclose(v @ v.T, np.eye(8))
        assert np.allclose(v @ v @ v, np.eye(8))

    def test_permute_registers_matches_swap(self, qubit_state, qutrit_state):
        """Test reordering a two-register product swaps its factors."""
        op = np.kron(qubit_state, qutrit_state)
        assert np.allclose(permute_registers(op, [2, 3], [1, 0]), np.kron(qutrit_state, qubit_state))

    def test_invalid_permutation(self):
        """Test that a non-permutation is rejected."""
        with pytest.raises(InvalidParameter):
            permutation_operator((0, 0), 2)

    def test_cap_raises_resource_limit(self, monkeypatch):
        """Test QCERTLAB_DIM_CAP shrinks the dimension cap."""
        monkeypatch.setenv("QCERTLAB_DIM_CAP", "16")
        with pytest.raises(ResourceLimit) as info:
            permutation_operator((1, 0, 2, 3, 4), 2)
        assert info.value.size == 32 and info.value.cap == 16


class TestSymmetricSubspace:
    """Tests for the symmetric basis and projector."""

    @pytest.mark.parametrize("d,n", [(2, 2), (2, 3), (3, 2), (3, 3), (4, 2)])
    def test_dimension_and_isometry(self, d, n):
        """Test the basis is an isometry of dimension C(d+n-1, n)."""
        basis = symmetric_basis(d, n)
        assert basis.shape == (d ** n, sym_dimension(d, n))
        assert np.allclose(basis.conj().T @ basis, np.eye(sym_dimension(d, n)))

    def test_projector_is_average_of_permutations(self):
        """Test Pi_sym = (1/n!) sum_pi V(pi) at d=2, n=3."""
        perms = [(0, 1, 2), (1, 0, 2), (0, 2, 1), (2, 1, 0), (1, 2, 0), (2, 0, 1)]
        average = sum(permutation_operator(p, 2) for p in perms) / 6
        assert np.allclose(np.asarray(symmetric_projector(2, 3)), average)


class TestPartialTrace:
    """Tests for partial traces over arbitrary register subsets."""

    def test_product_state(self, qubit_state, qutrit_state):
        """Test tracing out one factor of a product state."""
        op = np.kron(qubit_state, qutrit_state)
        assert np.allclose(partial_trace(op, [2, 3], [0]), qubit_state)
        assert np.allclose(partial_trace(op, [2, 3], [1]), qutrit_state)

    def test_middle_register(self, rng):
        """Test keeping the middle of three registers."""
        a, b, c = (np.asarray(random_density(2, 2, rng)) for _ in range(3))
        assert np.allclose(partial_trace(np.kron(np.kron(a, b), c), [2, 2, 2], [1]), b)

    def test_bad_dims(self, qubit_state):
        """Test mismatched dims raise ShapeError."""
        with pytest.raises(ShapeError):
            partial_trace(qubit_state, [2, 2], [0])


class TestNorms:
    """Tests for Schatten norms, distances and purity."""

    def test_known_values(self, skewed_qubit, mixed_qubit):
        """Test distances between diag(0.9, 0.1) and I/2."""
        assert trace_distance(skewed_qubit, mixed_qubit) == pytest.approx(0.8)
        assert hs_distance(skewed_qubit, mixed_qubit) == pytest.approx(0.4 * math.sqrt(2))
        assert purity(skewed_qubit) == pytest.approx(0.82)

    def test_quasinorm(self):
        """Test the 1/2 Schatten quasinorm (sum sqrt(s))^2."""
        op = np.diag([0.25, 0.25, 0.0])
        assert schatten(op, 0.5) == pytest.approx(1.0)

    @settings(max_examples=25, deadline=None)
    @given(d=st.integers(min_value=2, max_value=5), seed=SEEDS)
    def test_norm_ordering(self, d, seed):
        """Test ||A||_2 <= ||A||_1 <= sqrt(d) ||A||_2 on state differences."""
        rng = np.random.default_rng(seed)
        delta = np.asarray(random_density(d, d, rng)) - np.asarray(random_density(d, 1, rng))
        assert hs_norm(delta) <= trace_norm(delta) + 1e-10
        assert trace_norm(delta) <= math.sqrt(d) * hs_norm(delta) + 1e-10

    @settings(max_examples=25, deadline=None)
    @given(d=st.integers(min_value=2, max_value=4), seed=SEEDS)
    def test_purity_is_swap_expectation(self, d, seed):
        """Test tr(rho^2) = tr(SWAP rho x rho)."""
        rho = np.asarray(random_density(d, d, np.random.default_rng(seed)))
        assert purity(rho) == pytest.approx(float(np.real(np.trace(swap_operator(d) @ np.kron(rho, rho)))))


class TestOperatorBasis:
    """Tests for the Gell-Mann basis and the sum-of-squares cone."""

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_orthonormal(self, d):
        """Test the basis is orthonormal and ends with I/sqrt(d)."""
        basis = np.stack(gellmann_basis(d))
        flat = basis.reshape(d * d, -1)
        assert np.allclose(flat.conj() @ flat.T, np.eye(d * d))
        assert np.allclose(basis[-1], np.eye(d) / math.sqrt(d))

    def test_sos_membership(self, qubit_state):
        """Test X x X is in SoS(d) and -(X x X) is not."""
        op = np.kron(qubit_state, qubit_state)
        assert in_sos_cone(op, 2)
        assert not in_sos_cone(-op, 2)

    def test_swap_is_sos(self):
        """Test SWAP = sum_i V_i x V_i is in the cone."""
        assert in_sos_cone(swap_operator(3), 3)


class TestSuperoperator:
    """Tests for Liouville representations."""

    def test_identity_channel(self, qubit_state):
        """Test the identity map has the identity Liouville matrix and is CPTP."""
        channel = Superoperator.from_map(lambda x: x, 2)
        assert np.allclose(channel.liouville, np.eye(4))
        assert np.allclose(channel.apply(qubit_state), qubit_state)
        assert channel.is_unital() and channel.is_trace_preserving() and channel.is_completely_positive()

    def test_transpose_is_not_cp(self):
        """Test the transpose map is positive but not completely positive."""
        channel = Superoperator.from_map(lambda x: x.T, 2)
        assert channel.is_trace_preserving()
        assert not channel.is_completely_positive()

    def test_partial_trace_map(self, qubit_state, qutrit_state):
        """Test a 6 -> 2 partial trace map keeps its first factor."""
        channel = Superoperator.from_map(lambda x: partial_trace(x, [2, 3], [0]), 6, 2)
        assert np.allclose(channel.apply(np.kron(qubit_state, qutrit_state)), qubit_state)
        assert channel.is_trace_preserving()

    def test_shape_check(self):
        """Test mismatched Liouville shapes are rejected."""
        with pytest.raises(ShapeError):
            Superoperator(np.eye(4), 2, 3)
