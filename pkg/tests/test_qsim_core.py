"""
상태 벡터 시뮬레이터 테스트
"""

import numpy as np
import pytest
from pydantic import ValidationError

from app.errors import (
    InvalidInputError,
    NonUnitaryError,
    NullBranchError,
    QubitCapError,
    RegisterError,
    RotationOverflowError,
)
from app.schemas.quantum import DensityMatrix, QuantumState, RegisterLayout
from app.services import qsim_core

SQRT_HALF = 1 / np.sqrt(2)


def _plus_state() -> QuantumState:
    return qsim_core.hadamard_all(qsim_core.allocate_state(RegisterLayout.of(("a", 1))), "a")


def _random_state(rng, layout: RegisterLayout) -> QuantumState:
    amps = rng.standard_normal(layout.dim) + 1j * rng.standard_normal(layout.dim)
    return QuantumState(amplitudes=amps / np.linalg.norm(amps), layout=layout)


class TestAllocate:
    """레지스터 배치와 초기 상태"""

    def test_single_qubit(self):
        s = qsim_core.allocate_state(RegisterLayout.of(("a", 1)))
        np.testing.assert_array_equal(s.amplitudes, [1, 0])

    def test_two_registers(self):
        s = qsim_core.allocate_state(RegisterLayout.of(("a", 2), ("b", 1)))
        assert s.amplitudes.shape == (8,)
        assert s.amplitudes[0] == 1

    def test_qubit_cap(self):
        with pytest.raises(QubitCapError):
            RegisterLayout.of(("a", 20), ("b", 5), qubit_cap=24)

    def test_duplicate_names(self):
        with pytest.raises(RegisterError):
            RegisterLayout.of(("a", 1), ("a", 2))

    def test_unnormalized_state_rejected(self):
        with pytest.raises(ValidationError):
            QuantumState(amplitudes=np.array([1.0, 1.0]), layout=RegisterLayout.of(("a", 1)))


class TestGates:
    """유니터리, 하다마드, 진폭 회전"""

    def test_identity_keeps_state(self, rng):
        s = _random_state(rng, RegisterLayout.of(("a", 2), ("b", 1)))
        out = qsim_core.apply_unitary(s, np.eye(4), "a")
        np.testing.assert_allclose(out.amplitudes, s.amplitudes)

    def test_pauli_x_flips(self):
        s = qsim_core.pauli_x(qsim_core.allocate_state(RegisterLayout.of(("a", 1))), "a")
        np.testing.assert_allclose(s.amplitudes, [0, 1])

    def test_non_unitary_rejected(self):
        s = qsim_core.allocate_state(RegisterLayout.of(("a", 1)))
        with pytest.raises(NonUnitaryError):
            qsim_core.apply_unitary(s, np.array([[1.0, 1.0], [0.0, 1.0]]), "a")

    def test_target_order_is_most_significant_first(self):
        s = qsim_core.allocate_state(RegisterLayout.of(("a", 1), ("b", 1)))
        s = qsim_core.pauli_x(s, "b")
        # |a=0, b=1⟩ 는 인덱스 1
        np.testing.assert_allclose(np.abs(s.amplitudes), [0, 1, 0, 0])

    def test_controlled_gate_acts_on_branch_only(self):
        s = qsim_core.allocate_state(RegisterLayout.of(("c", 1), ("t", 1)))
        s = qsim_core.hadamard_all(s, "c")
        s = qsim_core.pauli_x(s, "t", control=("c", 1))
        np.testing.assert_allclose(s.amplitudes, [SQRT_HALF, 0, 0, SQRT_HALF], atol=1e-12)

    def test_hadamard_single_qubit(self):
        np.testing.assert_allclose(_plus_state().amplitudes, [SQRT_HALF, SQRT_HALF], atol=1e-12)

    def test_hadamard_two_qubits_uniform(self):
        s = qsim_core.hadamard_all(qsim_core.allocate_state(RegisterLayout.of(("a", 2))), "a")
        np.testing.assert_allclose(s.amplitudes, np.full(4, 0.5), atol=1e-12)

    def test_hadamard_is_involution(self, rng):
        s = _random_state(rng, RegisterLayout.of(("a", 3)))
        twice = qsim_core.hadamard_all(qsim_core.hadamard_all(s, "a"), "a")
        np.testing.assert_allclose(twice.amplitudes, s.amplitudes, atol=1e-12)

    def test_uniform_transform_partial_support(self):
        s = qsim_core.uniform_transform(qsim_core.allocate_state(RegisterLayout.of(("a", 2))), "a", 3)
        np.testing.assert_allclose(np.abs(s.amplitudes) ** 2, [1 / 3, 1 / 3, 1 / 3, 0], atol=1e-12)

    def test_block_diagonal(self):
        s = qsim_core.allocate_state(RegisterLayout.of(("c", 1), ("t", 1)))
        s = qsim_core.hadamard_all(s, "c")
        blocks = np.stack([np.eye(2), qsim_core.PAULI_X])
        out = qsim_core.apply_block_diagonal(s, "c", "t", blocks)
        np.testing.assert_allclose(out.amplitudes, [SQRT_HALF, 0, 0, SQRT_HALF], atol=1e-12)


class TestAmplitudeRotation:
    """조건부 진폭 회전"""

    def _rotate(self, value: float, delta: float) -> QuantumState:
        s = qsim_core.allocate_state(RegisterLayout.of(("v", 1), ("anc", 1)))
        return qsim_core.controlled_amplitude_rotation(s, "v", {0: value}, "anc", delta)

    def test_zero_value_stays(self):
        np.testing.assert_allclose(self._rotate(0.0, 1.0).amplitudes, [1, 0, 0, 0])

    def test_full_rotation(self):
        np.testing.assert_allclose(self._rotate(1.0, 1.0).amplitudes, [0, 1, 0, 0], atol=1e-12)

    def test_pythagorean_pair(self):
        np.testing.assert_allclose(self._rotate(0.6, 1.0).amplitudes, [0.8, 0.6, 0, 0], atol=1e-12)

    def test_overflow(self):
        with pytest.raises(RotationOverflowError, match="rotation amplitude overflow"):
            self._rotate(1.5, 1.0)

    def test_dirty_ancilla(self):
        s = qsim_core.allocate_state(RegisterLayout.of(("v", 1), ("anc", 1)))
        s = qsim_core.pauli_x(s, "anc")
        with pytest.raises(RegisterError):
            qsim_core.controlled_amplitude_rotation(s, "v", {0: 0.5}, "anc", 1.0)


class TestXorTable:
    def test_writes_codes(self):
        s = qsim_core.allocate_state(RegisterLayout.of(("i", 1), ("d", 2)))
        s = qsim_core.hadamard_all(s, "i")
        s = qsim_core.apply_xor_table(s, "i", "d", np.array([1, 3]))
        # |0⟩|1⟩ 와 |1⟩|3⟩
        np.testing.assert_allclose(np.abs(s.amplitudes) ** 2, [0, 0.5, 0, 0, 0, 0, 0, 0.5], atol=1e-12)

    def test_query_twice_uncomputes(self):
        s = qsim_core.allocate_state(RegisterLayout.of(("i", 1), ("d", 2)))
        s = qsim_core.hadamard_all(s, "i")
        once = qsim_core.apply_xor_table(s, "i", "d", np.array([1, 3]))
        twice = qsim_core.apply_xor_table(once, "i", "d", np.array([1, 3]), require_clean=False)
        np.testing.assert_allclose(twice.amplitudes, s.amplitudes, atol=1e-12)

    def test_occupied_register(self):
        s = qsim_core.allocate_state(RegisterLayout.of(("i", 1), ("d", 2)))
        s = qsim_core.apply_xor_table(s, "i", "d", np.array([1, 3]))
        with pytest.raises(RegisterError, match="data register occupied"):
            qsim_core.apply_xor_table(s, "i", "d", np.array([1, 3]))


class TestPostselect:
    """사후 선택"""

    def test_half_probability(self):
        state, prob = qsim_core.postselect(
            qsim_core.tensor_product(_plus_state(), qsim_core.encode_vector([1, 0], "b")), "a", 1
        )
        assert prob == pytest.approx(0.5)
        assert state.layout.names == ["b"]

    def test_product_state(self, rng):
        psi = _random_state(rng, RegisterLayout.of(("p", 2)))
        zero = qsim_core.allocate_state(RegisterLayout.of(("z", 1)))
        state, prob = qsim_core.postselect(qsim_core.tensor_product(zero, psi), "z", 0)
        assert prob == pytest.approx(1.0)
        np.testing.assert_allclose(state.amplitudes, psi.amplitudes, atol=1e-12)

    def test_null_branch(self):
        s = qsim_core.tensor_product(
            qsim_core.allocate_state(RegisterLayout.of(("a", 1))),
            qsim_core.allocate_state(RegisterLayout.of(("b", 1))),
        )
        with pytest.raises(NullBranchError, match="post-selection on null branch"):
            qsim_core.postselect(s, "a", 1)

    def test_projector_on_basis_state_matches_postselect(self, rng):
        s = _random_state(rng, RegisterLayout.of(("a", 1), ("b", 2)))
        by_basis, p1 = qsim_core.postselect(s, "a", 1)
        by_proj, p2 = qsim_core.postselect_projector(s, "a", [0, 1])
        assert p1 == pytest.approx(p2)
        np.testing.assert_allclose(by_proj.amplitudes, by_basis.amplitudes, atol=1e-12)

    def test_projector_orthogonal_target(self):
        s = qsim_core.tensor_product(
            qsim_core.encode_vector([1, 1], "a"), qsim_core.encode_vector([1, 0], "b")
        )
        with pytest.raises(NullBranchError):
            qsim_core.postselect_projector(s, "a", [SQRT_HALF, -SQRT_HALF])


class TestPartialTrace:
    """부분 대각합"""

    def test_product_state_is_pure(self, rng):
        a = _random_state(rng, RegisterLayout.of(("a", 1)))
        b = _random_state(rng, RegisterLayout.of(("b", 2)))
        rho = qsim_core.partial_trace(qsim_core.tensor_product(a, b), "b")
        assert rho.purity() == pytest.approx(1.0)

    def test_bell_pair(self):
        s = qsim_core.allocate_state(RegisterLayout.of(("c", 1), ("t", 1)))
        s = qsim_core.pauli_x(qsim_core.hadamard_all(s, "c"), "t", control=("c", 1))
        rho = qsim_core.partial_trace(s, "t")
        np.testing.assert_allclose(rho.matrix, np.eye(2) / 2, atol=1e-12)

    def test_cannot_trace_everything(self):
        with pytest.raises(RegisterError):
            qsim_core.partial_trace(_plus_state(), "a")

    def test_density_variant_matches(self, rng):
        s = _random_state(rng, RegisterLayout.of(("a", 1), ("b", 2)))
        via_state = qsim_core.partial_trace(s, "a")
        via_density = qsim_core.partial_trace_density(qsim_core.density_from_state(s), "a")
        np.testing.assert_allclose(via_density.matrix, via_state.matrix, atol=1e-12)

    def test_density_matrix_validation(self):
        with pytest.raises(ValidationError):
            DensityMatrix(matrix=np.diag([0.7, 0.7]))


class TestMeasureSamples:
    """Born 샘플링"""

    def test_basis_state_single_bin(self):
        s = qsim_core.encode_vector([0, 0, 1, 0], "q")
        assert qsim_core.measure_samples(s, "q", 500, seed=1) == {2: 500}

    def test_binomial_bound(self):
        counts = qsim_core.measure_samples(_plus_state(), "a", 100_000, seed=11)
        sigma = np.sqrt(100_000 * 0.25)
        assert sum(counts.values()) == 100_000
        for bin_ in (0, 1):
            assert abs(counts[bin_] - 50_000) < 5 * sigma

    def test_deterministic(self):
        a = qsim_core.measure_samples(_plus_state(), "a", 1000, seed=5)
        b = qsim_core.measure_samples(_plus_state(), "a", 1000, seed=5)
        assert a == b

    def test_zero_shots(self):
        with pytest.raises(InvalidInputError):
            qsim_core.measure_samples(_plus_state(), "a", 0, seed=5)

    def test_negative_seed(self):
        with pytest.raises(InvalidInputError, match="64 bits"):
            qsim_core.measure_samples(_plus_state(), "a", 10, seed=-1)


class TestStateToJson:
    """산출물용 상태 덤프"""

    def test_state_dump(self):
        s = qsim_core.encode_vector([1.0, 1j], "q")
        doc = qsim_core.state_to_json(s)
        assert doc["amplitudes"]["real"] == pytest.approx([1 / np.sqrt(2), 0.0])
        assert doc["amplitudes"]["imag"] == pytest.approx([0.0, 1 / np.sqrt(2)])
        assert QuantumState.model_validate(doc).layout.registers == (("q", 1),)

    def test_density_dump(self):
        rho = DensityMatrix.from_state(_plus_state())
        doc = qsim_core.state_to_json(rho)
        np.testing.assert_allclose(doc["matrix"]["real"], np.full((2, 2), 0.5), atol=1e-12)
        np.testing.assert_allclose(DensityMatrix.model_validate(doc).matrix, rho.matrix, atol=1e-12)
