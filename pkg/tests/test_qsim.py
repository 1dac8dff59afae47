import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from app.exceptions import EnumerationError, NormalizationError, SizeError
from app.services.diaggroup import from_phases, from_turns
from app.services.qsim import (
    StateVector,
    apply_cz,
    apply_diagonal,
    apply_hadamard,
    apply_hadamard_all,
    apply_pauli,
    basis_state,
    bits_from_str,
    bits_to_int,
    bits_to_str,
    density_from_ensemble,
    enumerate_hadamard_measurement,
    fidelity_up_to_global_phase,
    int_to_bits,
    new_plus_state,
    random_state,
    sample_hadamard_measurement,
    state_fingerprint,
    tensor,
    trace_distance_to_maximally_mixed,
    xor_bits,
)

S = 1 / np.sqrt(2)


def minus_state():
    return StateVector(1, [S, -S])


def test_bit_order_is_little_endian():
    assert int_to_bits(6, 3) == (0, 1, 1)
    assert bits_to_int((1, 0, 1)) == 5


def test_xor_and_text_forms():
    assert xor_bits((1, 0, 1), (0, 1, 1)) == (1, 1, 0)
    assert bits_to_str((1, 1, 0)) == "110"
    assert bits_from_str("011") == (0, 1, 1)
    with pytest.raises(SizeError):
        xor_bits((1,), (1, 0))
    with pytest.raises(ValueError):
        bits_from_str("012")


@pytest.mark.parametrize("n, amp", [(1, S), (2, 0.5), (3, 2**-1.5)])
def test_new_plus_state(n, amp):
    s = new_plus_state(n)
    assert s.num_qubits == n
    np.testing.assert_allclose(s.amplitudes, np.full(2**n, amp))


@pytest.mark.parametrize("n", [0, 13])
def test_new_plus_state_rejects_out_of_range(n):
    with pytest.raises(SizeError):
        new_plus_state(n)


def test_state_validation():
    with pytest.raises(SizeError):
        StateVector(2, [1, 0])
    with pytest.raises(NormalizationError):
        StateVector(1, [1, 1])
    with pytest.raises(NormalizationError, match="non-finite"):
        StateVector(1, [np.nan, 0])
    with pytest.raises(NormalizationError):
        StateVector(1, [np.inf, 0])
    s = StateVector.from_amplitudes([0, 0, 1, 0])
    assert s.num_qubits == 2
    with pytest.raises(ValueError):
        s.amplitudes[0] = 1


def test_tensor_puts_first_state_on_low_wires():
    s = tensor([basis_state(1, 1), basis_state(1, 0)])
    assert s.computational_distribution() == {(1, 0): 1.0}


def test_hadamard_examples():
    np.testing.assert_allclose(apply_hadamard(basis_state(1, 0), 0).amplitudes, [S, S])
    np.testing.assert_allclose(apply_hadamard(new_plus_state(1), 0).amplitudes, [1, 0], atol=1e-15)
    both = apply_hadamard_all(basis_state(2, 0), [0, 1])
    np.testing.assert_allclose(both.amplitudes, [0.5] * 4)


def test_hadamard_index_out_of_range():
    with pytest.raises(SizeError):
        apply_hadamard(new_plus_state(2), 2)


def test_cz_examples():
    np.testing.assert_allclose(apply_cz(basis_state(2, 3), 0, 1).amplitudes, [0, 0, 0, -1])
    plus2 = new_plus_state(2)
    np.testing.assert_allclose(apply_cz(plus2, 0, 1).amplitudes, [0.5, 0.5, 0.5, -0.5])
    np.testing.assert_array_equal(apply_cz(apply_cz(plus2, 0, 1), 0, 1).amplitudes, plus2.amplitudes)
    with pytest.raises(SizeError):
        apply_cz(plus2, 1, 1)


def test_pauli_examples():
    np.testing.assert_allclose(apply_pauli(new_plus_state(1), "Z", (1,)).amplitudes, [S, -S])
    plus2 = new_plus_state(2)
    np.testing.assert_array_equal(apply_pauli(plus2, "X", (0, 0)).amplitudes, plus2.amplitudes)
    np.testing.assert_allclose(apply_pauli(plus2, "Z", (1, 1)).amplitudes, [0.5, -0.5, -0.5, 0.5])
    with pytest.raises(SizeError):
        apply_pauli(plus2, "X", (1,))


def test_diagonal_examples():
    plus = new_plus_state(1)
    np.testing.assert_allclose(apply_diagonal(plus, from_turns(1, 1, [0, 0])).amplitudes, plus.amplitudes)
    np.testing.assert_allclose(apply_diagonal(plus, from_phases(1, 1, [[0, np.pi]])).amplitudes, [S, -S])
    np.testing.assert_allclose(
        apply_diagonal(plus, from_phases(1, 1, [[0, np.pi / 4]])).amplitudes, [S, 0.5 + 0.5j]
    )
    with pytest.raises(SizeError):
        apply_diagonal(new_plus_state(2), from_turns(1, 1, [0, 0]))


def test_diagonal_on_wire_subset():
    d = from_phases(1, 1, [[0, np.pi]])
    s = apply_diagonal(new_plus_state(2), d, wires=[1])
    np.testing.assert_allclose(s.amplitudes, [0.5, 0.5, -0.5, -0.5])


@hyp_settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
def test_unitaries_preserve_norm(seed, n):
    rng = np.random.default_rng(seed)
    s = random_state(n, rng)
    d = from_turns(n, 1, rng.random((n, 2)))
    for out in (
        apply_hadamard(s, n - 1),
        apply_diagonal(s, d),
        apply_pauli(s, "X", tuple(rng.integers(0, 2, n))),
    ):
        assert abs(np.linalg.norm(out.amplitudes) - 1) < 1e-12


@hyp_settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_diagonal_commutes_with_cz(seed):
    rng = np.random.default_rng(seed)
    s = random_state(3, rng)
    d = from_turns(3, 1, rng.random((3, 2)))
    a = apply_cz(apply_diagonal(s, d), 0, 2)
    b = apply_diagonal(apply_cz(s, 0, 2), d)
    np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-12)


def test_hadamard_twice_is_identity(rng):
    s = random_state(3, rng)
    np.testing.assert_allclose(apply_hadamard(apply_hadamard(s, 1), 1).amplitudes, s.amplitudes, atol=1e-12)


def test_measure_plus_is_deterministic():
    branches = enumerate_hadamard_measurement(new_plus_state(1), [0])
    assert [b.outcome_bits for b in branches] == [(0,), (1,)]
    assert branches[0].probability == pytest.approx(1.0)
    assert branches[1].probability == pytest.approx(0.0, abs=1e-15)
    assert branches[0].post_state is None  # nothing left unmeasured


def test_measure_zero_is_uniform():
    branches = enumerate_hadamard_measurement(basis_state(1, 0), [0])
    assert [b.probability for b in branches] == pytest.approx([0.5, 0.5])


def test_measure_cluster_pair():
    state = apply_cz(new_plus_state(2), 0, 1)
    branches = enumerate_hadamard_measurement(state, [0, 1])
    assert [b.probability for b in branches] == pytest.approx([0.25] * 4)


def test_partial_measurement_keeps_remaining_wires():
    state = tensor([new_plus_state(1), basis_state(1, 1)])
    branches = enumerate_hadamard_measurement(state, [0])
    assert branches[0].probability == pytest.approx(1.0)
    assert branches[0].post_state.computational_distribution() == pytest.approx({(1,): 1.0})
    assert branches[1].post_state is None


def test_branch_cap(monkeypatch):
    from app.config import settings

    monkeypatch.setattr(settings, "BRANCH_CAP", 2)
    with pytest.raises(EnumerationError):
        enumerate_hadamard_measurement(new_plus_state(2), [0, 1])


def test_sampling_examples():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        assert sample_hadamard_measurement(new_plus_state(1), [0], rng).outcome_bits == (0,)
        assert sample_hadamard_measurement(minus_state(), [0], rng).outcome_bits == (1,)
    first = sample_hadamard_measurement(basis_state(1, 0), [0], np.random.default_rng(7))
    again = sample_hadamard_measurement(basis_state(1, 0), [0], np.random.default_rng(7))
    assert first.outcome_bits == again.outcome_bits


def test_sampling_matches_enumeration(rng):
    state = apply_cz(apply_diagonal(new_plus_state(2), from_phases(2, 1, [[0, 0.3], [0, 1.1]])), 0, 1)
    expected = {b.outcome_bits: b.probability for b in enumerate_hadamard_measurement(state, [0, 1])}
    draws = 10_000
    counts = {}
    for _ in range(draws):
        bits = sample_hadamard_measurement(state, [0, 1], rng).outcome_bits
        counts[bits] = counts.get(bits, 0) + 1
    for bits, p in expected.items():
        sigma = np.sqrt(p * (1 - p) / draws)
        assert abs(counts.get(bits, 0) / draws - p) <= 5 * sigma + 1e-12


@hyp_settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_branch_probabilities_sum_to_one(seed):
    s = random_state(3, np.random.default_rng(seed))
    assert sum(b.probability for b in enumerate_hadamard_measurement(s, [0, 2])) == pytest.approx(1.0, abs=1e-10)


def test_density_from_ensemble():
    plus, minus = new_plus_state(1), minus_state()
    np.testing.assert_allclose(density_from_ensemble([(plus, 1.0)]).entries, [[0.5, 0.5], [0.5, 0.5]])
    np.testing.assert_allclose(density_from_ensemble([(plus, 0.5), (minus, 0.5)]).entries, np.eye(2) / 2, atol=1e-15)
    np.testing.assert_allclose(
        density_from_ensemble([(basis_state(1, 0), 0.5), (basis_state(1, 1), 0.5)]).entries, np.eye(2) / 2
    )
    with pytest.raises(NormalizationError):
        density_from_ensemble([(plus, 0.7)])


def test_fidelity_examples(rng):
    psi = random_state(2, rng)
    rotated = StateVector(2, psi.amplitudes * np.exp(0.7j))
    assert fidelity_up_to_global_phase(psi, rotated) == pytest.approx(1.0)
    assert fidelity_up_to_global_phase(basis_state(1, 0), basis_state(1, 1)) == 0.0
    assert fidelity_up_to_global_phase(basis_state(1, 0), new_plus_state(1)) == pytest.approx(0.5)
    with pytest.raises(SizeError):
        fidelity_up_to_global_phase(basis_state(1, 0), new_plus_state(2))


def test_trace_distance_examples():
    assert trace_distance_to_maximally_mixed(np.eye(4) / 4) == pytest.approx(0.0, abs=1e-15)
    pure1 = density_from_ensemble([(new_plus_state(1), 1.0)])
    assert trace_distance_to_maximally_mixed(pure1) == pytest.approx(0.5)
    pure2 = density_from_ensemble([(basis_state(2, 1), 1.0)])
    assert trace_distance_to_maximally_mixed(pure2) == pytest.approx(0.75)
    with pytest.raises(NormalizationError):
        trace_distance_to_maximally_mixed(np.array([[0.5, 1.0], [0.0, 0.5]]))


def test_fingerprint_ignores_global_phase(rng):
    psi = random_state(2, rng)
    assert state_fingerprint(psi) == state_fingerprint(StateVector(2, psi.amplitudes * -1j))
    assert state_fingerprint(psi) != state_fingerprint(random_state(2, rng))
