import numpy as np
import pytest

from app.exceptions import ConfigError, EnumerationError
from app.schemas.subgroup import SubgroupSpec
from app.services.analyzer import (
    cross_layer_correlation,
    dropped_dependency_correction,
    reference_output,
    run_negative_controls,
    teleportation_identity_check,
    total_variation,
    translation_invariance,
    unmasked_instruction,
    unpadded_prepare_layer,
    verify_blindness_exhaustive,
    verify_blindness_sampled,
    verify_correctness,
)
from app.services.diaggroup import controlled_z, from_phases, identity, sample_uniform, z_rotation
from app.services.protocol import Computation, OutputMode
from app.services.qsim import (
    apply_cz,
    apply_hadamard,
    apply_pauli,
    basis_state,
    enumerate_hadamard_measurement,
    fidelity_up_to_global_phase,
    new_plus_state,
    tensor,
)

PI = np.pi


def test_reference_examples():
    one = reference_output(Computation.identity(1, 1))
    np.testing.assert_allclose(one.state.amplitudes, [1, 0], atol=1e-15)
    assert one.classical_distribution == pytest.approx({(0,): 1.0})

    two = reference_output(Computation.identity(1, 2))
    np.testing.assert_allclose(two.state.amplitudes, new_plus_state(1).amplitudes)
    assert two.classical_distribution == pytest.approx({(0,): 0.5, (1,): 0.5})

    s_gate = reference_output(Computation(1, 1, (from_phases(1, 1, [[0, PI / 2]]),)))
    np.testing.assert_allclose(s_gate.state.amplitudes, [0.5 + 0.5j, 0.5 - 0.5j])
    assert s_gate.classical_distribution == pytest.approx({(0,): 0.5, (1,): 0.5})


def test_total_variation():
    assert total_variation({(0,): 1.0}, {(0,): 1.0}) == 0.0
    assert total_variation({(0,): 1.0}, {(1,): 1.0}) == 1.0
    assert total_variation({(0,): 0.5, (1,): 0.5}, {(0,): 1.0}) == pytest.approx(0.5)


@pytest.mark.parametrize("mode", [OutputMode.CLASSICAL, OutputMode.QUANTUM])
def test_correctness_identity(rng, q8, mode):
    comp = Computation.identity(1, 1, output_mode=mode)
    report = verify_correctness(comp, q8, 100, rng)
    assert report.passed
    assert report.mode == "exhaustive"
    if mode is OutputMode.QUANTUM:
        assert report.worst_fidelity_deficit < 1e-9
    else:
        assert report.worst_total_variation < 1e-9


@pytest.mark.parametrize("mode", [OutputMode.CLASSICAL, OutputMode.QUANTUM])
def test_correctness_random_q8_layers(rng, q8, mode):
    comp = Computation.random(2, 2, q8, rng, mode)
    report = verify_correctness(comp, q8, 20, rng)
    assert report.passed
    assert report.branches_checked > 0


@pytest.mark.parametrize("q", [2, 8])
@pytest.mark.parametrize("mode", [OutputMode.CLASSICAL, OutputMode.QUANTUM])
@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("n", [1, 2])
def test_correctness_sweep(rng, n, m, mode, q):
    spec = SubgroupSpec(kind="discrete", block_size=1, order=q)
    comp = Computation.random(n, m, spec, rng, mode)
    report = verify_correctness(comp, spec, 100, rng)
    assert report.passed
    assert report.mode == "exhaustive"


def test_correctness_on_the_torus(rng, torus):
    comp = Computation.random(2, 3, torus, rng, OutputMode.QUANTUM)
    assert verify_correctness(comp, torus, 10, rng).passed


def test_correctness_with_block_layers(rng):
    spec = SubgroupSpec(kind="discrete", block_size=2, order=4)
    comp = Computation.random(2, 3, spec, rng)
    assert verify_correctness(comp, spec, 10, rng).passed


def test_dropped_dependency_is_caught(rng, q8):
    layer = z_rotation(1, 1, 0, PI / 4)
    comp = Computation(1, 4, (layer,) * 4, OutputMode.QUANTUM)
    report = verify_correctness(comp, q8, 10, rng, dropped_dependency_correction)
    assert not report.passed
    assert verify_correctness(comp, q8, 10, rng).passed


def test_correctness_falls_back_to_sampling(rng, q8, monkeypatch):
    from app.config import settings

    monkeypatch.setattr(settings, "BRANCH_CAP", 1)
    classical = verify_correctness(Computation.identity(1, 1), q8, 3, rng)
    assert classical.mode == "sampled"
    assert classical.passed
    assert classical.worst_total_variation < 1e-9
    quantum = verify_correctness(Computation.identity(1, 2, output_mode=OutputMode.QUANTUM), q8, 3, rng)
    assert quantum.mode == "sampled"
    assert quantum.passed


def test_correctness_needs_keys(rng, q8):
    with pytest.raises(ConfigError):
        verify_correctness(Computation.identity(1, 1), q8, 0, rng)


def test_exhaustive_blindness_z_group(q2):
    report = verify_blindness_exhaustive(q2, 1, (identity(1), z_rotation(1, 1, 0, PI)))
    assert report.passed
    assert report.state_trace_distance == pytest.approx(0.0, abs=1e-12)
    assert report.instruction_distribution_deviation == 0.0
    assert report.enumeration_size == 4
    assert report.translation_invariant


def test_exhaustive_blindness_q8_pair(q8):
    pair = (from_phases(1, 1, [[0, PI / 4]]), from_phases(1, 1, [[0, 3 * PI / 2]]))
    report = verify_blindness_exhaustive(q8, 1, pair)
    assert report.passed
    assert report.instruction_distribution_deviation == 0.0


def test_exhaustive_blindness_two_qubits(q8, rng):
    pair = (sample_uniform(q8, 2, rng), sample_uniform(q8, 2, rng))
    report = verify_blindness_exhaustive(q8, 2, pair)
    assert report.passed
    assert report.enumeration_size == 64 * 4


def test_exhaustive_blindness_blocks(rng):
    spec = SubgroupSpec(kind="discrete", block_size=2, order=4)
    pair = (sample_uniform(spec, 2, rng), identity(2, 2))
    assert verify_blindness_exhaustive(spec, 2, pair).passed


@pytest.mark.parametrize(
    "first, second",
    [
        ([[0, 0]], [[0, PI]]),
        ([[0, PI / 4]], [[0, 7 * PI / 4]]),
        ([[0, PI / 2]], [[0, 3 * PI / 2]]),
        ([[0, 0]], [[0, PI / 4]]),
        ([[0, 3 * PI / 4]], [[0, 5 * PI / 4]]),
        ([[0, 0], [0, 0]], [[0, PI], [0, PI]]),
        ([[0, PI / 4], [0, 0]], [[0, 0], [0, PI / 4]]),
        ([[0, PI / 2], [0, PI]], [[0, 3 * PI / 2], [0, 0]]),
        ([[0, 7 * PI / 4], [0, 7 * PI / 4]], [[0, PI / 4], [0, PI / 4]]),
        ([[0, PI], [0, 0]], [[0, 0], [0, PI]]),
    ],
)
def test_exhaustive_blindness_distinguishable_pairs(q8, first, second):
    n = len(first)
    report = verify_blindness_exhaustive(q8, n, (from_phases(n, 1, first), from_phases(n, 1, second)))
    assert report.passed
    assert report.state_trace_distance < 1e-12
    assert report.instruction_distribution_deviation == 0.0


def test_exhaustive_blindness_hides_controlled_z():
    spec = SubgroupSpec(kind="discrete", block_size=2, order=2)
    assert verify_blindness_exhaustive(spec, 2, (identity(2, 2), controlled_z(2, 2, 0, 1))).passed


def test_missing_pad_leaks_the_rotation(q8):
    pair = (z_rotation(1, 1, 0, PI / 4), z_rotation(1, 1, 0, 3 * PI / 2))
    report = verify_blindness_exhaustive(q8, 1, pair, prepare=unpadded_prepare_layer)
    assert not report.passed
    assert report.state_trace_distance == pytest.approx(0.5)
    assert report.instruction_distribution_deviation == 0.0


def test_unmasked_instruction_leaks_the_layer(q8, torus, rng):
    pair = (z_rotation(1, 1, 0, PI / 4), z_rotation(1, 1, 0, 3 * PI / 2))
    report = verify_blindness_exhaustive(q8, 1, pair, instruct=unmasked_instruction)
    assert not report.passed
    assert report.instruction_distribution_deviation == 1.0
    assert report.state_trace_distance == pytest.approx(0.0, abs=1e-12)
    sampled = verify_blindness_sampled(
        torus, 1, (identity(1), z_rotation(1, 1, 0, 1.0)), 5_000, rng, instruct=unmasked_instruction
    )
    assert not sampled.passed
    assert sampled.ks_min_p_value < sampled.instruction_threshold


def test_exhaustive_blindness_refusals(q8, torus):
    with pytest.raises(EnumerationError):
        verify_blindness_exhaustive(torus, 1, (identity(1), identity(1)))
    with pytest.raises(ConfigError):
        verify_blindness_exhaustive(q8, 1, (identity(1), from_phases(1, 1, [[0, 0.3]])))
    with pytest.raises(ConfigError):
        verify_blindness_exhaustive(q8, 1, (identity(1),))


def test_translation_invariance(q8, q2):
    assert translation_invariance(q8, 1)
    assert translation_invariance(q2, 2)


def test_sampled_blindness_one_qubit(torus, rng):
    report = verify_blindness_sampled(torus, 1, (identity(1), z_rotation(1, 1, 0, PI)), 20_000, rng)
    assert report.passed
    assert report.state_trace_distance < report.state_threshold
    assert not report.cross_layer_flagged


def test_sampled_blindness_two_qubits(torus, rng):
    pair = (sample_uniform(torus, 2, rng), sample_uniform(torus, 2, rng))
    report = verify_blindness_sampled(torus, 2, pair, 20_000, rng)
    assert report.passed
    assert report.sample_count == 20_000


@pytest.mark.parametrize("n", [1, 2])
def test_sampled_blindness_at_full_sample_count(torus, rng, n):
    pair = (sample_uniform(torus, n, rng), sample_uniform(torus, n, rng))
    report = verify_blindness_sampled(torus, n, pair, 100_000, rng)
    assert report.passed
    assert report.state_trace_distance < report.state_threshold
    assert report.ks_min_p_value > report.instruction_threshold
    assert not report.cross_layer_flagged


def test_reused_secret_is_flagged_across_layers(torus, rng):
    pair = (identity(1), z_rotation(1, 1, 0, 1.0))
    report = verify_blindness_sampled(torus, 1, pair, 5_000, rng, reuse_secret=True)
    assert report.cross_layer_flagged
    assert report.cross_layer_resultant == pytest.approx(1.0)
    resultant, flagged = cross_layer_correlation(torus, 1, pair, 5_000, rng)
    assert not flagged
    assert resultant < 5 / np.sqrt(5_000)


def test_sampled_blindness_refusals(q8, torus, rng):
    pair = (identity(1), identity(1))
    with pytest.raises(ConfigError, match="continuous"):
        verify_blindness_sampled(q8, 1, pair, 5_000, rng)
    with pytest.raises(ConfigError, match="samples"):
        verify_blindness_sampled(torus, 1, pair, 100, rng)


@pytest.mark.parametrize("phi", [basis_state(1, 0), basis_state(1, 1)])
def test_teleportation_branches(phi):
    entangled = apply_cz(tensor([phi, new_plus_state(1)]), 0, 1)
    for branch in enumerate_hadamard_measurement(entangled, [0]):
        assert branch.probability == pytest.approx(0.5)
        expected = apply_pauli(apply_hadamard(phi, 0), "X", branch.outcome_bits)
        assert fidelity_up_to_global_phase(branch.post_state, expected) == pytest.approx(1.0)


def test_teleportation_of_zero_gives_plus():
    entangled = apply_cz(tensor([basis_state(1, 0), new_plus_state(1)]), 0, 1)
    for branch in enumerate_hadamard_measurement(entangled, [0]):
        assert fidelity_up_to_global_phase(branch.post_state, new_plus_state(1)) == pytest.approx(1.0)


def test_teleportation_identity_check(rng):
    report = teleportation_identity_check(50, rng)
    assert report.passed
    assert report.branches_checked == 100
    assert report.worst_fidelity >= 1 - 1e-10


def test_negative_controls(rng):
    report = run_negative_controls(rng)
    assert report.passed
    assert len(report.checks) == 4
    assert all(check.failed_as_expected for check in report.checks)


def test_dropped_dependency_rule():
    history = {1: (1,), 2: (0,), 3: (0,)}
    assert dropped_dependency_correction(1, history, 1) == (0,)
    assert dropped_dependency_correction(4, history, 1) == (0,)
