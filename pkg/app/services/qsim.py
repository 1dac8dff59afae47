"""Dense statevector simulator for the gate set the blind protocol needs.

Qubit 0 is the least significant bit of the amplitude index, everywhere:
in this module, in the protocol's register layout and on the wire. A
bitstring is a tuple of 0/1 ints whose entry j belongs to qubit j.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Literal, Sequence

import numpy as np

from app.config import settings
from app.exceptions import EnumerationError, NormalizationError, SizeError

if TYPE_CHECKING:
    from app.services.diaggroup import DiagonalUnitary

logger = logging.getLogger(__name__)

Bits = tuple[int, ...]

NORM_TOLERANCE = 1e-12
DENSITY_TOLERANCE = 1e-10
# Branches at or below this probability carry no post-measurement state.
PROBABILITY_FLOOR = 1e-14

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


def zero_bits(n: int) -> Bits:
    return (0,) * n


def bits_to_int(bits: Sequence[int]) -> int:
    return sum((int(b) & 1) << j for j, b in enumerate(bits))


def int_to_bits(x: int, n: int) -> Bits:
    return tuple((x >> j) & 1 for j in range(n))


def xor_bits(a: Sequence[int], b: Sequence[int]) -> Bits:
    if len(a) != len(b):
        raise SizeError(f"bitstring lengths differ: {len(a)} != {len(b)}")
    return tuple((x ^ y) & 1 for x, y in zip(a, b))


def bits_to_str(bits: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in bits)


def bits_from_str(text: str) -> Bits:
    if not text or set(text) - {"0", "1"}:
        raise ValueError(f"not a bitstring: {text!r}")
    return tuple(int(ch) for ch in text)


@dataclass(frozen=True, eq=False)
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.num_qubits <= settings.MAX_QUBITS:
            raise SizeError(
                f"register of {self.num_qubits} qubits outside 1..{settings.MAX_QUBITS}"
            )
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape != (2**self.num_qubits,):
            raise SizeError(
                f"{amps.size} amplitudes given for {self.num_qubits} qubits"
            )
        if not np.isfinite(amps).all():
            raise NormalizationError("state has non-finite amplitudes")
        norm = float(np.linalg.norm(amps))
        if not abs(norm - 1.0) <= NORM_TOLERANCE:
            raise NormalizationError(f"state norm {norm!r} is not 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amplitudes: Iterable[complex]) -> "StateVector":
        amps = np.asarray(list(amplitudes), dtype=np.complex128)
        n = int(amps.size).bit_length() - 1
        if amps.size < 2 or 2**n != amps.size:
            raise SizeError(f"amplitude count {amps.size} is not a power of two")
        return cls(n, amps)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def computational_distribution(self) -> dict[Bits, float]:
        """Outcome bitstring -> probability, dropping outcomes at the floor."""
        return {
            int_to_bits(x, self.num_qubits): float(p)
            for x, p in enumerate(self.probabilities())
            if p > PROBABILITY_FLOOR
        }


@dataclass(frozen=True)
class MeasurementBranch:
    outcome_bits: Bits
    probability: float
    post_state: StateVector | None


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    num_qubits: int
    entries: np.ndarray

    def __post_init__(self):
        rho = np.array(self.entries, dtype=np.complex128)
        dim = 2**self.num_qubits
        if rho.shape != (dim, dim):
            raise SizeError(f"density matrix shape {rho.shape} for {self.num_qubits} qubits")
        if np.max(np.abs(rho - rho.conj().T)) > DENSITY_TOLERANCE:
            raise NormalizationError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > DENSITY_TOLERANCE:
            raise NormalizationError(f"density matrix trace {np.trace(rho).real!r} is not 1")
        if np.linalg.eigvalsh(rho).min() < -DENSITY_TOLERANCE:
            raise NormalizationError("density matrix is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    @classmethod
    def from_matrix(cls, entries: np.ndarray) -> "DensityMatrix":
        rho = np.asarray(entries)
        n = int(rho.shape[0]).bit_length() - 1
        return cls(n, rho)


def new_plus_state(n: int) -> StateVector:
    if not 1 <= n <= settings.MAX_QUBITS:
        raise SizeError(f"register of {n} qubits outside 1..{settings.MAX_QUBITS}")
    return StateVector(n, np.full(2**n, 2.0 ** (-n / 2), dtype=np.complex128))


def basis_state(n: int, x: int) -> StateVector:
    amps = np.zeros(2**n, dtype=np.complex128)
    amps[x] = 1.0
    return StateVector(n, amps)


def random_state(n: int, rng: np.random.Generator) -> StateVector:
    """Haar-random pure state."""
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return StateVector(n, v / np.linalg.norm(v))


def tensor(states: Sequence[StateVector]) -> StateVector:
    """Tensor product with states[0] on the lowest wires."""
    amps = np.ones(1, dtype=np.complex128)
    for s in states:
        amps = np.kron(s.amplitudes, amps)
    return StateVector(sum(s.num_qubits for s in states), amps)


def _check_qubit(s: StateVector, q: int) -> None:
    if not 0 <= q < s.num_qubits:
        raise SizeError(f"qubit {q} out of range for {s.num_qubits}-qubit register")


def apply_hadamard(s: StateVector, q: int) -> StateVector:
    _check_qubit(s, q)
    psi = s.amplitudes.reshape(2 ** (s.num_qubits - q - 1), 2, 2**q)
    a0, a1 = psi[:, 0, :], psi[:, 1, :]
    out = np.stack((a0 + a1, a0 - a1), axis=1) * _INV_SQRT2
    return StateVector(s.num_qubits, out.reshape(-1))


def apply_hadamard_all(s: StateVector, qubits: Iterable[int]) -> StateVector:
    for q in qubits:
        s = apply_hadamard(s, q)
    return s


def apply_cz(s: StateVector, q1: int, q2: int) -> StateVector:
    _check_qubit(s, q1)
    _check_qubit(s, q2)
    if q1 == q2:
        raise SizeError(f"controlled-Z needs two distinct qubits, got {q1} twice")
    idx = np.arange(2**s.num_qubits)
    both = ((idx >> q1) & (idx >> q2) & 1).astype(bool)
    amps = s.amplitudes.copy()
    amps[both] *= -1
    return StateVector(s.num_qubits, amps)


def apply_pauli(s: StateVector, axis: Literal["X", "Z"], mask: Sequence[int]) -> StateVector:
    if len(mask) != s.num_qubits:
        raise SizeError(f"mask of length {len(mask)} for {s.num_qubits}-qubit register")
    idx = np.arange(2**s.num_qubits)
    if axis == "X":
        amps = s.amplitudes[idx ^ bits_to_int(mask)]
    elif axis == "Z":
        sign = np.ones(idx.size)
        for j, bit in enumerate(mask):
            if bit:
                sign *= 1 - 2 * ((idx >> j) & 1)
        amps = s.amplitudes * sign
    else:
        raise ValueError(f"unknown Pauli axis {axis!r}")
    return StateVector(s.num_qubits, amps)


def apply_diagonal(
    s: StateVector,
    d: "DiagonalUnitary",
    wires: Sequence[int] | None = None,
) -> StateVector:
    """Multiply each amplitude by e^{iθ_x}.

    Without ``wires`` the diagonal must span the whole register; otherwise
    qubit j of the diagonal acts on wire ``wires[j]``.
    """
    if wires is None:
        if d.num_qubits != s.num_qubits:
            raise SizeError(
                f"{d.num_qubits}-qubit diagonal applied to {s.num_qubits}-qubit register"
            )
        wires = range(s.num_qubits)
    wires = tuple(wires)
    if len(wires) != d.num_qubits or len(set(wires)) != len(wires):
        raise SizeError(f"wire map {wires} does not fit a {d.num_qubits}-qubit diagonal")
    for w in wires:
        _check_qubit(s, w)

    idx = np.arange(2**s.num_qubits)
    local = np.zeros_like(idx)
    for j, w in enumerate(wires):
        local |= ((idx >> w) & 1) << j
    phases = d.full_phase_vector()[local]
    return StateVector(s.num_qubits, s.amplitudes * np.exp(1j * phases))


def _measurement_table(s: StateVector, qubits: Sequence[int]):
    qubits = tuple(qubits)
    if not qubits or len(set(qubits)) != len(qubits):
        raise SizeError(f"invalid measurement qubit set {qubits}")
    for q in qubits:
        _check_qubit(s, q)
    rotated = apply_hadamard_all(s, qubits)
    idx = np.arange(2**s.num_qubits)
    keys = np.zeros_like(idx)
    for j, q in enumerate(qubits):
        keys |= ((idx >> q) & 1) << j
    probs = np.bincount(keys, weights=rotated.probabilities(), minlength=2 ** len(qubits))
    return rotated, keys, probs


def _branch(
    rotated: StateVector, keys: np.ndarray, probs: np.ndarray, qubits: Sequence[int], outcome: int
) -> MeasurementBranch:
    p = float(probs[outcome])
    remaining = rotated.num_qubits - len(qubits)
    post = None
    if p > PROBABILITY_FLOOR and remaining > 0:
        # Selected indices keep ascending order, so the surviving wires do too.
        post = StateVector(remaining, rotated.amplitudes[keys == outcome] / np.sqrt(p))
    return MeasurementBranch(int_to_bits(outcome, len(qubits)), p, post)


def enumerate_hadamard_measurement(s: StateVector, qubits: Sequence[int]) -> list[MeasurementBranch]:
    """Every outcome of measuring ``qubits`` in the {|+>, |->} basis, |+> -> 0.

    Post-states cover the unmeasured wires in ascending order.
    """
    if 2 ** len(qubits) > settings.BRANCH_CAP:
        raise EnumerationError(
            f"{2 ** len(qubits)} branches exceed the enumeration cap {settings.BRANCH_CAP}"
        )
    rotated, keys, probs = _measurement_table(s, qubits)
    return [_branch(rotated, keys, probs, qubits, x) for x in range(probs.size)]


def sample_hadamard_measurement(
    s: StateVector, qubits: Sequence[int], rng: np.random.Generator
) -> MeasurementBranch:
    rotated, keys, probs = _measurement_table(s, qubits)
    weights = np.where(probs > PROBABILITY_FLOOR, probs, 0.0)
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    outcome = min(int(np.searchsorted(cdf, rng.random(), side="right")), probs.size - 1)
    return _branch(rotated, keys, probs, qubits, outcome)


def density_from_ensemble(states: Sequence[tuple[StateVector, float]]) -> DensityMatrix:
    if not states:
        raise NormalizationError("empty ensemble")
    weights = np.array([w for _, w in states], dtype=float)
    if (weights < 0).any() or abs(weights.sum() - 1.0) > DENSITY_TOLERANCE:
        raise NormalizationError(f"ensemble weights sum to {weights.sum()!r}, not 1")
    n = states[0][0].num_qubits
    if any(s.num_qubits != n for s, _ in states):
        raise SizeError("ensemble members differ in register size")
    amps = np.stack([s.amplitudes for s, _ in states])
    rho = (amps.T * weights) @ amps.conj()
    return DensityMatrix(n, rho)


def fidelity_up_to_global_phase(a: StateVector, b: StateVector) -> float:
    if a.num_qubits != b.num_qubits:
        raise SizeError(f"cannot compare {a.num_qubits}- and {b.num_qubits}-qubit states")
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    eigvals = np.linalg.eigvalsh(np.asarray(rho) - np.asarray(sigma))
    return float(0.5 * np.sum(np.abs(eigvals)))


def trace_distance_to_maximally_mixed(rho: DensityMatrix | np.ndarray) -> float:
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix.from_matrix(rho)
    dim = 2**rho.num_qubits
    return trace_distance(rho.entries, np.eye(dim) / dim)


def state_fingerprint(s: StateVector) -> str:
    """Digest of a state with its global phase removed."""
    amps = s.amplitudes
    anchor = amps[int(np.argmax(np.abs(amps)))]
    canonical = amps * (abs(anchor) / anchor)
    rounded = np.round(np.stack((canonical.real, canonical.imag)), 10) + 0.0
    return hashlib.sha256(rounded.tobytes()).hexdigest()[:16]
