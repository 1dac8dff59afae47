"""Algebra of the diagonal-unitary group used for secrets and hidden layers.

An element is a tensor product of n/k diagonal unitaries on k-qubit
blocks. Each block is a vector of 2^k phases stored in turns (fractions of
a full 2π turn) in [0, 1); entry 0 of every block is fixed to zero, which
absorbs the global phase. Dyadic lattices (order a power of two) are
therefore represented exactly and their arithmetic is exact.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from app.config import settings
from app.exceptions import ConfigError, EnumerationError, SizeError
from app.schemas.reports import ClosureReport
from app.schemas.subgroup import SubgroupSpec
from app.services.qsim import Bits, bits_to_int, int_to_bits

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
LATTICE_TOLERANCE = 1e-9


def check_block_size(n: int, k: int) -> None:
    if k < 1 or n < 1 or n % k:
        raise ConfigError(f"n must be a multiple of k (n={n}, k={k})", key="subgroup.block_size")


@dataclass(frozen=True, eq=False)
class DiagonalUnitary:
    num_qubits: int
    block_size: int
    turns: np.ndarray

    def __post_init__(self):
        check_block_size(self.num_qubits, self.block_size)
        shape = (self.num_qubits // self.block_size, 2**self.block_size)
        t = np.array(self.turns, dtype=float).reshape(-1)
        if t.size != shape[0] * shape[1]:
            raise SizeError(f"{t.size} phases given, {shape[0] * shape[1]} expected")
        if not np.isfinite(t).all():
            raise ConfigError("phases must be finite", key="phases")
        t = t.reshape(shape)
        t = np.mod(t - t[:, :1], 1.0)
        t[t >= 1.0] = 0.0
        t.setflags(write=False)
        object.__setattr__(self, "turns", t)

    @property
    def block_count(self) -> int:
        return self.turns.shape[0]

    @property
    def phases(self) -> np.ndarray:
        """Block phases in radians, shape (n/k, 2^k)."""
        return self.turns * TWO_PI

    @property
    def blocks(self) -> tuple[np.ndarray, ...]:
        return tuple(self.phases)

    def __eq__(self, other):
        if not isinstance(other, DiagonalUnitary):
            return NotImplemented
        return (
            self.num_qubits == other.num_qubits
            and self.block_size == other.block_size
            and np.array_equal(self.turns, other.turns)
        )

    def __hash__(self):
        return hash((self.num_qubits, self.block_size, self.turns.tobytes()))

    def __repr__(self):
        blocks = ", ".join(
            "(" + ", ".join(f"{p:.6g}" for p in block) + ")" for block in self.phases
        )
        return f"DiagonalUnitary(n={self.num_qubits}, k={self.block_size}, [{blocks}])"

    def allclose(self, other: "DiagonalUnitary", atol: float = 1e-12) -> bool:
        """Equality of canonical forms up to ``atol`` turns, modulo a full turn."""
        if (self.num_qubits, self.block_size) != (other.num_qubits, other.block_size):
            return False
        gap = np.mod(self.turns - other.turns, 1.0)
        return bool(np.all(np.minimum(gap, 1.0 - gap) <= atol))

    def full_phase_vector(self) -> np.ndarray:
        """Radian phase of every basis state of the whole register."""
        idx = np.arange(2**self.num_qubits)
        mask = 2**self.block_size - 1
        total = np.zeros(idx.size)
        for b, block in enumerate(self.phases):
            total += block[(idx >> (b * self.block_size)) & mask]
        return total

    def to_matrix(self) -> np.ndarray:
        return np.diag(np.exp(1j * self.full_phase_vector()))


def from_turns(n: int, k: int, turns) -> DiagonalUnitary:
    return DiagonalUnitary(n, k, np.asarray(turns, dtype=float))


def from_phases(n: int, k: int, blocks) -> DiagonalUnitary:
    """Build from radian phases, one sequence of 2^k entries per block."""
    return DiagonalUnitary(n, k, np.asarray(blocks, dtype=float) / TWO_PI)


def identity(n: int, k: int = 1) -> DiagonalUnitary:
    check_block_size(n, k)
    return DiagonalUnitary(n, k, np.zeros((n // k, 2**k)))


def z_rotation(n: int, k: int, qubit: int, theta: float) -> DiagonalUnitary:
    """diag(1, e^{iθ}) on one qubit."""
    check_block_size(n, k)
    if not 0 <= qubit < n:
        raise SizeError(f"qubit {qubit} out of range for {n} qubits")
    turns = np.zeros((n // k, 2**k))
    local = np.arange(2**k)
    turns[qubit // k] = ((local >> (qubit % k)) & 1) * (theta / TWO_PI)
    return DiagonalUnitary(n, k, turns)


def controlled_z(n: int, k: int, q1: int, q2: int) -> DiagonalUnitary:
    """Controlled-Z between two qubits of the same block."""
    check_block_size(n, k)
    if q1 == q2 or not (0 <= q1 < n and 0 <= q2 < n) or q1 // k != q2 // k:
        raise SizeError(f"controlled-Z on ({q1}, {q2}) must stay inside one {k}-qubit block")
    turns = np.zeros((n // k, 2**k))
    local = np.arange(2**k)
    turns[q1 // k] = ((local >> (q1 % k)) & (local >> (q2 % k)) & 1) * 0.5
    return DiagonalUnitary(n, k, turns)


def _check_same_shape(a: DiagonalUnitary, b: DiagonalUnitary) -> None:
    if (a.num_qubits, a.block_size) != (b.num_qubits, b.block_size):
        raise SizeError(
            f"shape mismatch: (n={a.num_qubits}, k={a.block_size}) vs "
            f"(n={b.num_qubits}, k={b.block_size})"
        )


def multiply(a: DiagonalUnitary, b: DiagonalUnitary) -> DiagonalUnitary:
    _check_same_shape(a, b)
    return DiagonalUnitary(a.num_qubits, a.block_size, a.turns + b.turns)


def dagger(d: DiagonalUnitary) -> DiagonalUnitary:
    return DiagonalUnitary(d.num_qubits, d.block_size, -d.turns)


def x_conjugate(d: DiagonalUnitary, c: Sequence[int]) -> DiagonalUnitary:
    """X^c · d · X^c, with the induced global phase absorbed."""
    if len(c) != d.num_qubits:
        raise SizeError(f"X string of length {len(c)} for {d.num_qubits} qubits")
    k = d.block_size
    local = np.arange(2**k)
    rows = [
        block[local ^ bits_to_int(c[b * k : (b + 1) * k])]
        for b, block in enumerate(d.turns)
    ]
    return DiagonalUnitary(d.num_qubits, k, np.stack(rows))


def lattice_key(d: DiagonalUnitary, q: int) -> tuple[int, ...] | None:
    """Integer lattice coordinates of ``d`` for order ``q``, or None if off-lattice."""
    scaled = d.turns * q
    ints = np.rint(scaled)
    if np.max(np.abs(scaled - ints)) > LATTICE_TOLERANCE:
        return None
    return tuple(int(v) % q for v in ints.reshape(-1))


def free_coordinates(keys: Sequence[tuple[int, ...]], n: int, k: int) -> np.ndarray:
    """Lattice keys without the fixed entry 0 of each block, shape (len(keys), (n/k)(2^k - 1))."""
    coords = np.asarray(keys, dtype=np.int64).reshape(len(keys), n // k, 2**k)[:, :, 1:]
    return coords.reshape(len(keys), -1)


def code_weights(width: int, q: int) -> np.ndarray:
    """Base-q place values packing ``width`` free coordinates into one int64."""
    if width * np.log2(q) >= 62:
        raise EnumerationError(f"{width} coordinates of order {q} do not fit a packed code")
    return q ** np.arange(width, dtype=np.int64)


def is_member(spec: SubgroupSpec, d: DiagonalUnitary) -> bool:
    if d.block_size != spec.block_size:
        return False
    return not spec.is_discrete or lattice_key(d, spec.order) is not None


def sample_uniform_turns(
    spec: SubgroupSpec, n: int, rng: np.random.Generator, size: int
) -> np.ndarray:
    """``size`` independent canonical draws as turns, shape (size, n/k, 2^k)."""
    check_block_size(n, spec.block_size)
    shape = (size, n // spec.block_size, 2**spec.block_size - 1)
    if spec.is_discrete:
        free = rng.integers(0, spec.order, size=shape) / spec.order
    else:
        free = rng.random(shape)
    return np.concatenate((np.zeros(shape[:2] + (1,)), free), axis=2)


def sample_uniform(spec: SubgroupSpec, n: int, rng: np.random.Generator) -> DiagonalUnitary:
    """Draw every free phase independently: Haar on the torus, or uniform on the lattice."""
    return DiagonalUnitary(n, spec.block_size, sample_uniform_turns(spec, n, rng, 1)[0])


def subgroup_size(spec: SubgroupSpec, n: int) -> int:
    if not spec.is_discrete:
        raise EnumerationError("a continuous subgroup cannot be enumerated")
    check_block_size(n, spec.block_size)
    return spec.order ** spec.free_phases(n)


def enumerate_subgroup(spec: SubgroupSpec, n: int) -> list[DiagonalUnitary]:
    size = subgroup_size(spec, n)
    if size > settings.SUBGROUP_CAP:
        raise EnumerationError(
            f"subgroup of {size} elements exceeds the enumeration cap {settings.SUBGROUP_CAP}"
        )
    k, q = spec.block_size, spec.order
    blocks = n // k
    elements = []
    for coords in itertools.product(range(q), repeat=spec.free_phases(n)):
        free = np.asarray(coords, dtype=float).reshape(blocks, 2**k - 1) / q
        elements.append(DiagonalUnitary(n, k, np.hstack((np.zeros((blocks, 1)), free))))
    return elements


def check_closure(elements: Sequence[DiagonalUnitary], q: int) -> ClosureReport:
    """Closure of an explicit element set under multiply, dagger and every X conjugation."""
    if not elements:
        return ClosureReport(closed=False, element_count=0, checks_run=0, counterexample="empty set")
    n, k = elements[0].num_qubits, elements[0].block_size
    keys = []
    for d in elements:
        key = lattice_key(d, q)
        if key is None or (d.num_qubits, d.block_size) != (n, k):
            return ClosureReport(
                closed=False,
                element_count=len(elements),
                checks_run=len(keys),
                counterexample=f"{d!r} is not on the order-{q} lattice",
            )
        keys.append(key)
    members = set(keys)
    checks = 0

    def violation(what: str) -> ClosureReport:
        logger.info("closure violated: %s", what)
        return ClosureReport(
            closed=False, element_count=len(elements), checks_run=checks, counterexample=what
        )

    for d in elements:
        checks += 1
        if lattice_key(dagger(d), q) not in members:
            return violation(f"dagger({d!r}) is missing")
        for c in all_x_strings(n):
            checks += 1
            if lattice_key(x_conjugate(d, c), q) not in members:
                return violation(f"x_conjugate({d!r}, {c}) is missing")

    # Pairwise products on integer lattice coordinates: a + b mod q, packed base q.
    coords = free_coordinates(keys, n, k)
    weights = code_weights(coords.shape[1], q)
    member_codes = np.unique(coords @ weights)
    for i, row in enumerate(coords):
        found = np.isin(((coords + row) % q) @ weights, member_codes)
        checks += len(elements)
        if not found.all():
            j = int(np.argmin(found))
            return violation(f"multiply({elements[i]!r}, {elements[j]!r}) is missing")
    return ClosureReport(closed=True, element_count=len(elements), checks_run=checks)


def verify_closure(spec: SubgroupSpec, n: int) -> ClosureReport:
    return check_closure(enumerate_subgroup(spec, n), spec.order)


def free_parameter_count(spec: SubgroupSpec, n: int) -> int:
    if spec.is_discrete:
        raise ConfigError(
            "parameter counting needs a continuous subgroup", key="subgroup.kind"
        )
    check_block_size(n, spec.block_size)
    return spec.free_phases(n)


def all_x_strings(n: int) -> list[Bits]:
    return [int_to_bits(x, n) for x in range(2**n)]
