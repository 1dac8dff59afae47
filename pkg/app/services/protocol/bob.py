"""Bob, the honest server: entangle, apply instructions, measure, report."""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass

import numpy as np

from app.config import settings
from app.exceptions import ProtocolError, SizeError
from app.services.diaggroup import DiagonalUnitary
from app.services.protocol.messages import (
    FinalRegister,
    Hello,
    Instruction,
    Outcomes,
    ProtocolMessage,
    Register,
)
from app.services.protocol.models import OutputMode
from app.services.qsim import (
    Bits,
    MeasurementBranch,
    StateVector,
    apply_cz,
    apply_diagonal,
    apply_hadamard_all,
    enumerate_hadamard_measurement,
    sample_hadamard_measurement,
    tensor,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EntangledRegisters:
    """Bob's global state. ``wires[w]`` is the (layer, qubit) living on wire w."""

    state: StateVector | None
    wires: tuple[tuple[int, int], ...]
    n: int
    measured: frozenset[int] = frozenset()

    def layer_wires(self, i: int) -> tuple[int, ...]:
        if i in self.measured:
            raise ProtocolError(f"register {i} has already been measured")
        found = tuple(w for w, (layer, _) in enumerate(self.wires) if layer == i)
        if len(found) != self.n or self.state is None:
            raise ProtocolError(f"register {i} is not held")
        return found


def bob_entangle(registers: list[StateVector]) -> EntangledRegisters:
    """Tensor the registers (register 1 on the lowest wires) and CZ qubit j of i with qubit j of i+1."""
    if not registers:
        raise SizeError("no registers to entangle")
    n, m = registers[0].num_qubits, len(registers)
    if any(r.num_qubits != n for r in registers):
        raise SizeError("registers differ in width")
    if n * m > settings.MAX_QUBITS:
        raise SizeError(f"n·m = {n * m} qubits exceeds the simulator cap {settings.MAX_QUBITS}")
    state = tensor(registers)
    for i in range(m - 1):
        for j in range(n):
            state = apply_cz(state, i * n + j, (i + 1) * n + j)
    wires = tuple((i + 1, j) for i in range(m) for j in range(n))
    return EntangledRegisters(state, wires, n)


def _apply_instruction(i: int, op: DiagonalUnitary, regs: EntangledRegisters):
    wires = regs.layer_wires(i)
    if op.num_qubits != regs.n:
        raise ProtocolError(f"instruction for layer {i} acts on {op.num_qubits} qubits, n={regs.n}")
    return apply_diagonal(regs.state, op, wires), wires


def _after(i: int, regs: EntangledRegisters, wires, branch: MeasurementBranch) -> EntangledRegisters:
    kept = tuple(w for idx, w in enumerate(regs.wires) if idx not in wires)
    return EntangledRegisters(branch.post_state, kept, regs.n, regs.measured | {i})


def bob_layer(
    i: int, op: DiagonalUnitary, regs: EntangledRegisters, rng: np.random.Generator
) -> tuple[Bits, EntangledRegisters]:
    """Apply C_i to register i, measure it in the Hadamard basis (|+> -> 0)."""
    state, wires = _apply_instruction(i, op, regs)
    branch = sample_hadamard_measurement(state, wires, rng)
    return branch.outcome_bits, _after(i, regs, wires, branch)


def bob_layer_branches(
    i: int, op: DiagonalUnitary, regs: EntangledRegisters
) -> list[tuple[float, Bits, EntangledRegisters]]:
    state, wires = _apply_instruction(i, op, regs)
    return [
        (branch.probability, branch.outcome_bits, _after(i, regs, wires, branch))
        for branch in enumerate_hadamard_measurement(state, wires)
    ]


def bob_release(i: int, op: DiagonalUnitary, regs: EntangledRegisters) -> StateVector:
    """Quantum output: apply C_m then H on every qubit and hand the register back."""
    state, wires = _apply_instruction(i, op, regs)
    if len(regs.wires) != regs.n:
        raise ProtocolError("registers other than the last are still unmeasured")
    return apply_hadamard_all(state, wires)


class BobSession:
    """Sans-IO server state machine: ``receive(msg) -> replies``."""

    def __init__(self, rng: np.random.Generator | None = None):
        self._rng = rng
        self._hello: Hello | None = None
        self._registers: list[StateVector] = []
        self._regs: EntangledRegisters | None = None
        self._next_layer = 1
        self.done = False

    def _check_instruction(self, msg: ProtocolMessage) -> Instruction:
        if self.done:
            raise ProtocolError(f"session finished, got {type(msg).__name__}")
        if self._regs is None:
            raise ProtocolError(f"expected Hello or Register, got {type(msg).__name__}")
        if not isinstance(msg, Instruction) or msg.layer != self._next_layer:
            raise ProtocolError(f"expected Instruction for layer {self._next_layer}, got {type(msg).__name__}")
        return msg

    def _releases(self, layer: int) -> bool:
        hello = self._hello
        return hello.output_mode is OutputMode.QUANTUM and layer == hello.m

    def measures(self, msg: ProtocolMessage) -> bool:
        """Whether handling ``msg`` involves a measurement."""
        return (
            isinstance(msg, Instruction)
            and self._regs is not None
            and not self.done
            and not self._releases(msg.layer)
        )

    def receive(self, msg: ProtocolMessage) -> list[ProtocolMessage]:
        if self._hello is None:
            if not isinstance(msg, Hello):
                raise ProtocolError(f"expected Hello, got {type(msg).__name__}")
            if msg.n < 1 or msg.m < 1:
                raise ProtocolError(f"Hello announces n={msg.n}, m={msg.m}")
            self._hello = msg
            logger.debug("hello n=%d m=%d mode=%s", msg.n, msg.m, msg.output_mode.value)
            return []

        if self._regs is None:
            expected = len(self._registers) + 1
            if not isinstance(msg, Register) or msg.layer != expected:
                raise ProtocolError(f"expected Register {expected}, got {type(msg).__name__}")
            if msg.state.num_qubits != self._hello.n:
                raise ProtocolError(f"register {expected} has {msg.state.num_qubits} qubits, n={self._hello.n}")
            self._registers.append(msg.state)
            if len(self._registers) == self._hello.m:
                self._regs = bob_entangle(self._registers)
            return []

        msg = self._check_instruction(msg)
        i = msg.layer
        if self._releases(i):
            final = bob_release(i, msg.operator, self._regs)
            self._regs = None
            self.done = True
            return [FinalRegister(final)]
        if self._rng is None:
            raise ProtocolError("measurement requested from a session without an rng")
        bits, self._regs = bob_layer(i, msg.operator, self._regs, self._rng)
        return [self._advance(i, bits)]

    def _advance(self, i: int, bits: Bits) -> Outcomes:
        self._next_layer = i + 1
        if i == self._hello.m:
            self.done = True
        return Outcomes(i, bits)

    def fork(self, msg: ProtocolMessage) -> list[tuple[float, "BobSession", list[ProtocolMessage]]]:
        """Every measurement branch of handling ``msg``, each on its own copy of the session."""
        msg = self._check_instruction(msg)
        if self._releases(msg.layer):
            twin = copy.copy(self)
            return [(1.0, twin, twin.receive(msg))]
        branches = []
        for p, bits, regs in bob_layer_branches(msg.layer, msg.operator, self._regs):
            twin = copy.copy(self)
            twin._regs = regs
            branches.append((p, twin, [twin._advance(msg.layer, bits)]))
        return branches
