"""Alice, the client: secret preparation, instructions and output decoding."""

from __future__ import annotations

import copy
import enum
import logging
from typing import Callable, Mapping

import numpy as np

from app.exceptions import ProtocolError, SizeError
from app.schemas.subgroup import SubgroupSpec
from app.services.diaggroup import DiagonalUnitary, dagger, multiply, x_conjugate
from app.services.protocol.messages import (
    FinalRegister,
    Hello,
    Instruction,
    Outcomes,
    ProtocolMessage,
    Register,
)
from app.services.protocol.models import Computation, OutputMode, SecretKey, dependency_set
from app.services.qsim import (
    Bits,
    StateVector,
    apply_diagonal,
    apply_pauli,
    new_plus_state,
    xor_bits,
    zero_bits,
)

logger = logging.getLogger(__name__)

CorrectionRule = Callable[[int, Mapping[int, Bits], int], Bits]
PrepareRule = Callable[[int, SecretKey, int], StateVector]
InstructionRule = Callable[[DiagonalUnitary, DiagonalUnitary, Bits], DiagonalUnitary]


def alice_prepare_layer(i: int, key: SecretKey, n: int) -> StateVector:
    """|φ_i> = Z^{r_i} D_i |+>^{⊗n}."""
    rotation, flips = key.layer(i)
    return apply_pauli(apply_diagonal(new_plus_state(n), rotation), "Z", flips)


def _xor_over(layers, s_history: Mapping[int, Bits], n: int) -> Bits:
    out = zero_bits(n)
    for k in layers:
        if k not in s_history:
            raise ProtocolError(f"outcome of layer {k} is needed but was never recorded")
        out = xor_bits(out, s_history[k])
    return out


def correction_bits(i: int, s_history: Mapping[int, Bits], n: int) -> Bits:
    """c_i = XOR of s_k over S_{i-1}; c_1 (and c_0) is all zeros."""
    if i <= 1:
        return zero_bits(n)
    return _xor_over(dependency_set(i - 1), s_history, n)


def classical_output(s_history: Mapping[int, Bits], m: int) -> Bits:
    """c_{m+1}: XOR of s_k over S_m."""
    if not s_history:
        raise ProtocolError("no outcomes recorded")
    n = len(next(iter(s_history.values())))
    return _xor_over(dependency_set(m), s_history, n)


def build_instruction(rotation: DiagonalUnitary, layer: DiagonalUnitary, c: Bits) -> DiagonalUnitary:
    """C = D† · X^c U X^c."""
    return multiply(dagger(rotation), x_conjugate(layer, c))


def alice_instruction(
    i: int,
    comp: Computation,
    key: SecretKey,
    s_history: Mapping[int, Bits],
    correction: CorrectionRule = correction_bits,
) -> DiagonalUnitary:
    rotation, _ = key.layer(i)
    return build_instruction(rotation, comp.layers[i - 1], correction(i, s_history, comp.n))


def alice_record_outcome(i: int, b: Bits, key: SecretKey) -> Bits:
    """s_i = b_i XOR r_i."""
    _, flips = key.layer(i)
    return xor_bits(b, flips)


def alice_final_correction(state: StateVector, c_m: Bits, c_m_minus_1: Bits, r_m: Bits) -> StateVector:
    """Apply Z^{c_m} X^{c_{m-1} + r_m} qubitwise (X acts first)."""
    if not len(c_m) == len(c_m_minus_1) == len(r_m) == state.num_qubits:
        raise SizeError("final correction masks do not match the returned register")
    flipped = apply_pauli(state, "X", xor_bits(c_m_minus_1, r_m))
    return apply_pauli(flipped, "Z", c_m)


class _Expect(enum.Enum):
    OUTCOMES = "outcomes"
    FINAL_REGISTER = "final register"
    NOTHING = "nothing"


class AliceSession:
    """Sans-IO client state machine.

    ``open()`` yields the opening burst (Hello, every Register, the first
    Instruction); every later step is ``receive(reply) -> messages to send``.
    """

    def __init__(
        self,
        comp: Computation,
        spec: SubgroupSpec,
        rng: np.random.Generator | None = None,
        *,
        key: SecretKey | None = None,
        correction: CorrectionRule = correction_bits,
    ):
        if key is None:
            if rng is None:
                raise ValueError("AliceSession needs either a key or an rng to sample one")
            key = SecretKey.sample(spec, comp.n, comp.m, rng)
        if key.m != comp.m:
            raise SizeError(f"secret key has {key.m} layers, computation has {comp.m}")
        self.comp = comp
        self.key = key
        self._correction = correction
        self._s: dict[int, Bits] = {}
        self._expecting: tuple[_Expect, int] | None = None
        self.result: Bits | StateVector | None = None

    @property
    def done(self) -> bool:
        return self._expecting is not None and self._expecting[0] is _Expect.NOTHING

    @property
    def s_history(self) -> dict[int, Bits]:
        return dict(self._s)

    def _instruction(self, i: int) -> Instruction:
        op = alice_instruction(i, self.comp, self.key, self._s, self._correction)
        if i == self.comp.m and self.comp.output_mode is OutputMode.QUANTUM:
            self._expecting = (_Expect.FINAL_REGISTER, i)
        else:
            self._expecting = (_Expect.OUTCOMES, i)
        return Instruction(i, op)

    def open(self) -> list[ProtocolMessage]:
        if self._expecting is not None:
            raise ProtocolError("session already opened")
        comp = self.comp
        burst: list[ProtocolMessage] = [Hello(comp.n, comp.m, comp.output_mode)]
        burst += [Register(i, alice_prepare_layer(i, self.key, comp.n)) for i in range(1, comp.m + 1)]
        burst.append(self._instruction(1))
        return burst

    def receive(self, msg: ProtocolMessage) -> list[ProtocolMessage]:
        if self._expecting is None:
            raise ProtocolError("session not opened")
        expected, layer = self._expecting

        if expected is _Expect.OUTCOMES and isinstance(msg, Outcomes) and msg.layer == layer:
            if len(msg.bits) != self.comp.n:
                raise ProtocolError(f"layer {layer} outcomes carry {len(msg.bits)} bits, n={self.comp.n}")
            self._s[layer] = alice_record_outcome(layer, msg.bits, self.key)
            if layer < self.comp.m:
                return [self._instruction(layer + 1)]
            self.result = self._correction(self.comp.m + 1, self._s, self.comp.n)
            self._expecting = (_Expect.NOTHING, layer)
            logger.debug("classical output %s", self.result)
            return []

        if expected is _Expect.FINAL_REGISTER and isinstance(msg, FinalRegister):
            if msg.state.num_qubits != self.comp.n:
                raise ProtocolError(f"returned register has {msg.state.num_qubits} qubits, n={self.comp.n}")
            m, n = self.comp.m, self.comp.n
            _, r_m = self.key.layer(m)
            self.result = alice_final_correction(
                msg.state,
                self._correction(m, self._s, n),
                self._correction(m - 1, self._s, n),
                r_m,
            )
            self._expecting = (_Expect.NOTHING, layer)
            return []

        raise ProtocolError(f"expected {expected.value} for layer {layer}, got {type(msg).__name__}")

    def fork(self) -> "AliceSession":
        twin = copy.copy(self)
        twin._s = dict(self._s)
        return twin
