"""Typed protocol messages. Bob only ever sees these five shapes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from app.services.diaggroup import DiagonalUnitary
from app.services.protocol.models import OutputMode
from app.services.qsim import Bits, StateVector


@dataclass(frozen=True)
class Hello:
    n: int
    m: int
    output_mode: OutputMode


@dataclass(frozen=True)
class Register:
    layer: int
    state: StateVector


@dataclass(frozen=True)
class Instruction:
    layer: int
    operator: DiagonalUnitary


@dataclass(frozen=True)
class Outcomes:
    layer: int
    bits: Bits


@dataclass(frozen=True)
class FinalRegister:
    state: StateVector


ProtocolMessage = Union[Hello, Register, Instruction, Outcomes, FinalRegister]
