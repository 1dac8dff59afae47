"""Bit-exact frame codec.

frame   = [u32 LE payload length][u8 tag][payload]
Hello         0x01  u16 n, u16 m, u8 mode (0 classical, 1 quantum)
Register      0x02  u16 layer, u16 n, 2^n × (f64 re, f64 im)
Instruction   0x03  u16 layer, u16 n, u16 k, (n/k)·2^k × f64 radians
Outcomes      0x04  u16 layer, u16 n, ceil(n/8) bytes, bit j at byte j//8, bit j%8
FinalRegister 0x05  u16 n, 2^n × (f64 re, f64 im)
All integers and floats little-endian.
"""

from __future__ import annotations

import enum
import struct
from typing import Iterator

import numpy as np

from app.config import settings
from app.exceptions import FrameDecodeError, GubqcError
from app.services.diaggroup import from_phases
from app.services.protocol.messages import (
    FinalRegister,
    Hello,
    Instruction,
    Outcomes,
    ProtocolMessage,
    Register,
)
from app.services.protocol.models import OutputMode
from app.services.qsim import StateVector

HEADER = struct.Struct("<IB")
HEADER_SIZE = HEADER.size

_HELLO = struct.Struct("<HHB")
_LAYER_N = struct.Struct("<HH")
_INSTRUCTION = struct.Struct("<HHH")
_N = struct.Struct("<H")


class Tag(enum.IntEnum):
    HELLO = 0x01
    REGISTER = 0x02
    INSTRUCTION = 0x03
    OUTCOMES = 0x04
    FINAL_REGISTER = 0x05


def max_payload_size() -> int:
    return _LAYER_N.size + 16 * 2**settings.MAX_QUBITS


def _frame(tag: Tag, payload: bytes) -> bytes:
    return HEADER.pack(len(payload), int(tag)) + payload


def _amplitude_bytes(state: StateVector) -> bytes:
    return state.amplitudes.astype("<c16").tobytes()


def encode_message(msg: ProtocolMessage) -> bytes:
    if isinstance(msg, Hello):
        return _frame(Tag.HELLO, _HELLO.pack(msg.n, msg.m, msg.output_mode.wire_code))
    if isinstance(msg, Register):
        head = _LAYER_N.pack(msg.layer, msg.state.num_qubits)
        return _frame(Tag.REGISTER, head + _amplitude_bytes(msg.state))
    if isinstance(msg, Instruction):
        op = msg.operator
        head = _INSTRUCTION.pack(msg.layer, op.num_qubits, op.block_size)
        return _frame(Tag.INSTRUCTION, head + op.phases.astype("<f8").tobytes())
    if isinstance(msg, Outcomes):
        packed = bytearray((len(msg.bits) + 7) // 8)
        for j, bit in enumerate(msg.bits):
            if bit:
                packed[j // 8] |= 1 << (j % 8)
        return _frame(Tag.OUTCOMES, _LAYER_N.pack(msg.layer, len(msg.bits)) + bytes(packed))
    if isinstance(msg, FinalRegister):
        return _frame(Tag.FINAL_REGISTER, _N.pack(msg.state.num_qubits) + _amplitude_bytes(msg.state))
    raise TypeError(f"not a protocol message: {msg!r}")


def _expect_length(payload: bytes, expected: int, what: str, offset: int) -> None:
    if len(payload) != expected:
        raise FrameDecodeError(
            f"length mismatch in {what}: {len(payload)} payload bytes, {expected} expected", offset
        )


def _decode_state(n: int, data: bytes, offset: int) -> StateVector:
    try:
        return StateVector(n, np.frombuffer(data, dtype="<c16"))
    except GubqcError as exc:
        raise FrameDecodeError(f"invalid register: {exc}", offset) from exc


def decode_payload(tag: int, payload: bytes, offset: int = 0) -> ProtocolMessage:
    try:
        tag = Tag(tag)
    except ValueError:
        raise FrameDecodeError(f"unknown tag 0x{tag:02x}", offset) from None

    if tag is Tag.HELLO:
        _expect_length(payload, _HELLO.size, "Hello", offset)
        n, m, mode = _HELLO.unpack(payload)
        if mode not in (0, 1):
            raise FrameDecodeError(f"unknown output mode {mode}", offset)
        return Hello(n, m, OutputMode.from_wire(mode))

    if tag is Tag.REGISTER:
        if len(payload) < _LAYER_N.size:
            raise FrameDecodeError("length mismatch in Register header", offset)
        layer, n = _LAYER_N.unpack_from(payload)
        if n < 1 or n > settings.MAX_QUBITS:
            raise FrameDecodeError(f"register width {n} out of range", offset)
        _expect_length(payload, _LAYER_N.size + 16 * 2**n, "Register", offset)
        return Register(layer, _decode_state(n, payload[_LAYER_N.size :], offset))

    if tag is Tag.INSTRUCTION:
        if len(payload) < _INSTRUCTION.size:
            raise FrameDecodeError("length mismatch in Instruction header", offset)
        layer, n, k = _INSTRUCTION.unpack_from(payload)
        if k < 1 or n < 1 or n % k:
            raise FrameDecodeError(f"block size {k} does not divide n={n}", offset)
        _expect_length(payload, _INSTRUCTION.size + 8 * (n // k) * 2**k, "Instruction", offset)
        phases = np.frombuffer(payload[_INSTRUCTION.size :], dtype="<f8").reshape(n // k, 2**k)
        try:
            return Instruction(layer, from_phases(n, k, phases))
        except GubqcError as exc:
            raise FrameDecodeError(f"invalid instruction: {exc}", offset) from exc

    if tag is Tag.OUTCOMES:
        if len(payload) < _LAYER_N.size:
            raise FrameDecodeError("length mismatch in Outcomes header", offset)
        layer, n = _LAYER_N.unpack_from(payload)
        _expect_length(payload, _LAYER_N.size + (n + 7) // 8, "Outcomes", offset)
        packed = payload[_LAYER_N.size :]
        return Outcomes(layer, tuple((packed[j // 8] >> (j % 8)) & 1 for j in range(n)))

    if len(payload) < _N.size:
        raise FrameDecodeError("length mismatch in FinalRegister header", offset)
    (n,) = _N.unpack_from(payload)
    if n < 1 or n > settings.MAX_QUBITS:
        raise FrameDecodeError(f"register width {n} out of range", offset)
    _expect_length(payload, _N.size + 16 * 2**n, "FinalRegister", offset)
    return FinalRegister(_decode_state(n, payload[_N.size :], offset))


def decode_frame(data: bytes, offset: int = 0) -> tuple[ProtocolMessage, int]:
    """Decode the frame starting at ``data[offset:]``; return it and the next offset."""
    if len(data) - offset < HEADER_SIZE:
        raise FrameDecodeError("truncated frame header", offset)
    length, tag = HEADER.unpack_from(data, offset)
    end = offset + HEADER_SIZE + length
    if end > len(data):
        raise FrameDecodeError(f"truncated frame: {length} payload bytes declared", offset)
    return decode_payload(tag, bytes(data[offset + HEADER_SIZE : end]), offset), end


def iter_frames(data: bytes) -> Iterator[tuple[int, bytes, ProtocolMessage]]:
    """Yield (offset, raw frame, message) for a concatenated frame stream."""
    offset = 0
    while offset < len(data):
        msg, end = decode_frame(data, offset)
        yield offset, bytes(data[offset:end]), msg
        offset = end
