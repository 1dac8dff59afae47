"""Session transcripts: Bob's complete view of a run, in wire order."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import aiofiles
from pydantic import ValidationError

from app.exceptions import ConfigError, ProtocolError
from app.schemas.transcript import TranscriptRecord
from app.services.protocol.messages import (
    FinalRegister,
    Hello,
    Instruction,
    Outcomes,
    ProtocolMessage,
    Register,
)
from app.services.protocol.models import OutputMode
from app.services.protocol.wire import iter_frames
from app.services.qsim import StateVector, bits_to_str, state_fingerprint

logger = logging.getLogger(__name__)


def format_result(result) -> str:
    if isinstance(result, StateVector):
        return state_fingerprint(result)
    return bits_to_str(result)


@dataclass
class SessionTranscript:
    n: int
    m: int
    output_mode: OutputMode
    alice_seed: int
    bob_seed: int
    frames: list[bytes] = field(default_factory=list)
    result: str = ""

    def record(self, frame: bytes) -> None:
        self.frames.append(bytes(frame))

    def stream(self) -> bytes:
        return b"".join(self.frames)

    def messages(self) -> list[ProtocolMessage]:
        return [msg for _, _, msg in iter_frames(self.stream())]

    def digest(self) -> str:
        return hashlib.sha256(self.stream()).hexdigest()

    def check(self) -> None:
        check_grammar(self.messages(), self.n, self.m, self.output_mode)

    def to_record(self, config: dict[str, Any] | None = None) -> TranscriptRecord:
        return TranscriptRecord(
            config=config,
            n=self.n,
            m=self.m,
            output_mode=self.output_mode.value,
            alice_seed=self.alice_seed,
            bob_seed=self.bob_seed,
            frames=[f.hex() for f in self.frames],
            result=self.result,
            digest=self.digest(),
        )

    @classmethod
    def from_record(cls, record: TranscriptRecord) -> "SessionTranscript":
        transcript = cls(
            n=record.n,
            m=record.m,
            output_mode=OutputMode(record.output_mode),
            alice_seed=record.alice_seed,
            bob_seed=record.bob_seed,
            frames=[bytes.fromhex(f) for f in record.frames],
            result=record.result,
        )
        if transcript.digest() != record.digest:
            raise ProtocolError("transcript digest does not match its frames")
        return transcript


def check_grammar(messages: Sequence[ProtocolMessage], n: int, m: int, mode: OutputMode) -> None:
    """Hello, m Registers, then (Instruction, Outcomes) per layer; quantum mode ends (Instruction, FinalRegister)."""
    expected: list[tuple[type, int | None]] = [(Hello, None)]
    expected += [(Register, i) for i in range(1, m + 1)]
    for i in range(1, m + 1):
        expected.append((Instruction, i))
        last_quantum = mode is OutputMode.QUANTUM and i == m
        expected.append((FinalRegister, None) if last_quantum else (Outcomes, i))

    for pos, msg in enumerate(messages):
        if pos >= len(expected):
            raise ProtocolError(f"message {pos}: unexpected {type(msg).__name__} after the session ended")
        kind, layer = expected[pos]
        if not isinstance(msg, kind) or (layer is not None and msg.layer != layer):
            want = kind.__name__ + (f"({layer})" if layer is not None else "")
            raise ProtocolError(f"message {pos}: expected {want}, got {type(msg).__name__}")
        if isinstance(msg, Hello) and (msg.n, msg.m, msg.output_mode) != (n, m, mode):
            raise ProtocolError(f"message 0: Hello announces n={msg.n}, m={msg.m}, {msg.output_mode.value}")
    if len(messages) != len(expected):
        raise ProtocolError(f"transcript ends after {len(messages)} of {len(expected)} messages")


def parse_frames(data: bytes, n: int, m: int, mode: OutputMode) -> list[ProtocolMessage]:
    messages = [msg for _, _, msg in iter_frames(data)]
    check_grammar(messages, n, m, mode)
    return messages


async def save_transcript(record: TranscriptRecord, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    async with aiofiles.open(path, "w") as f:
        await f.write(record.model_dump_json(indent=2))
    logger.info("transcript written to %s (%d frames)", path, len(record.frames))
    return path


async def load_transcript(path: str | Path) -> TranscriptRecord:
    async with aiofiles.open(path, "r") as f:
        raw = await f.read()
    try:
        return TranscriptRecord.model_validate_json(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        key = ".".join(str(p) for p in first["loc"]) or "transcript"
        raise ConfigError(first["msg"], key=key) from exc
