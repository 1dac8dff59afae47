from typing import Any, Literal

from pydantic import BaseModel, Field

TRANSCRIPT_SCHEMA_VERSION = 1


class TranscriptRecord(BaseModel):
    """On-disk form of a session transcript: Bob's whole view plus what is needed to replay it."""

    schema_version: Literal[1] = TRANSCRIPT_SCHEMA_VERSION
    config: dict[str, Any] | None = None
    n: int = Field(..., ge=1)
    m: int = Field(..., ge=1)
    output_mode: Literal["classical", "quantum"]
    alice_seed: int
    bob_seed: int
    frames: list[str]
    result: str
    digest: str

    model_config = {"extra": "forbid"}


class SessionResponse(BaseModel):
    output: str
    output_mode: Literal["classical", "quantum"]
    fidelity: float | None = None
    transcript: TranscriptRecord
