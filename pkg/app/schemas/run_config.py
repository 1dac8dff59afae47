from typing import Literal, Union

from pydantic import BaseModel, Field

from app.schemas.subgroup import SubgroupSpec

RUN_CONFIG_SCHEMA_VERSION = 1

Angle = Union[float, str]


class SeedsConfig(BaseModel):
    alice: int = Field(0, ge=0, lt=2**64, description="u64 seed for Alice's secrets and random layers")
    bob: int = Field(0, ge=0, lt=2**64, description="u64 seed for Bob's measurement outcomes")

    model_config = {"extra": "forbid"}


class TransportConfig(BaseModel):
    kind: Literal["inprocess", "socket"] = Field("inprocess", description="inprocess | socket")
    host: str | None = Field(None, description="Bob's host for socket runs (default GUBQC_HOST)")
    port: int | None = Field(None, ge=1, le=65535, description="Bob's port for socket runs (default GUBQC_PORT)")

    model_config = {"extra": "forbid"}


class OutputConfig(BaseModel):
    transcript: str | None = Field(None, description="transcript file to write")
    report: str | None = Field(None, description="verification report file to write")

    model_config = {"extra": "forbid"}


class RunConfig(BaseModel):
    """A complete, self-describing session or verification run."""

    schema_version: Literal[1] = Field(RUN_CONFIG_SCHEMA_VERSION, description="must be 1")
    n: int = Field(..., ge=1, description="qubits per register")
    m: int = Field(..., ge=1, description="number of hidden layers")
    output_mode: Literal["classical", "quantum"] = Field("classical", description="classical | quantum")
    subgroup: SubgroupSpec = Field(..., description="group the layers and secrets are drawn from")
    layers: Literal["random", "identity", "entangling"] | list[list[list[Angle]]] = Field(
        "random",
        description=(
            '"random", "identity", "entangling" (controlled-Z inside every block), '
            'or per layer a list of blocks of 2^k angles ("3/4pi" or radians)'
        ),
    )
    seeds: SeedsConfig = Field(SeedsConfig(), description="random seeds")
    transport: TransportConfig = Field(TransportConfig(), description="how Alice reaches Bob")
    output: OutputConfig = Field(OutputConfig(), description="where results are written")
    compare_oracle: bool = Field(False, description="report fidelity against the direct circuit")

    model_config = {"extra": "forbid"}
