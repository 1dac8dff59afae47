"""Run configuration loading and the cross-field checks done before any execution."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ValidationError

from app.config import settings
from app.exceptions import ConfigError
from app.schemas.run_config import RunConfig
from app.schemas.transcript import TranscriptRecord
from app.services.analyzer import reference_output
from app.services.angles import parse_angle
from app.services.diaggroup import check_block_size, controlled_z, from_turns, identity, is_member, multiply
from app.services.protocol.models import Computation, OutputMode
from app.services.protocol.session import SessionOutput, connect_alice, run_session
from app.services.protocol.transcript import SessionTranscript, format_result
from app.services.qsim import fidelity_up_to_global_phase

logger = logging.getLogger(__name__)

# Mixed into Alice's seed so random layers never share a stream with her secrets.
LAYER_SEED_SALT = 0x5EED


def _dotted(loc) -> str:
    parts = []
    for p in loc:
        if isinstance(p, int):
            parts[-1:] = [f"{parts[-1]}[{p}]"] if parts else [f"[{p}]"]
        elif "[" not in p and "-" not in p:
            parts.append(p)
    return ".".join(parts) or "config"


def _config_error(exc: ValidationError) -> ConfigError:
    first = exc.errors()[0]
    msg = first["msg"]
    if first["type"] == "extra_forbidden":
        msg = "unknown key"
    return ConfigError(msg, key=_dotted(first["loc"]))


def parse_run_config(data: dict[str, Any] | str) -> RunConfig:
    try:
        if isinstance(data, str):
            return RunConfig.model_validate_json(data)
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise _config_error(exc) from exc


def load_run_config(path: str | Path) -> RunConfig:
    resolved = settings.resolve_config_path(path)
    try:
        text = resolved.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {resolved}: {exc.strerror}", key="--config") from exc
    try:
        json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid JSON (line {exc.lineno}): {exc.msg}", key="config") from exc
    config = parse_run_config(text)
    logger.debug("loaded run config %s", resolved)
    return config


def _explicit_layers(config: RunConfig):
    n, k = config.n, config.subgroup.block_size
    if len(config.layers) != config.m:
        raise ConfigError(f"{len(config.layers)} layers given for m={config.m}", key="layers")
    layers = []
    for i, blocks in enumerate(config.layers):
        if len(blocks) != n // k:
            raise ConfigError(f"{len(blocks)} blocks given, n/k = {n // k} expected", key=f"layers[{i}]")
        turns = []
        for b, block in enumerate(blocks):
            key = f"layers[{i}][{b}]"
            if len(block) != 2**k:
                raise ConfigError(f"{len(block)} angles given, 2^k = {2**k} expected", key=key)
            turns.append([float(parse_angle(a, key)) for a in block])
        layer = from_turns(n, k, turns)
        if not is_member(config.subgroup, layer):
            raise ConfigError(
                f"layer is not on the order-{config.subgroup.order} lattice", key=f"layers[{i}]"
            )
        layers.append(layer)
    return tuple(layers)


def _entangling_layers(config: RunConfig):
    n, k = config.n, config.subgroup.block_size
    if k < 2:
        raise ConfigError("entangling layers need blocks of at least two qubits", key="subgroup.block_size")
    layer = identity(n, k)
    for first in range(0, n, k):
        layer = multiply(layer, controlled_z(n, k, first, first + 1))
    if not is_member(config.subgroup, layer):
        raise ConfigError(f"controlled-Z is not on the order-{config.subgroup.order} lattice", key="layers")
    return (layer,) * config.m


def build_computation(config: RunConfig) -> Computation:
    n, m, spec = config.n, config.m, config.subgroup
    check_block_size(n, spec.block_size)
    if n > settings.MAX_QUBITS:
        raise ConfigError(f"n={n} exceeds the simulator cap {settings.MAX_QUBITS}", key="n")
    if n * m > settings.MAX_QUBITS:
        raise ConfigError(
            f"n·m = {n * m} qubits exceeds the simulator cap {settings.MAX_QUBITS}", key="m"
        )
    mode = OutputMode(config.output_mode)
    if config.layers == "identity":
        return Computation.identity(n, m, spec.block_size, mode)
    if config.layers == "random":
        rng = np.random.default_rng([config.seeds.alice, LAYER_SEED_SALT])
        return Computation.random(n, m, spec, rng, mode)
    if config.layers == "entangling":
        return Computation(n, m, _entangling_layers(config), mode)
    return Computation(n, m, _explicit_layers(config), mode)


def socket_address(config: RunConfig) -> tuple[str, int]:
    return config.transport.host or settings.HOST, config.transport.port or settings.PORT


def _walk(model: type[BaseModel], prefix: str = ""):
    for name, field in model.model_fields.items():
        key = f"{prefix}{name}"
        yield key, field.description or ""
        ann = field.annotation
        if isinstance(ann, type) and issubclass(ann, BaseModel):
            yield from _walk(ann, f"{key}.")


def describe_config_keys() -> list[tuple[str, str]]:
    """Every run-config key with its meaning, for help text."""
    return list(_walk(RunConfig))


@dataclass(frozen=True)
class RunOutcome:
    computation: Computation
    output: SessionOutput
    transcript: SessionTranscript
    fidelity: float | None = None

    @property
    def output_text(self) -> str:
        return format_result(self.output)


async def execute_run(config: RunConfig) -> RunOutcome:
    """Build the computation and run one session over the configured transport."""
    comp = build_computation(config)
    spec, seeds = config.subgroup, config.seeds
    if config.transport.kind == "socket":
        host, port = socket_address(config)
        output, transcript = await connect_alice(comp, spec, host, port, seeds.alice, seeds.bob)
    else:
        output, transcript = await run_session(comp, spec, seeds.alice, seeds.bob)

    fidelity = None
    if config.compare_oracle and comp.output_mode is OutputMode.QUANTUM:
        fidelity = fidelity_up_to_global_phase(output, reference_output(comp).state)
    return RunOutcome(comp, output, transcript, fidelity)


def transcript_record(config: RunConfig, outcome: RunOutcome) -> TranscriptRecord:
    return outcome.transcript.to_record(config.model_dump(mode="json"))
