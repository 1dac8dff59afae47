"""Verification suites addressed by name from the CLI and the HTTP API."""

import logging

import numpy as np
from pydantic import BaseModel

from app.exceptions import ConfigError
from app.schemas.run_config import RunConfig
from app.services.analyzer import (
    run_negative_controls,
    teleportation_identity_check,
    verify_blindness_exhaustive,
    verify_blindness_sampled,
    verify_correctness,
)
from app.services.diaggroup import identity, verify_closure
from app.services.runs import build_computation

logger = logging.getLogger(__name__)

SUITES = ("correctness", "blindness", "teleport", "closure", "controls")

DEFAULT_KEYS = 100
DEFAULT_SAMPLES = 100_000
DEFAULT_TRIALS = 50


def blindness_pair(config: RunConfig):
    """First and last configured layer; a single layer is paired with the identity."""
    comp = build_computation(config)
    if comp.m == 1:
        return comp.layers[0], identity(comp.n, config.subgroup.block_size)
    return comp.layers[0], comp.layers[-1]


def run_suite(
    config: RunConfig,
    suite: str,
    keys: int = DEFAULT_KEYS,
    samples: int = DEFAULT_SAMPLES,
    trials: int = DEFAULT_TRIALS,
) -> BaseModel:
    rng = np.random.default_rng(config.seeds.alice)
    spec = config.subgroup
    logger.info("running %s suite", suite)

    if suite == "correctness":
        return verify_correctness(build_computation(config), spec, keys, rng)
    if suite == "blindness":
        pair = blindness_pair(config)
        if spec.is_discrete:
            return verify_blindness_exhaustive(spec, config.n, pair)
        return verify_blindness_sampled(spec, config.n, pair, samples, rng)
    if suite == "teleport":
        return teleportation_identity_check(trials, rng)
    if suite == "closure":
        if not spec.is_discrete:
            raise ConfigError("closure is checked on a discrete subgroup", key="subgroup.kind")
        build_computation(config)
        return verify_closure(spec, config.n)
    if suite == "controls":
        return run_negative_controls(rng)
    raise ConfigError(f"unknown suite {suite!r}, expected one of {', '.join(SUITES)}", key="--suite")
