"""Verification suite routes."""

from typing import Literal

from fastapi import APIRouter, HTTPException, Query

from app.exceptions import ConfigError, EnumerationError, SizeError
from app.schemas.run_config import RunConfig
from app.services.suites import DEFAULT_KEYS, DEFAULT_SAMPLES, DEFAULT_TRIALS, run_suite

router = APIRouter()


@router.post("/{suite}")
def verify(
    suite: Literal["correctness", "blindness", "teleport", "closure", "controls"],
    config: RunConfig,
    keys: int = Query(DEFAULT_KEYS, ge=1),
    samples: int = Query(DEFAULT_SAMPLES, ge=1000),
    trials: int = Query(DEFAULT_TRIALS, ge=1),
):
    """Run one suite against the posted run config and return its report."""
    try:
        report = run_suite(config, suite, keys=keys, samples=samples, trials=trials)
    except (ConfigError, SizeError) as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    except EnumerationError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return report.model_dump()
