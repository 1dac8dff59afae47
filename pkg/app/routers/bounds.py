"""Γ(N) bounds, achieved rates and protocol comparison routes."""

from typing import Literal

from fastapi import APIRouter, HTTPException, Query
from pydantic import ValidationError

from app.exceptions import ConfigError
from app.schemas.bounds import AchievedRateResponse, ComparisonRowResponse, GammaBoundsResponse
from app.schemas.subgroup import SubgroupSpec
from app.services.bounds import achieved_rate, gamma_bounds, make_setting, protocol_comparison

router = APIRouter()


@router.get("", response_model=GammaBoundsResponse)
async def get_gamma_bounds(
    setting: Literal["separable1q", "separablekq", "commuting", "memory"] = Query(...),
    N: int = Query(..., ge=1, description="Qubits transmitted"),
    k: int | None = Query(None, ge=1),
    n: int | None = Query(None, ge=1),
    f: int | None = Query(None, ge=1, description="Gate budget for the commuting setting"),
    m: int | None = Query(None, ge=1),
):
    """Lower and upper bound on Γ(N) for one setting."""
    try:
        bounds = gamma_bounds(make_setting(setting, k=k, n=n, f=f, m=m), N)
    except ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return GammaBoundsResponse.from_bounds(bounds)


@router.get("/comparison", response_model=list[ComparisonRowResponse])
async def get_comparison(
    N: int = Query(..., ge=2),
    n: int = Query(..., ge=2),
    k: int = Query(1, ge=1),
):
    """Rates of the known protocols against the separable upper bound."""
    try:
        rows = protocol_comparison(N, n, k)
    except ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return [ComparisonRowResponse.from_row(row) for row in rows]


@router.get("/rate", response_model=AchievedRateResponse)
async def get_achieved_rate(
    n: int = Query(..., ge=1),
    m: int = Query(..., ge=1),
    k: int = Query(1, ge=1),
    kind: Literal["continuous", "discrete"] = "continuous",
    q: int | None = Query(None, ge=2),
    count_return_register: bool = False,
):
    try:
        spec = SubgroupSpec(kind=kind, block_size=k, order=q)
        rate = achieved_rate(spec, n, m, count_return_register)
    except ValidationError as exc:
        raise HTTPException(status_code=422, detail=exc.errors()[0]["msg"])
    except ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return AchievedRateResponse.from_rate(rate)
