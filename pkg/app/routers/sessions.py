"""Protocol session routes."""

from fastapi import APIRouter, HTTPException

from app.exceptions import ConfigError, ProtocolError, SizeError
from app.schemas.run_config import RunConfig
from app.schemas.transcript import SessionResponse
from app.services.runs import execute_run, transcript_record

router = APIRouter()


@router.post("", response_model=SessionResponse)
async def create_session(config: RunConfig):
    """Run one in-process session and return Alice's output with Bob's transcript."""
    if config.transport.kind != "inprocess":
        raise HTTPException(status_code=400, detail="transport.kind: only inprocess sessions run over HTTP")
    try:
        outcome = await execute_run(config)
    except (ConfigError, SizeError) as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    except ProtocolError as exc:
        raise HTTPException(status_code=500, detail=f"session aborted: {exc}")
    return SessionResponse(
        output=outcome.output_text,
        output_mode=config.output_mode,
        fidelity=outcome.fidelity,
        transcript=transcript_record(config, outcome),
    )
