"""
Key-rate API routes
"""

from dataclasses import asdict
from typing import Any, Dict, List, Literal, Optional

import structlog
from fastapi import APIRouter, HTTPException
from fastapi.concurrency import run_in_threadpool
from pydantic import BaseModel, Field

from qkdgrid.core.exceptions import ParameterValidationError, QkdGridError
from qkdgrid.engine.finite_key import evaluate_key_rate
from qkdgrid.models.qkd import ChannelModel, ProtocolParams
from qkdgrid.services.sweep import sweep_keyrate

logger = structlog.get_logger(__name__)

router = APIRouter()


class KeyRateRequest(BaseModel):
    protocol: ProtocolParams = Field(default_factory=ProtocolParams)
    channel: ChannelModel = Field(default_factory=ChannelModel)
    statistics: Literal["expected", "sampled"] = "expected"
    seed: int = Field(0, ge=0)


class SweepRequest(BaseModel):
    lengths: List[float] = Field(..., min_length=1)
    e_mis: List[float] = Field(..., min_length=1)
    eta_bob: Optional[List[float]] = None
    protocol: ProtocolParams = Field(default_factory=ProtocolParams)
    channel: ChannelModel = Field(default_factory=ChannelModel)
    workers: int = Field(1, ge=1, le=32)


def _http_error(e: QkdGridError) -> HTTPException:
    status = 422 if isinstance(e, ValueError) else 500
    logger.error("Request failed", error=str(e), status=status)
    return HTTPException(status_code=status, detail=str(e))


@router.post("/keyrate")
async def compute_keyrate(request: KeyRateRequest) -> Dict[str, Any]:
    """Evaluate one key block: secret key length, block size and speed"""
    try:
        result = await run_in_threadpool(
            evaluate_key_rate,
            request.protocol,
            request.channel,
            request.statistics,
            request.seed,
        )
    except QkdGridError as e:
        raise _http_error(e)
    return asdict(result)


@router.post("/sweep")
async def compute_sweep(request: SweepRequest) -> Dict[str, Any]:
    """Key generation speed over a grid of L, e_mis and eta_bob"""
    try:
        rows = await run_in_threadpool(
            sweep_keyrate,
            request.lengths,
            request.e_mis,
            request.eta_bob,
            protocol=request.protocol,
            channel=request.channel,
            workers=request.workers,
        )
    except ParameterValidationError as e:
        raise _http_error(e)
    return {"rows": [asdict(row) for row in rows]}
