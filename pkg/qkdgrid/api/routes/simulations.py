"""
Simulation API routes
"""

from typing import Any, Dict

import structlog
from fastapi import APIRouter, HTTPException
from fastapi.concurrency import run_in_threadpool

from qkdgrid.core.exceptions import QkdGridError
from qkdgrid.models.scenario import SimConfig
from qkdgrid.services.scenarios import kps_scenario
from qkdgrid.services.simulator import run_simulation

logger = structlog.get_logger(__name__)

router = APIRouter()


async def _run(cfg: SimConfig) -> Dict[str, Any]:
    try:
        trace = await run_in_threadpool(run_simulation, cfg)
    except QkdGridError as e:
        status = 422 if isinstance(e, ValueError) else 500
        logger.error("Simulation failed", error=str(e), status=status)
        raise HTTPException(status_code=status, detail=str(e))
    return trace.summary()


@router.post("/simulations")
async def create_simulation(cfg: SimConfig) -> Dict[str, Any]:
    """Run a scenario and return its summary"""
    return await _run(cfg)


@router.post("/simulations/kps-demo")
async def create_kps_demo(enabled: bool = True) -> Dict[str, Any]:
    """Run the two-controller key pool sharing scenario"""
    return await _run(kps_scenario(enabled))
