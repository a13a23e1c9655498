import logging

import anyio
from fastapi import APIRouter, HTTPException

from app.core.config import settings
from app.core.exceptions import SimulationError
from app.schemas.run import RunConfig, SweepRequest, SweepSummary
from app.schemas.simulations import RunResponse
from app.services import harness

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("/run", response_model=RunResponse)
async def run_simulation(config: RunConfig):
    if config.max_t > settings.api_max_t:
        raise HTTPException(
            status_code=400,
            detail=f"max_t={config.max_t} exceeds the API limit of {settings.api_max_t}; use the CLI",
        )
    try:
        record, manifest = await anyio.to_thread.run_sync(lambda: harness.run(config, write=False))
    except SimulationError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception:
        logger.exception("Simulation %s failed", config.run_name())
        raise HTTPException(status_code=500, detail="Simulation failed")
    return RunResponse(manifest=manifest, timeseries=record.to_frame().to_dict(orient="records"))


@router.post("/sweep", response_model=SweepSummary)
async def run_sweep(request: SweepRequest):
    total = request.total_steps()
    if total > settings.api_max_sweep_t:
        raise HTTPException(
            status_code=400,
            detail=f"sweep of {total} steps exceeds the API limit of {settings.api_max_sweep_t}; use the CLI",
        )
    try:
        return await anyio.to_thread.run_sync(lambda: harness.sweep(request))
    except SimulationError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception:
        logger.exception("Sweep failed")
        raise HTTPException(status_code=500, detail="Sweep failed")
