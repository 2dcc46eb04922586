"""
qkdgrid - Main FastAPI Application

HTTP surface of the QKD-secured microgrid simulator: key-rate evaluation,
sweeps and simulation runs.
"""

from contextlib import asynccontextmanager
from typing import List

import structlog
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from qkdgrid import __version__
from qkdgrid.api.routes import keyrate, monitoring, simulations
from qkdgrid.core.config import get_settings
from qkdgrid.core.logging import configure_logging

logger = structlog.get_logger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan manager"""
    settings = get_settings()
    configure_logging(settings.log_level, settings.log_format)
    logger.info(
        "qkdgrid API started",
        version=__version__,
        environment=settings.environment,
        pulse_rate=settings.default_pulse_rate,
    )
    yield
    logger.info("qkdgrid API stopped")


app = FastAPI(
    title="qkdgrid API",
    description="QKD-secured microgrid control simulator",
    version=__version__,
    lifespan=lifespan,
    docs_url="/docs",
    redoc_url="/redoc",
)


def configure_cors(app: FastAPI, origins: List[str]) -> None:
    """Allow browser clients from `origins`; an empty list adds nothing"""
    if not origins:
        return
    app.add_middleware(
        CORSMiddleware,
        allow_origins=origins,
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )


configure_cors(app, get_settings().cors_origins)

app.include_router(monitoring.router, tags=["monitoring"])
app.include_router(keyrate.router, prefix="/api/v1", tags=["keyrate"])
app.include_router(simulations.router, prefix="/api/v1", tags=["simulations"])


@app.get("/")
async def root():
    """Root endpoint"""
    return {
        "message": "qkdgrid QKD-secured microgrid simulator",
        "version": __version__,
        "status": "running",
    }


if __name__ == "__main__":
    import uvicorn

    settings = get_settings()
    uvicorn.run(
        "qkdgrid.main:app",
        host=settings.api_host,
        port=settings.api_port,
        reload=settings.api_reload,
    )
