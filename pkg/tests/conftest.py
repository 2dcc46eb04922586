"""
Shared fixtures for the qkdgrid test suite
"""

import pytest

from qkdgrid.core.config import get_settings
from qkdgrid.models.qkd import ChannelModel, ProtocolParams


@pytest.fixture(autouse=True)
def _fresh_settings(monkeypatch, tmp_path):
    """Isolate every test from the caller's QKDGRID_* environment"""
    for name in (
        "QKDGRID_LOG_LEVEL",
        "QKDGRID_LOG_FORMAT",
        "QKDGRID_SWEEP_WORKERS",
        "QKDGRID_DEFAULT_PULSE_RATE",
    ):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("QKDGRID_ENVIRONMENT", "test")
    monkeypatch.setenv("QKDGRID_OUTPUT_DIR", str(tmp_path / "results"))
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def protocol() -> ProtocolParams:
    return ProtocolParams()


@pytest.fixture
def channel() -> ChannelModel:
    return ChannelModel()
