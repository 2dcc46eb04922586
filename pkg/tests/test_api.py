"""
Tests for the HTTP API
"""

import pytest
from fastapi import FastAPI
from fastapi.testclient import TestClient

from qkdgrid import __version__
from qkdgrid.api.routes import monitoring
from qkdgrid.core.config import get_settings
from qkdgrid.main import app, configure_cors


@pytest.fixture
def client():
    with TestClient(app) as c:
        yield c


def test_root_and_health(client):
    assert client.get("/").json()["version"] == __version__
    health = client.get("/health").json()
    assert health["status"] == "healthy"
    assert health["environment"] == "test"


def test_keyrate_defaults(client):
    response = client.post("/api/v1/keyrate", json={})
    assert response.status_code == 200
    body = response.json()
    assert body["n_pulses"] == 1_134_034_833
    assert abs(body["ell"] - 2_542_979) <= 2
    assert body["speed"] == pytest.approx(10_988, rel=1e-3)


def test_keyrate_follows_the_configured_pulse_rate(client, monkeypatch):
    monkeypatch.setenv("QKDGRID_DEFAULT_PULSE_RATE", "9.8e6")
    get_settings.cache_clear()
    body = client.post("/api/v1/keyrate", json={}).json()
    assert body["n_pulses"] == 1_134_034_833
    assert body["speed"] == pytest.approx(2 * 10_988, rel=1e-3)


def test_explicit_pulse_rate_wins_over_the_setting(client, monkeypatch):
    monkeypatch.setenv("QKDGRID_DEFAULT_PULSE_RATE", "9.8e6")
    get_settings.cache_clear()
    body = client.post(
        "/api/v1/keyrate", json={"channel": {"pulse_rate": 4.9e6}}
    ).json()
    assert body["speed"] == pytest.approx(10_988, rel=1e-3)


def test_keyrate_rejects_equal_decoys(client):
    response = client.post(
        "/api/v1/keyrate", json={"protocol": {"k2": 0.1, "k3": 0.1}}
    )
    assert response.status_code == 422


def test_keyrate_reports_unreachable_targets(client):
    response = client.post(
        "/api/v1/keyrate", json={"channel": {"length_km": 5000, "p_dc": 0.0}}
    )
    assert response.status_code == 500
    assert "X-basis" in response.json()["detail"]


def test_sweep(client):
    response = client.post(
        "/api/v1/sweep", json={"lengths": [10, 5], "e_mis": [5e-4]}
    )
    assert response.status_code == 200
    rows = response.json()["rows"]
    assert [r["length_km"] for r in rows] == [5, 10]
    assert rows[0]["speed"] > rows[1]["speed"] > 0


def test_sweep_needs_values(client):
    response = client.post("/api/v1/sweep", json={"lengths": [], "e_mis": [5e-4]})
    assert response.status_code == 422


def test_simulation_summary(client):
    cfg = {
        "duration": 2.0,
        "tx_rate": 10.0,
        "channels": [{"controller_id": 1, "initial_bits": 640}],
    }
    response = client.post("/api/v1/simulations", json=cfg)
    assert response.status_code == 200
    summary = response.json()
    assert summary["final_levels"] == {"1": 0}
    assert summary["packets"]["1"]["control_sent"] == 10
    assert summary["exhaustion_intervals"][0]["start"] == pytest.approx(1.0)


def test_simulation_rejects_bad_configs(client):
    response = client.post(
        "/api/v1/simulations", json={"duration": 5.0, "tx_rate": 100, "latency": 0.5}
    )
    assert response.status_code == 422


def test_metrics_are_exposed(client):
    client.post("/api/v1/keyrate", json={})
    body = client.get("/metrics").text
    assert "qkdgrid_keyrate_duration_seconds" in body


def test_cors_is_off_without_configured_origins(client):
    response = client.get("/health", headers={"Origin": "http://ui.example"})
    assert "access-control-allow-origin" not in response.headers


def test_cors_allows_configured_origins():
    api = FastAPI()
    api.include_router(monitoring.router)
    configure_cors(api, ["http://ui.example"])
    with TestClient(api) as c:
        response = c.get("/health", headers={"Origin": "http://ui.example"})
    assert response.headers["access-control-allow-origin"] == "http://ui.example"
