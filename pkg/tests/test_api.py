import io
import zipfile

import pytest
from fastapi.testclient import TestClient

from backend import __version__
from backend.main import app
from backend.services.orchestrator import SweepOrchestrator

CAMERA = {"focal_length": 0.015, "f_number": 1.4, "focus_distance": 1.0, "pixel_pitch": 5.6e-6}

TABLE = (
    "d_f_m,f_number,c_max_px,pixel_um,focal_mm,sigma_max_px,mae_max\n"
    "1,1.4,3,5.6,14.4400,4.4600,0.0094\n"
    "1,1,1,8,8.0000,1.5000,0.0010\n"
    "10,2.8,3,4,70.0000,2.5000,0.0050\n"
)


@pytest.fixture
def client(monkeypatch, tmp_path):
    monkeypatch.setenv("DEFOCUS_OUTPUT_DIR", str(tmp_path / "generated"))
    monkeypatch.setenv("SPECTRAL_LAMBDA_SAMPLES", "16")
    monkeypatch.setenv("FREQ_SAMPLES", "33")
    return TestClient(app)


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "healthy", "version": __version__}


def test_mono_otf(client):
    response = client.post("/api/otf/mono", json={"ar_over_lambda": 0.0, "samples": 11})
    assert response.status_code == 200
    rows = response.json()["rows"]
    assert len(rows) == 11
    assert all(row["h_transfer"] == 1.0 for row in rows)
    assert [row["limit"] for row in rows] == [False] * 10 + [True]


def test_mono_otf_rejects_negative_severity(client):
    assert client.post("/api/otf/mono", json={"ar_over_lambda": -1.0}).status_code == 422


def test_spectral_otf(client):
    response = client.post("/api/otf/spectral", json={"camera": CAMERA, "coc_px": 3.0})
    assert response.status_code == 200
    body = response.json()
    assert len(body["u_cpp"]) == 33
    assert body["h_def"][0] == pytest.approx(1.0, abs=1e-6)
    assert body["sigma"] > 0
    assert body["mae"] <= body["rmse"] + 1e-15
    assert body["coc_px"] == pytest.approx(3.0)


def test_spectral_otf_needs_exactly_one_defocus(client):
    response = client.post("/api/otf/spectral", json={"camera": CAMERA, "coc_px": 1.0, "ar_px": 0.1})
    assert response.status_code == 422
    assert client.post("/api/otf/spectral", json={"camera": CAMERA}).status_code == 422


def test_spectral_otf_bad_geometry(client):
    camera = {**CAMERA, "focus_distance": 0.01}
    response = client.post("/api/otf/spectral", json={"camera": camera, "coc_px": 1.0})
    assert response.status_code == 400


def test_unknown_sweep(client):
    assert client.get("/api/status/nope").status_code == 404
    assert client.get("/api/download/nope").status_code == 404


def test_sweep_lifecycle(client):
    request = {
        "f_numbers": [2.8],
        "focus_distances": [10.0],
        "c_max_values": [1.0],
        "pixel_pitches": [5.6e-6],
        "n_depth": 3,
        "collapsed": False,
    }
    response = client.post("/api/sweep", json=request)
    assert response.status_code == 200
    body = response.json()
    assert body["record_count"] == 1
    sweep_id = body["sweep_id"]

    status = client.get(f"/api/status/{sweep_id}").json()
    assert status["status"] == "completed"
    assert status["failed_count"] == 0
    assert status["files"] == ["stats.csv", "table.csv", "table.json"]

    download = client.get(f"/api/download/{sweep_id}")
    assert download.status_code == 200
    with zipfile.ZipFile(io.BytesIO(download.content)) as zf:
        assert sorted(zf.namelist()) == ["stats.csv", "table.csv", "table.json"]


def test_finished_sweeps_are_evicted_but_still_served(client, monkeypatch):
    monkeypatch.setattr(SweepOrchestrator, "max_tracked", 1)
    request = {
        "f_numbers": [2.8],
        "focus_distances": [10.0],
        "c_max_values": [1.0],
        "pixel_pitches": [5.6e-6],
        "n_depth": 3,
        "collapsed": True,
    }
    first = client.post("/api/sweep", json=request).json()["sweep_id"]
    second = client.post("/api/sweep", json=request).json()["sweep_id"]
    assert first not in SweepOrchestrator._sweep_status
    assert second in SweepOrchestrator._sweep_status
    assert len(SweepOrchestrator._sweep_status) == 1
    status = client.get(f"/api/status/{first}").json()
    assert status["status"] == "completed"
    assert status["files"] == ["table.csv", "table.json"]


def test_sweep_rejects_bad_grid(client):
    response = client.post("/api/sweep", json={"reduced": True, "eta": 2.0})
    assert response.status_code == 400


def test_filter_upload(client):
    response = client.post(
        "/api/filter",
        files={"table": ("table.csv", TABLE, "text/csv")},
        data={"mae_max": "0.01"},
    )
    assert response.status_code == 200
    body = response.json()
    assert body["count"] == 2
    assert body["per_depth"] == {"1": 1, "10": 1}
    assert [s["count"] for s in body["statistics"]] == [1, 1]


def test_filter_upload_bad_schema(client):
    response = client.post(
        "/api/filter",
        files={"table": ("table.csv", "a,b\n1,2\n", "text/csv")},
    )
    assert response.status_code == 400
