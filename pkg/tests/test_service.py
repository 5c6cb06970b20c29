"""HTTP surface: request validation, inline endpoints, sweep jobs."""
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from lzsim.config import SweepConfig
from lzsim.service import create_app
from lzsim.sweep import run_sweep

FAST_NUMERICS = {"n_t": 256, "k_max": 100, "substeps": 2}


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


def _wait_for_job(client, job_id, timeout=120.0):
    t0 = time.time()
    while time.time() - t0 < timeout:
        status = client.get(f"/sweeps/{job_id}").json()
        if status["status"] != "running":
            return status
        time.sleep(0.05)
    raise TimeoutError("sweep job did not finish")


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"


def test_spectrum_endpoint(client):
    body = client.post("/spectrum", json={
        "params": {"g_over_omega_r": 0.0, "delta_over_omega_r": 0.0038},
        "eps_min_over_omega_r": -0.5, "eps_max_over_omega_r": 0.5,
        "steps": 3, "levels": 2}).json()
    assert len(body["eps_over_omega_r"]) == 3
    assert len(body["energies_over_omega_r"][0]) == 2
    mid = body["energies_over_omega_r"][1]
    assert mid[1] - mid[0] == pytest.approx(0.0038, rel=1e-9)


def test_gap_scan_endpoint(client):
    body = client.post("/gap-scan", json={
        "level_low": 1, "level_high": 2,
        "eps_min_over_omega_r": -1.02, "eps_max_over_omega_r": -0.98,
        "resolution": 201}).json()
    assert body["eps_min_over_omega_r"] == pytest.approx(-1.0, abs=2e-3)
    assert body["gap_over_omega_r"] == pytest.approx(2 * 0.0019, rel=0.05)
    assert body["at_boundary"] is False


def test_floquet_endpoint_exact_case(client):
    body = client.post("/floquet", json={
        "model": "qubit_structured",
        "params": {"delta_over_omega_r": 0.0, "g_over_omega_r": 0.0},
        "amp_over_omega": 3.0, "eps0_over_omega": 8.25,
        "numerics": FAST_NUMERICS}).json()
    # delta = 0 is exactly solvable: quasienergies +-eps0/2 folded
    q = sorted(body["quasienergies_over_omega"])
    folded = ((8.25 / 2 + 0.5) % 1.0) - 0.5
    assert q == pytest.approx(sorted([folded, -folded]), abs=1e-9)


def test_rwa_endpoint(client):
    body = client.post("/rwa", json={
        "n": 3, "m": 1, "amp_over_omega": 2.0,
        "delta0_over_omega": [1.0, 1.5]}).json()
    assert body["probability"][0] == pytest.approx(0.5)
    assert body["probability"][1] < 0.5


def test_trace_endpoint(client):
    body = client.post("/trace", json={
        "model": "djc", "djc_n": 3,
        "amp_over_omega": 3.0, "eps0_over_omega": 0.0,
        "t_max_over_tau": 2.0, "samples_per_tau": 8,
        "numerics": FAST_NUMERICS}).json()
    assert body["values"][0] == pytest.approx(0.0, abs=1e-9)
    assert len(body["times_over_tau"]) == len(body["values"]) == 17


def test_regions_endpoint(client):
    body = client.post("/regions", json={
        "amp_min_over_omega": 0.0, "amp_max_over_omega": 50.0,
        "eps0_min_over_omega": -100.0 / 3, "eps0_max_over_omega": 100.0 / 3}).json()
    gaps = {b["gap"] for b in body["boundaries"]}
    assert gaps == {"qubit", "photonic_minus", "photonic_plus"}
    labels = {l["region"] for l in body["labels"]}
    assert labels == {"I", "II", "III", "IV", "V", "VI"}


def test_validation_error_is_422(client):
    resp = client.post("/spectrum", json={"unknown_key": 1})
    assert resp.status_code == 422
    resp = client.post("/sweeps", json={"observable": "dissipative_steady"})
    assert resp.status_code == 422


def test_sweep_job_roundtrip(client, tmp_path):
    cfg = {
        "model": "djc", "djc_n": 3,
        "grid": {"amp_min_over_omega": 1.0, "amp_max_over_omega": 2.0,
                 "amp_steps": 2, "eps0_min_over_omega": 0.0,
                 "eps0_max_over_omega": 1.0, "eps0_steps": 3},
        "numerics": FAST_NUMERICS,
    }
    job_id = client.post("/sweeps", json=cfg).json()["job_id"]
    status = _wait_for_job(client, job_id)
    assert status["status"] == "done"
    assert status["n_failed"] == 0

    body = client.get(f"/sweeps/{job_id}/result").json()
    assert len(body["amp_over_omega"]) == 2
    assert len(body["values"]) == 2 and len(body["values"][0]) == 3

    csv_http = client.get(f"/sweeps/{job_id}/result.csv").text
    direct = run_sweep(SweepConfig.model_validate(cfg))
    assert csv_http == direct.to_csv_text()

    cut = client.get(f"/sweeps/{job_id}/cut",
                     params={"axis": "amp", "value": 1.1}).json()
    assert cut["actual"] == 1.0
    assert cut["values"] == pytest.approx(list(direct.values[0]))


def test_job_errors(client):
    assert client.get("/sweeps/deadbeef").status_code == 404
    cfg = {"model": "djc", "djc_n": 3,
           "grid": {"amp_steps": 1, "eps0_steps": 1},
           "numerics": FAST_NUMERICS}
    job_id = client.post("/sweeps", json=cfg).json()["job_id"]
    _wait_for_job(client, job_id)
    bad_cut = client.get(f"/sweeps/{job_id}/cut",
                         params={"axis": "amp", "value": 9999.0})
    assert bad_cut.status_code == 422
