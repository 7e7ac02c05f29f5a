import warnings

import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from lavgap import __version__
from lavgap.schemas import parse_range
from lavgap.service import app

EXAMPLE = {"model": {"family": "double-phase", "p": 2.0, "q": 2.6, "alpha": 0.5}, "N": 3, "k": 1}
REFERENCE = {"model": {"family": "double-phase", "p": 1.5, "q": 3.0, "alpha": 0.5, "p0": 2.0}, "N": 2, "k": 1}


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


def test_health(client):
    assert client.get("/health").json() == {"status": "ok", "version": __version__}


def test_plan_example(client):
    body = client.post("/plan", json=EXAMPLE).json()
    assert body["ok"] and body["plan"]["setup"] == 3
    assert body["admissibility"]["gamma_interval"] == {"lower": None, "upper": -1.0}
    assert body["config"]["model"]["q"] == 2.6
    assert body["lavgap_version"] == __version__


def test_plan_inadmissible_is_not_an_error(client):
    res = client.post("/plan", json={**EXAMPLE, "model": {**EXAMPLE["model"], "q": 2.4}})
    assert res.status_code == 200 and not res.json()["ok"]


@pytest.mark.parametrize("body", [
    {**EXAMPLE, "k": 3},
    {**EXAMPLE, "setup": 9},
    {**EXAMPLE, "model": {"family": "double-phase", "p": 2.0}},
    {**EXAMPLE, "colour": "blue"},
])
def test_invalid_request_is_422(client, body):
    res = client.post("/plan", json=body)
    assert res.status_code == 422
    assert res.json()["error"] == "invalid request"


def test_incompatible_setup_is_422(client):
    res = client.post("/plan", json={**EXAMPLE, "setup": 4})
    assert res.status_code == 422
    assert res.json() == {"error": "invalid configuration",
                          "detail": "setup 4 needs p0 = N/k = 3, got p0 = 2"}


def test_verify_reference(client):
    body = client.post("/verify", json=REFERENCE).json()
    assert body["ok"] and body["verdict"] == "separating"
    assert abs(body["boundary_pairing"]["value"] - 1.0) < 1e-3
    assert body["config"]["N"] == 2


def test_sweep_needs_range(client):
    assert client.post("/sweep", json=EXAMPLE).status_code == 422


def test_sweep_rows_and_flip(client):
    body = client.post("/sweep", json={**EXAMPLE, "gamma": -1.5, "sweep_range": "2.4:2.7:0.1"}).json()
    assert [r["value"] for r in body["rows"]] == [2.4, 2.5, 2.6, 2.7]
    assert body["I2_flips"] == [{"from": 2.5, "to": 2.6, "before": "divergent", "after": "convergent"}]


def test_sweep_unknown_param(client):
    res = client.post("/sweep", json={**EXAMPLE, "sweep_param": "beta", "sweep_range": "1:2:1"})
    assert res.status_code == 422
    assert "cannot sweep 'beta'" in res.json()["detail"]


def test_cantor(client):
    body = client.post("/cantor", json={"lam": 0.25, "include_generation": True}).json()
    assert body["set"]["dimension"] == pytest.approx(0.5)
    assert abs(body["neighborhood_slope"]["slope"] - 0.5) < 0.05
    assert body["generation_csv"].splitlines()[0] == "depth,a,b"


def test_selftest(client):
    body = client.post("/algebra-selftest", json={"cases": 50, "max_N": 4}).json()
    assert body["ok"] and body["config"]["cases"] == 50


def test_parse_range_includes_stop():
    assert parse_range("2.0:3.0:0.05")[-1] == 3.0
    assert len(parse_range("2.0:3.0:0.05")) == 21
    with pytest.raises(ValueError):
        parse_range("1:0:1")
