import pytest
from fastapi.testclient import TestClient

from vplt.api import builtin_machine
from vplt.service import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


@pytest.fixture(scope="module")
def disj_text():
    return builtin_machine("disj")


def test_health(client):
    assert client.get("/health").json()["status"] == "ok"


def test_exact_route(client, disj_text):
    r = client.post("/exact", json={"vpa": disj_text, "stream": "0 1 0' 0'"})
    assert r.status_code == 200 and r.json()["accepted"]
    r = client.post("/exact", json={"vpa": disj_text, "stream": "1 1'"})
    assert r.json() == {**r.json(), "accepted": False}


def test_malformed_is_422(client, disj_text):
    assert client.post("/exact", json={"vpa": disj_text, "stream": "0 z"}).status_code == 422
    assert client.post("/exact", json={"vpa": "not a machine", "stream": "0"}).status_code == 422
    assert client.post("/exact", json={"stream": "0"}).status_code == 422


def test_test_route(client, disj_text):
    r = client.post("/test", json={"vpa": disj_text, "stream": "%n 2\n0 0'", "seed": 1})
    body = r.json()
    assert r.status_code == 200 and body["verdict"] == "accept" and body["T"] >= 1
    r = client.post("/test", json={"vpa": disj_text, "stream": "0 0'", "epsilon": "oops"})
    assert r.status_code == 422


def test_oracle_routes(client, disj_text):
    r = client.post("/oracle/bdist", json={"u": "0 0'", "v": ""})
    assert r.json() == {"distance": 2}
    r = client.post("/oracle/fardist", json={"vpa": disj_text, "stream": "1 1'", "bound": 6})
    assert r.json() == {"distance": 4, "bound": 6, "n": 2, "exceeded": False}
    r = client.post("/oracle/fardist", json={"vpa": disj_text, "stream": "1 1'", "bound": 1})
    assert r.json()["exceeded"] and r.json()["distance"] is None


def test_generator_routes(client, disj_text):
    r = client.post("/gen/disj", json={"n": 20, "mode": "far", "seed": 2})
    assert r.json()["n"] == 20 and r.json()["certificate"]
    r = client.post("/gen/member", json={"vpa": disj_text, "n": 12, "seed": 2})
    assert r.status_code == 200 and r.json()["n"] == 12


def test_run_route(client, disj_text):
    cfg = {"vpa": "disj", "generator": {"kind": "member"}, "n": [16], "trials": 2}
    r = client.post("/run", json={"config": cfg, "vpa": disj_text})
    assert r.status_code == 200
    assert r.json()["csv"].splitlines()[0].startswith("n,seed")
    bad = {"vpa": "disj", "generator": {"kind": "member"}, "n": [16], "trials": 0}
    assert client.post("/run", json={"config": bad, "vpa": disj_text}).status_code == 422
