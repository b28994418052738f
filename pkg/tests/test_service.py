from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from pepforge.config import AppConfig
from pepforge.service import create_app

SEED = "O=C1CNC(=O)CN1"
CAND = "O=C1CNC(=O)C(C)N1"


@pytest.fixture
def client():
    return TestClient(create_app(AppConfig()))


def score(client, candidates, session=None):
    body = {"seed_smiles": SEED, "candidates": [{"smiles": c} for c in candidates]}
    if session:
        body["session"] = session
    r = client.post("/score", json=body)
    assert r.status_code == 200, r.text
    return r.json()["results"]


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"
    assert body["config_hash"] == AppConfig().config_hash()
    assert body["history_size"] == 0


def test_score_breakdown(client):
    (res,) = score(client, [CAND])
    assert res["valid"]
    r = res["reward"]
    assert res["total"] == pytest.approx(r["dup_fac"] * (0.8 * r["prop_smooth"] + 0.2 * r["sim_fac"]), abs=1e-12)


def test_duplicates_in_one_batch(client):
    a, b, c = score(client, [CAND, CAND, CAND])
    assert [a["reward"]["dup_fac"], b["reward"]["dup_fac"], c["reward"]["dup_fac"]] == pytest.approx([1, 1 / 2, 1 / 3])


def test_sessions_are_isolated(client):
    score(client, [CAND], "run-a")
    (res,) = score(client, [CAND], "run-b")
    assert res["reward"]["dup_fac"] == 1.0
    assert client.get("/health").json()["sessions"] == {"run-a": 1, "run-b": 1}


def test_invalid_candidate_is_stateless(client):
    (bad,) = score(client, ["C1CC"])
    assert bad == {**bad, "valid": False, "total": 0.0}
    assert bad["error"]
    assert client.get("/health").json()["history_size"] == 0


def test_bad_bodies_get_400(client):
    r = client.post("/score", json={"seed_smiles": SEED, "candidates": [{"smile": "C"}]})
    assert r.status_code == 400
    assert r.json()["detail"][0]["loc"] == "body.candidates.0.smiles"
    assert client.post("/advantages", json={"rewards": "x"}).status_code == 400


def test_semantic_errors_get_422(client):
    assert client.post("/score", json={"seed_smiles": "C1CC", "candidates": []}).status_code == 422
    assert client.post("/advantages", json={"rewards": [1.0]}).status_code == 422
    body = {"rewards": [1, 2], "logp_theta": [[0.0]], "logp_old": [[0.0]], "logp_ref": [[0.0]]}
    assert client.post("/objective", json=body).status_code == 422


def test_advantages_endpoint(client):
    adv = client.post("/advantages", json={"rewards": [1, 2, 3]}).json()["advantages"]
    assert adv == pytest.approx([-1.22474487, 0.0, 1.22474487], abs=1e-8)


def test_objective_endpoint(client):
    lp = [[-1.0, -0.5], [-0.2]]
    body = {"rewards": [0.0, 1.0], "logp_theta": lp, "logp_old": lp, "logp_ref": lp, "gradient": True}
    out = client.post("/objective", json=body).json()
    assert out["objective"] == pytest.approx(0.0, abs=1e-12)
    assert out["advantages"] == [-1.0, 1.0]
    assert len(out["gradient"]) == 2 and len(out["gradient"][0]) == 2
