"""HTTP API: endpoint contracts, sessions, and refinement invariants."""
import time

import pytest
from fastapi.testclient import TestClient

import oracle
from rexsynth.regex import parse_regex
from rexsynth.service import (
    SESSION_TTL_S,
    TIMEOUT_CEILING_MS,
    Session,
    SessionStore,
    create_app,
)
from rexsynth.synthesis import ExampleSet


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def check_matrix(candidate: dict, positives: list[str], negatives: list[str]) -> None:
    """The matrix must agree with reference semantics and be all-green."""
    r = parse_regex(candidate["regex"])
    matrix = candidate["matches"]
    assert matrix["positive"] == [oracle.omatch(r, s) for s in positives]
    assert matrix["negative"] == [oracle.omatch(r, s) for s in negatives]
    assert all(matrix["positive"]) and not any(matrix["negative"])


class TestParse:
    def test_ranked_sketches(self, client):
        r = client.post("/parse", json={"description": "exactly 3 digits"})
        assert r.status_code == 200
        sketches = r.json()["sketches"]
        assert sketches
        assert sketches[0]["text"] == "Repeat(<num>,3)"
        scores = [s["score"] for s in sketches]
        assert scores == sorted(scores, reverse=True)

    def test_unparseable_gives_empty_list(self, client):
        r = client.post("/parse", json={"description": "qq zz pp"})
        assert r.status_code == 200
        assert r.json()["sketches"] == []

    def test_malformed_body_400(self, client):
        r = client.post("/parse", content=b"not json",
                        headers={"content-type": "application/json"})
        assert r.status_code == 400
        assert client.post("/parse", json={}).status_code == 400

    def test_cors_headers(self, client):
        r = client.post("/parse", json={"description": "a digit"},
                        headers={"Origin": "http://localhost:5173"})
        assert r.headers.get("access-control-allow-origin") == "*"


class TestSynthesize:
    def test_sketch_route(self, client):
        pos, neg = ["123"], ["12", "1234"]
        r = client.post("/synthesize", json={
            "sketch": "?2{<num>}", "positives": pos, "negatives": neg,
        })
        assert r.status_code == 200
        body = r.json()
        assert not body["timed_out"]
        assert body["session_id"]
        texts = [c["regex"] for c in body["candidates"]]
        assert "Repeat(<num>,3)" in texts
        assert len(texts) == len(set(texts))
        for c in body["candidates"]:
            check_matrix(c, pos, neg)

    def test_description_route(self, client):
        r = client.post("/synthesize", json={
            "description": "exactly 3 digits",
            "positives": ["123"], "negatives": ["12", "1234"],
        })
        assert r.status_code == 200
        assert "Repeat(<num>,3)" in [c["regex"] for c in r.json()["candidates"]]

    def test_description_falls_back_to_bare_hole(self, client):
        r = client.post("/synthesize", json={
            "description": "qq zz pp", "positives": ["1"], "negatives": [""],
        })
        assert r.status_code == 200
        assert r.json()["candidates"]

    def test_neither_input_400(self, client):
        r = client.post("/synthesize", json={"positives": ["1"]})
        assert r.status_code == 400
        assert "sketch or a description" in r.json()["detail"]

    def test_contradictory_examples_400(self, client):
        r = client.post("/synthesize", json={
            "sketch": "?{<num>}", "positives": ["1"], "negatives": ["1"],
        })
        assert r.status_code == 400
        assert "contradictory" in r.json()["detail"]

    def test_malformed_sketch_400(self, client):
        r = client.post("/synthesize", json={"sketch": "?{", "positives": ["1"]})
        assert r.status_code == 400

    def test_tiny_budget_times_out_empty(self, client):
        # finding anything consistent here takes ~150ms of search, so one
        # millisecond reliably exhausts the budget first
        r = client.post("/synthesize", json={
            "sketch": "?3{<any>}", "positives": ["123", "12"],
            "negatives": ["1", "1234", "aaa", "ab"], "timeout_ms": 1,
        })
        assert r.status_code == 200
        body = r.json()
        assert body["timed_out"]
        assert body["candidates"] == []

    def test_top_k_cap(self, client):
        r = client.post("/synthesize", json={
            "sketch": "?{<num>,<any>}", "positives": ["1"], "top_k": 2,
        })
        assert len(r.json()["candidates"]) <= 2


class TestRefine:
    def _open_session(self, client):
        r = client.post("/synthesize", json={
            "sketch": "?{<num>,<any>}", "positives": ["1"],
        })
        assert r.status_code == 200
        return r.json()

    def test_reject_removes_candidate_and_examples_grow(self, client):
        opened = self._open_session(client)
        sid = opened["session_id"]
        assert "<any>" in [c["regex"] for c in opened["candidates"]]

        r = client.post(f"/session/{sid}/refine", json={
            "reject": "<any>", "new_negatives": ["a"],
        })
        assert r.status_code == 200
        body = r.json()
        assert body["session_id"] == sid
        texts = [c["regex"] for c in body["candidates"]]
        assert texts and "<any>" not in texts
        for c in body["candidates"]:
            check_matrix(c, ["1"], ["a"])

        # a second round keeps every earlier example in the matrices
        r2 = client.post(f"/session/{sid}/refine", json={
            "reject": texts[0], "new_positives": ["22"],
        })
        assert r2.status_code == 200
        for c in r2.json()["candidates"]:
            assert c["regex"] != texts[0]
            check_matrix(c, ["1", "22"], ["a"])

    def test_stateless_recomputation(self, client):
        opened = self._open_session(client)
        sid = opened["session_id"]
        first = client.post(f"/session/{sid}/refine", json={
            "reject": "<any>", "new_negatives": ["a"],
        }).json()
        second = client.post(f"/session/{sid}/refine", json={
            "reject": first["candidates"][0]["regex"], "new_positives": ["22"],
        }).json()
        # replaying the accumulated examples through a fresh session agrees
        replay = client.post("/synthesize", json={
            "sketch": "?{<num>,<any>}", "positives": ["1", "22"], "negatives": ["a"],
        }).json()
        assert [c["regex"] for c in replay["candidates"]] == [
            c["regex"] for c in second["candidates"]
        ]
        assert replay["candidates"] == second["candidates"]

    def test_unknown_session_404(self, client):
        r = client.post("/session/deadbeef/refine", json={
            "reject": "<num>", "new_positives": ["22"],
        })
        assert r.status_code == 404

    def test_refinement_that_rules_nothing_out_409(self, client):
        sid = self._open_session(client)["session_id"]
        # "1" is matched by <num>: rejecting <num> with it changes nothing
        r = client.post(f"/session/{sid}/refine", json={
            "reject": "<num>", "new_positives": ["7"],
        })
        assert r.status_code == 409
        assert "does not rule out" in r.json()["detail"]
        # no examples at all can never rule anything out
        r = client.post(f"/session/{sid}/refine", json={"reject": "<num>"})
        assert r.status_code == 409

    def test_malformed_reject_400(self, client):
        sid = self._open_session(client)["session_id"]
        r = client.post(f"/session/{sid}/refine", json={
            "reject": "Repeat(", "new_positives": ["22"],
        })
        assert r.status_code == 400

    def test_contradicting_refinement_400(self, client):
        r = client.post("/synthesize", json={
            "sketch": "?{<num>,<any>}", "positives": ["1"], "negatives": ["a"],
        })
        sid = r.json()["session_id"]
        # rules <num> out, but "a" is already a negative
        r = client.post(f"/session/{sid}/refine", json={
            "reject": "<num>", "new_positives": ["a"],
        })
        assert r.status_code == 400
        assert "contradictory" in r.json()["detail"]


class TestSessionStore:
    def _session(self, sid: str) -> Session:
        return Session(
            id=sid, description=None, sketches=["?{<num>}"],
            examples=ExampleSet.of(["1"], []), top_k=5, timeout_ms=1000,
        )

    def test_expired_sessions_are_evicted(self):
        store = SessionStore(ttl_s=0.0)
        store.create(self._session("x"))
        time.sleep(0.01)
        assert store.get("x") is None

    def test_live_sessions_survive(self):
        store = SessionStore()
        store.create(self._session("y"))
        assert store.get("y") is not None

    def test_configured_limits(self):
        assert SESSION_TTL_S == 1800.0
        assert TIMEOUT_CEILING_MS == 60_000
