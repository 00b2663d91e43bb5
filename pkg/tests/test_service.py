"""HTTP API contract: endpoints, status codes, wire format, determinism."""

import time

import pytest
from fastapi.testclient import TestClient

from knet.service import create_app


@pytest.fixture(scope="module")
def client(kb_dir):
    return TestClient(create_app(kb_dir))


def new_session(client, kb):
    response = client.post("/sessions", json={"kb": kb})
    assert response.status_code == 200
    return response.json()["session_id"]


class TestCatalog:
    def test_list_kbs(self, client):
        kbs = client.get("/kbs").json()
        assert kbs == [
            {"name": "chain", "kind": "belief", "node_count": 2},
            {"name": "diamond", "kind": "belief", "node_count": 4},
            {"name": "figure1", "kind": "decision", "node_count": 5},
        ]

    def test_get_kb_without_tables(self, client):
        doc = client.get("/kbs/figure1").json()
        assert doc["kind"] == "decision"
        by_id = {n["id"]: n for n in doc["nodes"]}
        assert by_id["treat"]["alternatives"] == ["treat", "no_treat"]
        assert by_id["disease"]["meta"]["question"]
        assert by_id["disease"]["meta"]["display"]["color"] == [178, 34, 34]
        assert "cpt" not in by_id["disease"]

    def test_get_kb_with_tables(self, client):
        doc = client.get("/kbs/chain?tables=true").json()
        by_id = {n["id"]: n for n in doc["nodes"]}
        assert by_id["A"]["cpt"] == [[0.2, 0.8]]

    def test_unknown_kb(self, client):
        assert client.get("/kbs/zz").status_code == 404
        assert client.post("/sessions", json={"kb": "zz"}).status_code == 404

    def test_invalid_kb_files_are_skipped(self, tmp_path, kb_dir, capsys):
        (tmp_path / "bad.knet.json").write_text("{}", encoding="utf-8")
        chain_text = (kb_dir / "chain.knet.json").read_text(encoding="utf-8")
        (tmp_path / "good.knet.json").write_text(chain_text, encoding="utf-8")
        client = TestClient(create_app(tmp_path))
        assert [k["name"] for k in client.get("/kbs").json()] == ["good"]
        assert "bad.knet.json" in capsys.readouterr().err


class TestFindings:
    def test_put_finding_updates_beliefs(self, client):
        sid = new_session(client, "chain")
        response = client.put(f"/sessions/{sid}/findings/B", json={"state": "t"})
        assert response.status_code == 200
        assert response.json()["beliefs"]["A"]["t"] == pytest.approx(0.6923077, abs=1e-6)

    def test_put_on_value_node_is_422(self, client):
        sid = new_session(client, "figure1")
        response = client.put(f"/sessions/{sid}/findings/value", json={"state": "x"})
        assert response.status_code == 422
        assert response.json()["error"] == "not_instantiable"

    def test_put_invalid_state_is_422(self, client):
        sid = new_session(client, "chain")
        response = client.put(f"/sessions/{sid}/findings/B", json={"state": "zz"})
        assert response.status_code == 422
        assert response.json()["error"] == "invalid_state"

    def test_put_unknown_node_is_404(self, client):
        sid = new_session(client, "chain")
        assert client.put(f"/sessions/{sid}/findings/zz", json={"state": "t"}).status_code == 404

    def test_impossible_evidence_409_leaves_beliefs_unchanged(self, client):
        sid = new_session(client, "diamond")
        client.put(f"/sessions/{sid}/findings/B", json={"state": "f"})
        client.put(f"/sessions/{sid}/findings/C", json={"state": "f"})
        before = client.get(f"/sessions/{sid}/beliefs").content
        response = client.put(f"/sessions/{sid}/findings/D", json={"state": "t"})
        assert response.status_code == 409
        assert response.json()["error"] == "impossible_evidence"
        assert client.get(f"/sessions/{sid}/beliefs").content == before

    def test_delete_finding(self, client):
        sid = new_session(client, "chain")
        fresh = client.get(f"/sessions/{sid}/beliefs").content
        client.put(f"/sessions/{sid}/findings/B", json={"state": "t"})
        response = client.delete(f"/sessions/{sid}/findings/B")
        assert response.status_code == 200
        assert client.get(f"/sessions/{sid}/beliefs").content == fresh

    def test_delete_unasserted_is_404(self, client):
        sid = new_session(client, "chain")
        response = client.delete(f"/sessions/{sid}/findings/B")
        assert response.status_code == 404
        assert response.json()["error"] == "not_asserted"

    def test_session_view(self, client):
        sid = new_session(client, "figure1")
        client.put(f"/sessions/{sid}/findings/lab_test", json={"state": "positive"})
        doc = client.get(f"/sessions/{sid}").json()
        assert doc["kb"] == "figure1"
        assert doc["findings"] == {"lab_test": "positive"}
        assert doc["history_len"] == 2
        assert set(doc["beliefs"]) == {"disease", "lab_test", "patho_state"}


class TestRecommendation:
    def test_decision_network(self, client):
        sid = new_session(client, "figure1")
        doc = client.get(f"/sessions/{sid}/recommendation").json()
        assert doc["best"]["configuration"] == {"treat": "no_treat"}
        assert [e["configuration"]["treat"] for e in doc["ranking"]] == ["no_treat", "treat"]

    def test_reranks_after_finding(self, client):
        sid = new_session(client, "figure1")
        client.put(f"/sessions/{sid}/findings/lab_test", json={"state": "positive"})
        doc = client.get(f"/sessions/{sid}/recommendation").json()
        assert doc["best"]["configuration"] == {"treat": "treat"}

    def test_belief_network_is_409(self, client):
        sid = new_session(client, "chain")
        response = client.get(f"/sessions/{sid}/recommendation")
        assert response.status_code == 409
        assert response.json()["error"] == "not_decision_network"


class TestWhatIf:
    def test_non_mutating(self, client):
        sid = new_session(client, "figure1")
        before = client.get(f"/sessions/{sid}/beliefs").content
        history_len = client.get(f"/sessions/{sid}").json()["history_len"]
        doc = client.post(
            f"/sessions/{sid}/whatif", json={"findings": {"lab_test": "positive"}}
        ).json()
        assert doc["recommendation"]["best"]["configuration"] == {"treat": "treat"}
        assert client.get(f"/sessions/{sid}/beliefs").content == before
        assert client.get(f"/sessions/{sid}").json()["history_len"] == history_len

    def test_impossible_overlay_409(self, client):
        sid = new_session(client, "diamond")
        response = client.post(
            f"/sessions/{sid}/whatif",
            json={"findings": {"B": "f", "C": "f", "D": "t"}},
        )
        assert response.status_code == 409

    def test_unknown_node_404(self, client):
        sid = new_session(client, "chain")
        assert client.post(f"/sessions/{sid}/whatif", json={"findings": {"zz": "t"}}).status_code == 404


class TestSessionLifecycle:
    def test_unknown_session_404(self, client):
        for path in ("", "/beliefs", "/history", "/export", "/recommendation"):
            assert client.get(f"/sessions/nope{path}").status_code == 404

    def test_history_and_export(self, client):
        sid = new_session(client, "chain")
        client.put(f"/sessions/{sid}/findings/B", json={"state": "t"})
        client.delete(f"/sessions/{sid}/findings/B")
        history = client.get(f"/sessions/{sid}/history").json()
        assert [e["kind"] for e in history] == ["created", "asserted", "retracted"]
        assert history[1]["state"] == "t"
        export = client.get(f"/sessions/{sid}/export").json()
        assert export["kb_name"] == "chain"
        assert export["events"] == history

    def test_idle_sessions_evicted(self, kb_dir):
        client = TestClient(create_app(kb_dir, session_ttl=0.0))
        sid = new_session(client, "chain")
        time.sleep(0.01)
        assert client.get(f"/sessions/{sid}").status_code == 404


class TestDeterminism:
    def test_identical_state_identical_bytes(self, client):
        sid1 = new_session(client, "diamond")
        sid2 = new_session(client, "diamond")
        for sid in (sid1, sid2):
            client.put(f"/sessions/{sid}/findings/D", json={"state": "t"})
        assert (
            client.get(f"/sessions/{sid1}/beliefs").content
            == client.get(f"/sessions/{sid2}/beliefs").content
        )

    def test_api_replay_reproduces_beliefs_bytes(self, client):
        sid = new_session(client, "diamond")
        client.put(f"/sessions/{sid}/findings/B", json={"state": "f"})
        client.put(f"/sessions/{sid}/findings/C", json={"state": "f"})
        client.put(f"/sessions/{sid}/findings/D", json={"state": "t"})  # rejected
        client.delete(f"/sessions/{sid}/findings/C")
        client.put(f"/sessions/{sid}/findings/D", json={"state": "f"})
        want = client.get(f"/sessions/{sid}/beliefs").content

        history = client.get(f"/sessions/{sid}/history").json()
        twin = new_session(client, "diamond")
        for event in history:
            if event["kind"] in ("asserted", "rejected"):
                client.put(
                    f"/sessions/{twin}/findings/{event['node']}",
                    json={"state": event["state"]},
                )
            elif event["kind"] == "retracted":
                client.delete(f"/sessions/{twin}/findings/{event['node']}")
        assert client.get(f"/sessions/{twin}/beliefs").content == want
