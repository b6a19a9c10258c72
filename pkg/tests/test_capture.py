import json
import urllib.error
import urllib.request

import pytest

from mosaic.capture import CaptureServer
from mosaic.core import load_bundle

RUBRIC = {
    "version": "1",
    "items": [
        {"id": "eye_contact", "title": "Eye contact",
         "levels": ["a", "b", "c", "d", "e"]},
        {"id": "conclusions", "title": "Conclusions",
         "levels": ["a", "b", "c", "d", "e"], "phase": "conclusion"},
    ],
}
LABELS = ["nervous_movement", "reading_notes", "eye_contact"]


def request(method, url, body=None):
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(url, data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=5) as resp:
            return resp.status, json.loads(resp.read().decode() or "{}")
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read().decode() or "{}")


@pytest.fixture()
def server(tmp_path):
    rubric_path = tmp_path / "rubric.json"
    rubric_path.write_text(json.dumps(RUBRIC))
    labels_path = tmp_path / "labels.txt"
    labels_path.write_text("\n".join(LABELS) + "\n")
    out = tmp_path / "capture"
    srv = CaptureServer(
        out_dir=out, rubric_path=rubric_path, labels_path=labels_path,
        port=0, evaluators=[("prof1", "professor"), ("peer1", "peer"),
                            ("peer2", "peer")],
    ).start_background()
    srv.base = f"http://127.0.0.1:{srv.port}"
    srv.out = out
    yield srv
    srv.shutdown()


def start(srv):
    return request("POST", f"{srv.base}/api/v1/start")


class TestLifecycle:
    def test_503_before_start(self, server):
        code, _ = request("GET", f"{server.base}/api/v1/session")
        assert code == 503
        code, _ = request("GET", f"{server.base}/api/v1/rubric")
        assert code == 503

    def test_session_and_rubric_after_start(self, server):
        start(server)
        code, doc = request("GET", f"{server.base}/api/v1/session")
        assert code == 200
        assert doc["annotation_labels"] == LABELS
        code, rubric = request("GET", f"{server.base}/api/v1/rubric")
        assert code == 200
        assert [i["id"] for i in rubric["items"]] == ["eye_contact", "conclusions"]

    def test_unknown_path_404(self, server):
        start(server)
        code, _ = request("GET", f"{server.base}/api/v1/nope")
        assert code == 404


class TestAnnotations:
    def test_instant_annotation_persisted(self, server):
        start(server)
        code, doc = request("POST", f"{server.base}/api/v1/annotations",
                            {"label": "eye_contact", "kind": "instant",
                             "client_ts_ms": 123})
        assert code == 201
        assert "id" in doc and "ts_ms" in doc
        lines = (server.out / "annotations.jsonl").read_text().splitlines()
        assert len(lines) == 1
        record = json.loads(lines[0])
        assert record["label"] == "eye_contact"
        assert record["client_ts_ms"] == 123

    def test_unknown_label_422(self, server):
        start(server)
        code, _ = request("POST", f"{server.base}/api/v1/annotations",
                          {"label": "bogus", "kind": "instant"})
        assert code == 422

    def test_end_without_start_409(self, server):
        start(server)
        code, _ = request("POST", f"{server.base}/api/v1/annotations",
                          {"label": "reading_notes", "kind": "end"})
        assert code == 409

    def test_interval_toggle_pairs(self, server):
        start(server)
        for kind in ("start", "end"):
            code, _ = request("POST", f"{server.base}/api/v1/annotations",
                              {"label": "reading_notes", "kind": kind})
            assert code == 201
        lines = (server.out / "annotations.jsonl").read_text().splitlines()
        kinds = [json.loads(l)["kind"] for l in lines]
        assert kinds == ["start", "end"]

    def test_phase_labels_always_allowed(self, server):
        start(server)
        code, _ = request("POST", f"{server.base}/api/v1/annotations",
                          {"label": "phase:opening", "kind": "start"})
        assert code == 201


def event(ts, actor, kind, item=None, value=None):
    e = {"client_ts_ms": ts, "actor_id": actor, "kind": kind}
    if item is not None:
        e["item_id"] = item
    if value is not None:
        e["value"] = value
    return e


class TestEvents:
    def test_batch_accepted_in_order(self, server):
        start(server)
        batch = [event(i * 10, "peer1", "keypress", "eye_contact", "letter")
                 for i in range(50)]
        code, doc = request("POST", f"{server.base}/api/v1/events", batch)
        assert code == 202
        assert doc["accepted"] == 50
        lines = (server.out / "events" / "interactions.jsonl").read_text().splitlines()
        assert len(lines) == 50
        client_ts = [json.loads(l)["client_ts_ms"] for l in lines]
        assert client_ts == [i * 10 for i in range(50)]

    def test_batch_with_one_bad_event_rejected_atomically(self, server):
        start(server)
        batch = [event(0, "peer1", "item_focus", "eye_contact"),
                 event(10, "peer1", "item_rated", "eye_contact", 9)]
        code, _ = request("POST", f"{server.base}/api/v1/events", batch)
        assert code == 422
        assert not (server.out / "events" / "interactions.jsonl").exists()

    def test_intra_batch_deltas_preserved_exactly(self, server):
        start(server)
        batch = [event(1_000, "peer1", "item_focus", "eye_contact"),
                 event(1_730, "peer1", "item_blur", "eye_contact")]
        request("POST", f"{server.base}/api/v1/events", batch)
        lines = (server.out / "events" / "interactions.jsonl").read_text().splitlines()
        ts = [json.loads(l)["ts_ms"] for l in lines]
        assert ts[1] - ts[0] == 730

    def test_file_order_is_receive_order(self, server):
        start(server)
        request("POST", f"{server.base}/api/v1/events",
                [event(100, "peer1", "click")])
        request("POST", f"{server.base}/api/v1/events",
                [event(50, "peer2", "click")])
        lines = (server.out / "events" / "interactions.jsonl").read_text().splitlines()
        actors = [json.loads(l)["actor_id"] for l in lines]
        assert actors == ["peer1", "peer2"]
        ts = [json.loads(l)["ts_ms"] for l in lines]
        assert ts == sorted(ts)  # rebased timestamps stay monotonic


class TestEvaluations:
    def evaluation(self, scores):
        return {"evaluator_id": "peer1", "role": "peer",
                "scores": scores,
                "comments": {k: "a decent comment" for k in scores}}

    def test_valid_evaluation_201(self, server):
        start(server)
        code, doc = request("POST", f"{server.base}/api/v1/evaluations",
                            self.evaluation({"eye_contact": 4, "conclusions": 3}))
        assert code == 201
        saved = json.loads((server.out / "evaluations" / "peer1.json").read_text())
        assert saved["scores"] == {"eye_contact": 4, "conclusions": 3}
        assert saved["version"] == 1

    def test_score_zero_422(self, server):
        start(server)
        code, _ = request("POST", f"{server.base}/api/v1/evaluations",
                          self.evaluation({"eye_contact": 0, "conclusions": 3}))
        assert code == 422

    def test_missing_item_422(self, server):
        start(server)
        code, _ = request("POST", f"{server.base}/api/v1/evaluations",
                          self.evaluation({"eye_contact": 4}))
        assert code == 422

    def test_resubmission_bumps_version(self, server):
        start(server)
        request("POST", f"{server.base}/api/v1/evaluations",
                self.evaluation({"eye_contact": 4, "conclusions": 3}))
        code, doc = request("POST", f"{server.base}/api/v1/evaluations",
                            self.evaluation({"eye_contact": 5, "conclusions": 3}))
        assert code == 201
        assert doc["version"] == 2
        saved = json.loads((server.out / "evaluations" / "peer1.json").read_text())
        assert saved["scores"]["eye_contact"] == 5
        assert saved["version"] == 2


class TestTokenAuth:
    def test_wrong_token_rejected(self, tmp_path):
        rubric_path = tmp_path / "rubric.json"
        rubric_path.write_text(json.dumps(RUBRIC))
        labels_path = tmp_path / "labels.txt"
        labels_path.write_text("eye_contact\n")
        srv = CaptureServer(out_dir=tmp_path / "cap", rubric_path=rubric_path,
                            labels_path=labels_path, port=0,
                            token="sekrit").start_background()
        try:
            base = f"http://127.0.0.1:{srv.port}"
            code, _ = request("POST", f"{base}/api/v1/start")
            assert code == 401
            code, _ = request("POST", f"{base}/api/v1/start?token=sekrit")
            assert code == 200
        finally:
            srv.shutdown()


class TestCaptureBundleRoundTrip:
    def test_captured_directory_loads_cleanly(self, server):
        start(server)
        request("POST", f"{server.base}/api/v1/annotations",
                {"label": "eye_contact", "kind": "instant"})
        request("POST", f"{server.base}/api/v1/events", [
            event(0, "peer1", "item_focus", "eye_contact"),
            event(300, "peer1", "item_rated", "eye_contact", 4),
            event(400, "peer1", "item_blur", "eye_contact"),
        ])
        for actor, role in (("prof1", "professor"), ("peer1", "peer"), ("peer2", "peer")):
            request("POST", f"{server.base}/api/v1/evaluations", {
                "evaluator_id": actor, "role": role,
                "scores": {"eye_contact": 4, "conclusions": 3},
                "comments": {"eye_contact": "steady gaze overall",
                             "conclusions": "strong wrap-up and recap"},
            })
        bundle = load_bundle(server.out)
        assert len(bundle.annotations) == 1
        assert len(bundle.events) == 3
        assert len(bundle.evaluations) == 3
        # server-assigned timestamps live on the session clock
        assert all(e.ts_ms >= 0 for e in bundle.events)
