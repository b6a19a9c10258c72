"""Live capture HTTP service.

Receives observer annotations, evaluator interaction events, and rubric
submissions during a presentation, writing them in bundle format so the
resulting directory loads straight into the analysis pipeline.

Clock policy: client clocks are untrusted. Annotation timestamps are the
server receive time relative to the explicit session start. Event batches
are rebased: the newest client timestamp in a batch maps to the receive
time, which preserves intra-batch deltas exactly while keeping one
authoritative clock. Client timestamps are persisted for skew diagnostics.

Stream files are append-only while the server runs; a line, once written,
is never mutated. Writes to each file are serialized through a lock so
concurrent requests append atomically per line.
"""
from __future__ import annotations

import json
import mimetypes
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from . import ingest
from .errors import ValidationError
from .model import ANNOTATION_KINDS, EVENT_KINDS, Evaluation

API_PREFIX = "/api/v1"


class CaptureState:
    """Shared server state: immutable config plus the append-only writers."""

    def __init__(self, out_dir, rubric_bytes, labels, session_id, presenter_id,
                 planned_duration_ms, qa_duration_ms, evaluators=None, token=None):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        (self.out_dir / "events").mkdir(exist_ok=True)
        (self.out_dir / "evaluations").mkdir(exist_ok=True)

        self.rubric_bytes = rubric_bytes
        self.rubric = ingest.parse_rubric(rubric_bytes)
        self.labels = list(labels)
        self.session_id = session_id
        self.presenter_id = presenter_id
        self.planned_duration_ms = planned_duration_ms
        self.qa_duration_ms = qa_duration_ms
        self.evaluators = list(evaluators or [])
        self.token = token

        self.lock = threading.Lock()
        self.annotation_lock = threading.Lock()
        self.event_lock = threading.Lock()
        self.eval_lock = threading.Lock()

        self.started = False
        self.start_monotonic = None
        self.annotation_counter = 0
        self.open_intervals = {}   # label -> open count
        self.last_event_ts = 0
        self.eval_versions = {}    # actor -> last version

    def now_ms(self):
        return int((time.monotonic() - self.start_monotonic) * 1000)

    def start(self):
        with self.lock:
            if self.started:
                return False
            self.started = True
            self.start_monotonic = time.monotonic()
            self._write_descriptor()
            return True

    def _write_descriptor(self):
        descriptor = {
            "id": self.session_id,
            "presenter_id": self.presenter_id,
            "evaluators": [{"id": a, "role": r} for a, r in self.evaluators],
            "observers": [],
            "planned_duration_ms": self.planned_duration_ms,
            "qa_duration_ms": self.qa_duration_ms,
            "sync_map": {"events": 0, "annotations": 0},
            "streams": {},
            "aoi_config": [],
            "annotation_labels": self.labels,
            "thresholds": {},
        }
        (self.out_dir / "session.json").write_text(
            json.dumps(descriptor, indent=2) + "\n", "utf-8"
        )
        (self.out_dir / "rubric.json").write_bytes(self.rubric_bytes)

    def append_annotation(self, label, kind, client_ts_ms):
        """Validate, timestamp, and persist one annotation line."""
        if kind not in ANNOTATION_KINDS:
            raise ValidationError(f"unknown annotation kind {kind!r}")
        if label not in self.labels and not label.startswith("phase:"):
            raise ValidationError(f"unknown annotation label {label!r}")
        with self.annotation_lock:
            if kind == "start":
                self.open_intervals[label] = self.open_intervals.get(label, 0) + 1
            elif kind == "end":
                if self.open_intervals.get(label, 0) <= 0:
                    raise IntervalNotOpen(label)
                self.open_intervals[label] -= 1
            self.annotation_counter += 1
            ann_id = f"ann-{self.annotation_counter:06d}"
            ts = self.now_ms()
            record = {
                "id": ann_id, "label": label, "kind": kind, "ts_ms": ts,
                "source": "console",
            }
            if client_ts_ms is not None:
                record["client_ts_ms"] = int(client_ts_ms)
            with open(self.out_dir / "annotations.jsonl", "a", encoding="utf-8") as f:
                f.write(json.dumps(record, separators=(",", ":")) + "\n")
        return ann_id, ts

    def append_events(self, batch):
        """Atomically validate and persist an event batch in order."""
        if not isinstance(batch, list) or not batch:
            raise ValidationError("event batch must be a non-empty array")
        cleaned = []
        for i, raw in enumerate(batch):
            if not isinstance(raw, dict):
                raise ValidationError(f"event {i} is not an object")
            client_ts = raw.get("client_ts_ms")
            if isinstance(client_ts, bool) or not isinstance(client_ts, int):
                raise ValidationError(f"event {i}: client_ts_ms must be an integer")
            actor = raw.get("actor_id")
            if not actor or not isinstance(actor, str):
                raise ValidationError(f"event {i}: actor_id must be a non-empty string")
            kind = raw.get("kind")
            if kind not in EVENT_KINDS:
                raise ValidationError(f"event {i}: unknown kind {kind!r}")
            item_id = raw.get("item_id")
            if item_id is not None and not isinstance(item_id, str):
                raise ValidationError(f"event {i}: item_id must be a string or null")
            value = raw.get("value")
            if isinstance(value, bool) or (
                value is not None and not isinstance(value, (str, int))
            ):
                raise ValidationError(f"event {i}: value must be string, integer, or null")
            if kind == "item_rated":
                if not isinstance(value, int) or not 1 <= value <= 5:
                    raise ValidationError(f"event {i}: item_rated requires integer value 1..5")
                if not item_id:
                    raise ValidationError(f"event {i}: item_rated requires item_id")
            if kind in ("slide_advance", "slide_back") and item_id is not None:
                raise ValidationError(f"event {i}: {kind} must not carry item_id")
            cleaned.append((client_ts, actor, kind, item_id, value))

        with self.event_lock:
            now = self.now_ms()
            # newest client timestamp maps to the receive time; if that would
            # push the batch before session start, shift the whole batch
            # instead of clamping per event, so intra-batch deltas survive
            skew = now - max(c[0] for c in cleaned)
            if min(c[0] for c in cleaned) + skew < 0:
                skew = -min(c[0] for c in cleaned)
            lines = []
            for client_ts, actor, kind, item_id, value in cleaned:
                ts = client_ts + skew
                ts = max(ts, self.last_event_ts)  # keep the file monotonic
                self.last_event_ts = ts
                record = {"ts_ms": ts, "actor_id": actor, "kind": kind}
                if item_id is not None:
                    record["item_id"] = item_id
                if value is not None:
                    record["value"] = value
                record["client_ts_ms"] = client_ts
                lines.append(json.dumps(record, separators=(",", ":")))
            with open(self.out_dir / "events" / "interactions.jsonl", "a",
                      encoding="utf-8") as f:
                f.write("\n".join(lines) + "\n")
        return len(cleaned)

    def store_evaluation(self, doc):
        data = json.dumps(doc).encode("utf-8")
        evaluation, _warnings = ingest.parse_evaluation(data, self.rubric)
        with self.eval_lock:
            # resubmission replaces the document with a version bump
            version = self.eval_versions.get(evaluation.evaluator_id, 0) + 1
            self.eval_versions[evaluation.evaluator_id] = version
            versioned = Evaluation(
                evaluation.evaluator_id, evaluation.role,
                evaluation.scores, evaluation.comments, version,
            )
            out = self.out_dir / "evaluations" / f"{evaluation.evaluator_id}.json"
            out.write_bytes(ingest.serialize_evaluation(versioned))
        return evaluation.evaluator_id, version

    def session_document(self):
        return {
            "id": self.session_id,
            "presenter_id": self.presenter_id,
            "annotation_labels": self.labels,
            "evaluators": [{"id": a, "role": r} for a, r in self.evaluators],
            "planned_duration_ms": self.planned_duration_ms,
            "qa_duration_ms": self.qa_duration_ms,
        }


class IntervalNotOpen(ValidationError):
    def __init__(self, label):
        super().__init__(f"end for never-started interval {label!r}")
        self.label = label


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "mosaic-capture/1.0"

    # quiet by default; the server is often run inside tests
    def log_message(self, fmt, *args):
        pass

    @property
    def state(self) -> CaptureState:
        return self.server.state

    def _send_json(self, code, doc):
        body = json.dumps(doc).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self):
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return None
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return None

    def _authorized(self, query):
        if self.state.token is None:
            return True
        return query.get("token", [None])[0] == self.state.token

    def do_GET(self):
        parsed = urlparse(self.path)
        query = parse_qs(parsed.query)
        if not self._authorized(query):
            self._send_json(401, {"error": "bad or missing token"})
            return
        path = parsed.path
        if path == f"{API_PREFIX}/session":
            if not self.state.started:
                self._send_json(503, {"error": "session not started"})
                return
            self._send_json(200, self.state.session_document())
        elif path == f"{API_PREFIX}/rubric":
            if not self.state.started:
                self._send_json(503, {"error": "session not started"})
                return
            self._send_json(200, json.loads(self.state.rubric_bytes.decode("utf-8")))
        elif path.startswith(API_PREFIX):
            self._send_json(404, {"error": "unknown endpoint"})
        else:
            self._serve_static(path)

    def _serve_static(self, path):
        static_dir = getattr(self.server, "static_dir", None)
        if static_dir is None:
            self._send_json(404, {"error": "no static assets configured"})
            return
        rel = path.lstrip("/") or "index.html"
        target = (Path(static_dir) / rel).resolve()
        if not str(target).startswith(str(Path(static_dir).resolve())) or not target.is_file():
            self._send_json(404, {"error": "not found"})
            return
        body = target.read_bytes()
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        parsed = urlparse(self.path)
        query = parse_qs(parsed.query)
        if not self._authorized(query):
            self._send_json(401, {"error": "bad or missing token"})
            return
        path = parsed.path
        if path == f"{API_PREFIX}/start":
            fresh = self.state.start()
            self._send_json(200, {"started": True, "fresh": fresh})
            return
        if not self.state.started:
            self._send_json(503, {"error": "session not started"})
            return

        if path == f"{API_PREFIX}/annotations":
            doc = self._read_json()
            if not isinstance(doc, dict):
                self._send_json(422, {"error": "body must be a JSON object"})
                return
            try:
                ann_id, ts = self.state.append_annotation(
                    doc.get("label"), doc.get("kind", "instant"),
                    doc.get("client_ts_ms"),
                )
            except IntervalNotOpen as exc:
                self._send_json(409, {"error": str(exc)})
                return
            except ValidationError as exc:
                self._send_json(422, {"error": str(exc)})
                return
            self._send_json(201, {"id": ann_id, "ts_ms": ts})
        elif path == f"{API_PREFIX}/events":
            doc = self._read_json()
            try:
                accepted = self.state.append_events(doc)
            except ValidationError as exc:
                self._send_json(422, {"error": str(exc)})
                return
            self._send_json(202, {"accepted": accepted})
        elif path == f"{API_PREFIX}/evaluations":
            doc = self._read_json()
            if not isinstance(doc, dict):
                self._send_json(422, {"error": "body must be a JSON object"})
                return
            try:
                actor, version = self.state.store_evaluation(doc)
            except ValidationError as exc:
                self._send_json(422, {"error": str(exc)})
                return
            self._send_json(201, {"evaluator_id": actor, "version": version})
        else:
            self._send_json(404, {"error": "unknown endpoint"})


class CaptureServer:
    """Owns the HTTP server thread and the capture state."""

    def __init__(self, out_dir, rubric_path, labels_path, port=0, token=None,
                 static_dir=None, session_id="capture-session",
                 presenter_id="presenter", planned_duration_ms=600_000,
                 qa_duration_ms=300_000, evaluators=None, auto_start=False):
        rubric_bytes = Path(rubric_path).read_bytes()
        labels = [
            line.strip()
            for line in Path(labels_path).read_text("utf-8").splitlines()
            if line.strip()
        ]
        self.state = CaptureState(
            out_dir, rubric_bytes, labels, session_id, presenter_id,
            planned_duration_ms, qa_duration_ms, evaluators, token,
        )
        self.httpd = ThreadingHTTPServer(("127.0.0.1", port), _Handler)
        self.httpd.state = self.state
        self.httpd.static_dir = static_dir
        self.port = self.httpd.server_address[1]
        self._thread = None
        if auto_start:
            self.state.start()

    def serve_forever(self):
        self.httpd.serve_forever()

    def start_background(self):
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def shutdown(self):
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
