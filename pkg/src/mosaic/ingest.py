"""Parsers and writers for every stream file format in a session bundle.

One record per line, UTF-8 without BOM. CSV is used for heart rate
(smartwatch exports are tabular), JSONL everywhere else. Parsers preserve
line numbers for error reporting and never silently drop lines: every input
line becomes either a sample or a reported issue.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EncodingError,
    MissingItem,
    SchemaError,
    ScoreOutOfRange,
    ValidationError,
)
from .model import (
    ANNOTATION_KINDS,
    EVALUATOR_ROLES,
    EVENT_KINDS,
    JOINT_NAMES,
    Annotation,
    Evaluation,
    GazeSample,
    HeadPoseFrame,
    HeartSample,
    InteractionEvent,
    LandmarkFrame,
    Rubric,
    RubricItem,
    TranscriptWord,
)

HEART_CSV = "heart_csv"
GAZE_JSONL = "gaze_jsonl"
LANDMARKS_JSONL = "landmarks_jsonl"
HEADPOSE_JSONL = "headpose_jsonl"
TRANSCRIPT_JSONL = "transcript_jsonl"
EVENTS_JSONL = "events_jsonl"
ANNOTATIONS_JSONL = "annotations_jsonl"

STREAM_KINDS = (
    HEART_CSV, GAZE_JSONL, LANDMARKS_JSONL, HEADPOSE_JSONL,
    TRANSCRIPT_JSONL, EVENTS_JSONL, ANNOTATIONS_JSONL,
)


@dataclass
class ParseResult:
    samples: list
    issues: list = field(default_factory=list)   # informational (artifacts, ...)
    skipped: list = field(default_factory=list)  # lines yielding no sample
    line_count: int = 0

    def accounted(self) -> bool:
        """No line is silently dropped: every input line is a sample or a
        reported skip."""
        return self.line_count == len(self.samples) + len(self.skipped)


def _decode(data: bytes) -> str:
    if data.startswith(b"\xef\xbb\xbf"):
        raise EncodingError("UTF-8 BOM not allowed in stream files")
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EncodingError(f"stream is not valid UTF-8: {exc}") from exc


def _require(record, line, fields):
    for name in fields:
        if name not in record:
            raise SchemaError(line, name, "missing")


def _int_field(record, line, name):
    v = record.get(name)
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(line, name, "expected integer")
    return v


def _num_field(record, line, name):
    v = record.get(name)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(line, name, "expected number")
    return float(v)


def _str_field(record, line, name):
    v = record.get(name)
    if not isinstance(v, str) or not v:
        raise SchemaError(line, name, "expected non-empty string")
    return v


def _parse_jsonl(data, parse_record):
    text = _decode(data)
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()  # trailing newline
    result = ParseResult(samples=[])
    for line_no, line in enumerate(lines, start=1):
        result.line_count += 1
        stripped = line.strip()
        if not stripped:
            result.skipped.append((line_no, "blank line"))
            continue
        try:
            record = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise SchemaError(line_no, "<record>", f"invalid JSON: {exc.msg}") from exc
        if not isinstance(record, dict):
            raise SchemaError(line_no, "<record>", "expected a JSON object")
        sample, issue = parse_record(record, line_no)
        if sample is not None:
            result.samples.append(sample)
        if issue:
            result.issues.append((line_no, issue))
    return result


# --- per-kind record parsers ----------------------------------------------

def _parse_heart_csv(data):
    text = _decode(data)
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    result = ParseResult(samples=[])
    if not lines or lines[0].strip() != "ts_ms,bpm":
        raise SchemaError(1, "header", "expected 'ts_ms,bpm'")
    for line_no, line in enumerate(lines[1:], start=2):
        result.line_count += 1
        stripped = line.strip()
        if not stripped:
            result.skipped.append((line_no, "blank line"))
            continue
        parts = stripped.split(",")
        if len(parts) != 2:
            raise SchemaError(line_no, "<record>", "expected two comma-separated values")
        try:
            ts = int(parts[0])
        except ValueError as exc:
            raise SchemaError(line_no, "ts_ms", "expected integer") from exc
        try:
            bpm = float(parts[1])
        except ValueError as exc:
            raise SchemaError(line_no, "bpm", "expected number") from exc
        sample = HeartSample(ts, bpm)
        result.samples.append(sample)
        if sample.artifact:
            result.issues.append((line_no, f"bpm {bpm} outside physiologic range, flagged artifact"))
    return result


def _gaze_record(record, line):
    _require(record, line, ("ts_ms", "valid"))
    ts = _int_field(record, line, "ts_ms")
    valid = record["valid"]
    if not isinstance(valid, bool):
        raise SchemaError(line, "valid", "expected boolean")
    if valid:
        x = _num_field(record, line, "x")
        y = _num_field(record, line, "y")
        if not 0.0 <= x <= 1.0:
            raise SchemaError(line, "x", "outside [0,1] for a valid sample")
        if not 0.0 <= y <= 1.0:
            raise SchemaError(line, "y", "outside [0,1] for a valid sample")
        return GazeSample(ts, x, y, True), None
    x = record.get("x")
    y = record.get("y")
    return GazeSample(
        ts,
        float(x) if isinstance(x, (int, float)) and not isinstance(x, bool) else None,
        float(y) if isinstance(y, (int, float)) and not isinstance(y, bool) else None,
        False,
    ), None


def _landmarks_record(record, line):
    _require(record, line, ("ts_ms", "joints"))
    ts = _int_field(record, line, "ts_ms")
    joints_in = record["joints"]
    if not isinstance(joints_in, dict):
        raise SchemaError(line, "joints", "expected object")
    joints = {}
    issue = None
    extra = [name for name in joints_in if name not in JOINT_NAMES]
    if extra:
        issue = f"ignored unknown joints: {', '.join(sorted(extra))}"
    for name in JOINT_NAMES:
        v = joints_in.get(name)
        if v is None:
            continue
        if not isinstance(v, (list, tuple)) or len(v) != 3:
            raise SchemaError(line, name, "expected [x, y, confidence]")
        x, y, c = v
        for comp, label in ((x, "x"), (y, "y"), (c, "confidence")):
            if isinstance(comp, bool) or not isinstance(comp, (int, float)):
                raise SchemaError(line, f"{name}.{label}", "expected number")
        if not 0.0 <= c <= 1.0:
            raise SchemaError(line, f"{name}.confidence", "outside [0,1]")
        joints[name] = (float(x), float(y), float(c))
    return LandmarkFrame(ts, joints), issue


def _headpose_record(record, line):
    _require(record, line, ("ts_ms",))
    ts = _int_field(record, line, "ts_ms")
    if "matrix" in record and record["matrix"] is not None:
        m = record["matrix"]
        if (not isinstance(m, list) or len(m) != 3
                or any(not isinstance(row, list) or len(row) != 3 for row in m)):
            raise SchemaError(line, "matrix", "expected 3x3 array")
        mat = tuple(tuple(float(v) for v in row) for row in m)
        arr = np.array(mat)
        if not np.allclose(arr @ arr.T, np.eye(3), atol=1e-6):
            raise SchemaError(line, "matrix", "not orthonormal within 1e-6")
        if abs(float(np.linalg.det(arr)) - 1.0) > 1e-6:
            raise SchemaError(line, "matrix", "determinant is not +1 within 1e-6")
        return HeadPoseFrame(ts, matrix=mat), None
    for name in ("pitch", "yaw", "roll"):
        if name not in record:
            raise SchemaError(line, name, "missing (need euler angles or matrix)")
    p = _num_field(record, line, "pitch")
    y = _num_field(record, line, "yaw")
    r = _num_field(record, line, "roll")
    if not -90.0 <= p <= 90.0:
        raise SchemaError(line, "pitch", "outside [-90, 90]")
    for v, name in ((y, "yaw"), (r, "roll")):
        if not -180.0 < v <= 180.0:
            raise SchemaError(line, name, "outside (-180, 180]")
    return HeadPoseFrame(ts, euler=(p, y, r)), None


def _transcript_record(record, line):
    _require(record, line, ("word", "start_ms", "end_ms"))
    word = _str_field(record, line, "word")
    start = _int_field(record, line, "start_ms")
    end = _int_field(record, line, "end_ms")
    if end < start:
        raise SchemaError(line, "end_ms", "end before start")
    return TranscriptWord(word, start, end), None


def _event_record(record, line):
    _require(record, line, ("ts_ms", "actor_id", "kind"))
    ts = _int_field(record, line, "ts_ms")
    actor = _str_field(record, line, "actor_id")
    kind = _str_field(record, line, "kind")
    if kind not in EVENT_KINDS:
        raise SchemaError(line, "kind", f"unknown event kind {kind!r}")
    item_id = record.get("item_id")
    if item_id is not None and not isinstance(item_id, str):
        raise SchemaError(line, "item_id", "expected string or null")
    value = record.get("value")
    if isinstance(value, bool) or (value is not None and not isinstance(value, (str, int))):
        raise SchemaError(line, "value", "expected string, integer, or null")
    if kind == "item_rated":
        if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 5:
            raise SchemaError(line, "value", "item_rated requires integer 1..5")
        if not item_id:
            raise SchemaError(line, "item_id", "item_rated requires item_id")
    if kind in ("slide_advance", "slide_back") and item_id is not None:
        raise SchemaError(line, "item_id", f"{kind} must not carry item_id")
    client_ts = record.get("client_ts_ms")
    if client_ts is not None and (isinstance(client_ts, bool) or not isinstance(client_ts, int)):
        raise SchemaError(line, "client_ts_ms", "expected integer or null")
    return InteractionEvent(ts, actor, kind, item_id, value, client_ts), None


def _annotation_record(record, line):
    _require(record, line, ("id", "label", "kind", "ts_ms"))
    kind = _str_field(record, line, "kind")
    if kind not in ANNOTATION_KINDS:
        raise SchemaError(line, "kind", f"unknown annotation kind {kind!r}")
    return Annotation(
        id=_str_field(record, line, "id"),
        label=_str_field(record, line, "label"),
        kind=kind,
        ts_ms=_int_field(record, line, "ts_ms"),
        source=record.get("source") or "",
    ), None


_JSONL_PARSERS = {
    GAZE_JSONL: _gaze_record,
    LANDMARKS_JSONL: _landmarks_record,
    HEADPOSE_JSONL: _headpose_record,
    TRANSCRIPT_JSONL: _transcript_record,
    EVENTS_JSONL: _event_record,
    ANNOTATIONS_JSONL: _annotation_record,
}


def parse_stream(kind, data: bytes) -> ParseResult:
    """Parse a stream file of the given kind into typed samples."""
    if kind == HEART_CSV:
        return _parse_heart_csv(data)
    parser = _JSONL_PARSERS.get(kind)
    if parser is None:
        raise ValueError(f"unknown stream kind {kind!r}")
    return _parse_jsonl(data, parser)


# --- writers (exact parse round-trip; also used by the generator) ----------

def _jsonl_bytes(records):
    return ("".join(json.dumps(r, separators=(",", ":")) + "\n" for r in records)).encode("utf-8")


def serialize_stream(kind, samples) -> bytes:
    if kind == HEART_CSV:
        lines = ["ts_ms,bpm"]
        lines += [f"{s.ts_ms},{s.bpm!r}" for s in samples]
        return ("\n".join(lines) + "\n").encode("utf-8")
    if kind == GAZE_JSONL:
        return _jsonl_bytes(
            {"ts_ms": s.ts_ms, "x": s.x, "y": s.y, "valid": s.valid} for s in samples
        )
    if kind == LANDMARKS_JSONL:
        return _jsonl_bytes(
            {"ts_ms": s.ts_ms, "joints": {n: list(v) for n, v in s.joints.items()}}
            for s in samples
        )
    if kind == HEADPOSE_JSONL:
        def rec(s):
            if s.matrix is not None:
                return {"ts_ms": s.ts_ms, "matrix": [list(row) for row in s.matrix]}
            p, y, r = s.euler
            return {"ts_ms": s.ts_ms, "pitch": p, "yaw": y, "roll": r}
        return _jsonl_bytes(rec(s) for s in samples)
    if kind == TRANSCRIPT_JSONL:
        return _jsonl_bytes(
            {"word": s.word, "start_ms": s.start_ms, "end_ms": s.end_ms} for s in samples
        )
    if kind == EVENTS_JSONL:
        def rec(s):
            r = {"ts_ms": s.ts_ms, "actor_id": s.actor_id, "kind": s.kind}
            if s.item_id is not None:
                r["item_id"] = s.item_id
            if s.value is not None:
                r["value"] = s.value
            if s.client_ts_ms is not None:
                r["client_ts_ms"] = s.client_ts_ms
            return r
        return _jsonl_bytes(rec(s) for s in samples)
    if kind == ANNOTATIONS_JSONL:
        return _jsonl_bytes(
            {"id": s.id, "label": s.label, "kind": s.kind, "ts_ms": s.ts_ms, "source": s.source}
            for s in samples
        )
    raise ValueError(f"unknown stream kind {kind!r}")


# --- rubric and evaluations -------------------------------------------------

def parse_rubric(data: bytes) -> Rubric:
    try:
        doc = json.loads(_decode(data))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"rubric is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "items" not in doc:
        raise ValidationError("rubric must be an object with an 'items' array")
    items = []
    seen = set()
    for i, raw in enumerate(doc["items"]):
        item_id = raw.get("id")
        if not item_id or not isinstance(item_id, str):
            raise ValidationError(f"rubric item {i} has no id")
        if item_id in seen:
            raise ValidationError(f"duplicate rubric item id {item_id!r}")
        seen.add(item_id)
        levels = raw.get("levels")
        if not isinstance(levels, list) or len(levels) != 5:
            raise ValidationError(f"rubric item {item_id!r} needs exactly 5 level descriptions")
        items.append(RubricItem(
            id=item_id,
            title=raw.get("title") or item_id,
            levels=tuple(str(v) for v in levels),
            phase=raw.get("phase"),
            metric_link=raw.get("metric_link"),
        ))
    return Rubric(version=str(doc.get("version", "1")), items=tuple(items))


def serialize_rubric(rubric: Rubric) -> bytes:
    doc = {"version": rubric.version, "items": []}
    for it in rubric.items:
        rec = {"id": it.id, "title": it.title, "levels": list(it.levels)}
        if it.phase:
            rec["phase"] = it.phase
        if it.metric_link:
            rec["metric_link"] = it.metric_link
        doc["items"].append(rec)
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def parse_evaluation(data: bytes, rubric: Rubric):
    """Parse and validate one evaluator's rubric submission.

    Every rubric item must be scored exactly once with an integer 1..5;
    empty comments are allowed but flagged. Returns (Evaluation, warnings).
    """
    try:
        doc = json.loads(_decode(data))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"evaluation is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("evaluation must be a JSON object")
    evaluator = doc.get("evaluator_id")
    if not evaluator or not isinstance(evaluator, str):
        raise ValidationError("evaluation needs evaluator_id")
    role = doc.get("role")
    if role not in EVALUATOR_ROLES:
        raise ValidationError(f"evaluation role must be one of {EVALUATOR_ROLES}, got {role!r}")
    raw_scores = doc.get("scores")
    if not isinstance(raw_scores, dict):
        raise ValidationError("evaluation needs a scores object")
    raw_comments = doc.get("comments") or {}

    known = set(rubric.item_ids())
    unknown = [k for k in raw_scores if k not in known]
    if unknown:
        raise ValidationError(f"evaluation scores unknown items: {sorted(unknown)}")

    scores = {}
    warnings = []
    for item_id in rubric.item_ids():
        if item_id not in raw_scores:
            raise MissingItem(item_id)
        v = raw_scores[item_id]
        if isinstance(v, bool) or not isinstance(v, int) or not 1 <= v <= 5:
            raise ScoreOutOfRange(item_id, v)
        scores[item_id] = v

    comments = {}
    for item_id in rubric.item_ids():
        c = raw_comments.get(item_id, "")
        if not isinstance(c, str):
            raise ValidationError(f"comment for {item_id!r} must be a string")
        if not c.strip():
            warnings.append(f"empty comment for item {item_id!r}")
        comments[item_id] = c

    version = doc.get("version", 1)
    if isinstance(version, bool) or not isinstance(version, int):
        raise ValidationError("evaluation version must be an integer")
    return Evaluation(evaluator, role, scores, comments, version), warnings


def serialize_evaluation(ev: Evaluation) -> bytes:
    doc = {
        "evaluator_id": ev.evaluator_id,
        "role": ev.role,
        "version": ev.version,
        "scores": dict(ev.scores),
        "comments": dict(ev.comments),
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")
