"""Session bundle loading, unified timeline, and phase schedule.

A bundle is a directory:

    session.json            descriptor (ids, roles, sync offsets, config)
    streams/*.csv|*.jsonl   per-modality sample streams
    audio/*.wav             presentation audio
    transcript.jsonl        word-level transcript
    events/*.jsonl          interaction events
    annotations.jsonl       live observer annotations
    evaluations/*.json      rubric submissions
    slides/deck.pptx        presentation deck
    rubric.json             rubric definition

All device clocks are aligned through explicit per-stream offsets in the
descriptor's sync_map; loaded timestamps are session-clock milliseconds.
Loading is single-threaded and deterministic; the loaded context is treated
as immutable afterwards.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import ingest
from .errors import (
    MissingDescriptor,
    NonMonotonicTimestamps,
    StreamParseError,
    UnknownStream,
    UnpairedPhaseMarker,
    ValidationError,
)
from .model import Phase, PhaseSchedule, Session
from .speech import read_wav

ANNOTATION_SLACK_MS = 60_000  # tolerated overshoot past the planned span

DEFAULT_PHASE_PROPORTIONS = (("opening", 0.10), ("body", 0.70), ("conclusion", 0.20))


@dataclass
class LoadedBundle:
    path: Path
    session: Session
    rubric: object | None = None            # model.Rubric
    templates: dict | None = None           # item_id -> template text
    streams: dict = field(default_factory=dict)   # stream id -> sample list
    stream_kinds: dict = field(default_factory=dict)
    stream_actors: dict = field(default_factory=dict)
    audio: object | None = None             # speech.AudioSignal
    audio_offset_ms: int = 0
    transcript: list | None = None
    events: list = field(default_factory=list)
    annotations: list = field(default_factory=list)
    evaluations: list = field(default_factory=list)
    deck_bytes: bytes | None = None
    warnings: list = field(default_factory=list)

    def streams_of_kind(self, kind):
        return {sid: self.streams[sid] for sid, k in self.stream_kinds.items() if k == kind}


def to_session_time(stream_id, raw_ts_ms, sync_map):
    """Map a device timestamp onto the session clock."""
    if stream_id not in sync_map:
        raise UnknownStream(stream_id)
    return raw_ts_ms + int(sync_map[stream_id])


def parse_session_descriptor(data: bytes, path="session.json") -> Session:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MissingDescriptor(f"{path} (unreadable: {exc})") from exc
    if not isinstance(doc, dict) or "id" not in doc:
        raise MissingDescriptor(f"{path} (no session id)")

    evaluators = []
    for e in doc.get("evaluators", []):
        role = e.get("role")
        if role not in ("professor", "peer", "self"):
            raise ValidationError(f"evaluator {e.get('id')!r} has invalid role {role!r}")
        evaluators.append((e["id"], role))

    planned = int(doc.get("planned_duration_ms", 0))
    if planned <= 0:
        raise ValidationError("planned_duration_ms must be positive")

    return Session(
        id=str(doc["id"]),
        presenter_id=str(doc.get("presenter_id", "")),
        evaluators=evaluators,
        observers=list(doc.get("observers", [])),
        planned_duration_ms=planned,
        qa_duration_ms=int(doc.get("qa_duration_ms", 0)),
        sync_map={k: int(v) for k, v in (doc.get("sync_map") or {}).items()},
        streams=doc.get("streams") or {},
        aoi_config=doc.get("aoi_config") or [],
        cone_map=doc.get("cone_map"),
        thresholds=doc.get("thresholds") or {},
        rubric_path=doc.get("rubric_path"),
        templates_path=doc.get("templates_path"),
        annotation_labels=list(doc.get("annotation_labels") or []),
    )


def _check_monotonic(stream_id, samples, ts_of, sort_repair, warnings):
    ts = [ts_of(s) for s in samples]
    if all(b >= a for a, b in zip(ts, ts[1:])):
        return samples
    if not sort_repair:
        raise NonMonotonicTimestamps(stream_id)
    warnings.append(f"stream {stream_id!r}: non-monotonic timestamps stable-sorted")
    order = sorted(range(len(samples)), key=lambda i: ts[i])
    return [samples[i] for i in order]


_TS_REBASERS = {
    ingest.HEART_CSV: lambda s, off: replace(s, ts_ms=s.ts_ms + off),
    ingest.GAZE_JSONL: lambda s, off: replace(s, ts_ms=s.ts_ms + off),
    ingest.LANDMARKS_JSONL: lambda s, off: replace(s, ts_ms=s.ts_ms + off),
    ingest.HEADPOSE_JSONL: lambda s, off: replace(s, ts_ms=s.ts_ms + off),
    ingest.TRANSCRIPT_JSONL: lambda s, off: replace(s, start_ms=s.start_ms + off, end_ms=s.end_ms + off),
    ingest.EVENTS_JSONL: lambda s, off: replace(s, ts_ms=s.ts_ms + off),
    ingest.ANNOTATIONS_JSONL: lambda s, off: replace(s, ts_ms=s.ts_ms + off),
}

_TS_GETTERS = {
    ingest.TRANSCRIPT_JSONL: lambda s: s.start_ms,
}


def _load_stream_file(bundle_dir, rel_path, kind, stream_id, sync_map,
                      sort_repair, warnings):
    file_path = bundle_dir / rel_path
    if not file_path.is_file():
        raise ValidationError(f"stream {stream_id!r}: file {rel_path} not found")
    if stream_id not in sync_map:
        raise UnknownStream(stream_id)
    try:
        result = ingest.parse_stream(kind, file_path.read_bytes())
    except ValidationError as exc:
        line = getattr(exc, "line", 0)
        raise StreamParseError(str(rel_path), line, str(exc)) from exc
    for line_no, msg in result.issues:
        warnings.append(f"{rel_path}:{line_no}: {msg}")
    for line_no, msg in result.skipped:
        warnings.append(f"{rel_path}:{line_no}: skipped ({msg})")
    offset = int(sync_map[stream_id])
    rebase = _TS_REBASERS[kind]
    samples = [rebase(s, offset) for s in result.samples]
    ts_of = _TS_GETTERS.get(kind, lambda s: s.ts_ms)
    return _check_monotonic(stream_id, samples, ts_of, sort_repair, warnings)


def load_bundle(path, sort_repair=False, strict_roles=False) -> LoadedBundle:
    """Load, synchronize, and validate a session bundle directory."""
    bundle_dir = Path(path)
    descriptor = bundle_dir / "session.json"
    if not descriptor.is_file():
        raise MissingDescriptor(descriptor)
    session = parse_session_descriptor(descriptor.read_bytes(), str(descriptor))
    bundle = LoadedBundle(path=bundle_dir, session=session)
    warnings = bundle.warnings

    counts = session.role_counts()
    if counts["professor"] < 1 or counts["peer"] < 2:
        msg = (
            f"expected at least 1 professor and 2 peer evaluators, got "
            f"{counts['professor']} professor(s) and {counts['peer']} peer(s)"
        )
        if strict_roles:
            raise ValidationError(msg)
        warnings.append(msg)

    sync = session.sync_map
    for stream_id in sorted(session.streams):
        spec = session.streams[stream_id]
        kind = spec.get("kind")
        if kind not in ingest.STREAM_KINDS:
            raise ValidationError(f"stream {stream_id!r}: unknown kind {kind!r}")
        samples = _load_stream_file(
            bundle_dir, spec["path"], kind, stream_id, sync, sort_repair, warnings
        )
        bundle.streams[stream_id] = samples
        bundle.stream_kinds[stream_id] = kind
        bundle.stream_actors[stream_id] = spec.get("actor", "")

    transcript_path = bundle_dir / "transcript.jsonl"
    if transcript_path.is_file():
        bundle.transcript = _load_stream_file(
            bundle_dir, "transcript.jsonl", ingest.TRANSCRIPT_JSONL,
            "transcript", sync, sort_repair, warnings,
        )

    events_path = bundle_dir / "events" / "interactions.jsonl"
    if events_path.is_file():
        bundle.events = _load_stream_file(
            bundle_dir, "events/interactions.jsonl", ingest.EVENTS_JSONL,
            "events", sync, sort_repair, warnings,
        )

    annotations_path = bundle_dir / "annotations.jsonl"
    if annotations_path.is_file():
        bundle.annotations = _load_stream_file(
            bundle_dir, "annotations.jsonl", ingest.ANNOTATIONS_JSONL,
            "annotations", sync, sort_repair, warnings,
        )
        _validate_annotation_bounds(bundle)

    audio_path = bundle_dir / "audio" / "presentation.wav"
    if audio_path.is_file():
        if "audio" not in sync:
            raise UnknownStream("audio")
        bundle.audio = read_wav(audio_path.read_bytes())
        bundle.audio_offset_ms = int(sync["audio"])

    rubric_rel = session.rubric_path or "rubric.json"
    rubric_path = bundle_dir / rubric_rel
    if rubric_path.is_file():
        bundle.rubric = ingest.parse_rubric(rubric_path.read_bytes())

    templates_rel = session.templates_path or "templates.json"
    templates_path = bundle_dir / templates_rel
    if templates_path.is_file():
        doc = json.loads(templates_path.read_text("utf-8"))
        if not isinstance(doc, dict):
            raise ValidationError("templates file must map item ids to template text")
        bundle.templates = doc

    eval_dir = bundle_dir / "evaluations"
    if eval_dir.is_dir() and bundle.rubric is not None:
        for f in sorted(eval_dir.glob("*.json")):
            ev, ev_warnings = ingest.parse_evaluation(f.read_bytes(), bundle.rubric)
            for w in ev_warnings:
                warnings.append(f"{f.name}: {w}")
            declared = session.evaluator_role(ev.evaluator_id)
            if declared is None:
                warnings.append(
                    f"{f.name}: evaluator {ev.evaluator_id!r} not listed in session descriptor"
                )
            elif declared != ev.role:
                warnings.append(
                    f"{f.name}: role {ev.role!r} differs from descriptor role {declared!r}"
                )
            bundle.evaluations.append(ev)

    deck_path = bundle_dir / "slides" / "deck.pptx"
    if deck_path.is_file():
        bundle.deck_bytes = deck_path.read_bytes()

    return bundle


def _validate_annotation_bounds(bundle):
    session = bundle.session
    limit = session.span_ms
    for stream in bundle.streams.values():
        if stream:
            last = stream[-1]
            limit = max(limit, getattr(last, "ts_ms", 0))
    limit += ANNOTATION_SLACK_MS
    for a in bundle.annotations:
        if not 0 <= a.ts_ms <= limit:
            raise ValidationError(
                f"annotation {a.id!r} at {a.ts_ms} ms outside [0, {limit}]"
            )


# --- phase schedule ---------------------------------------------------------

def build_phase_schedule(annotations, talk_ms, qa_ms=0,
                         proportions=DEFAULT_PHASE_PROPORTIONS,
                         warnings=None) -> PhaseSchedule:
    """Phase schedule from phase:* start/end annotations, or a proportional
    split of the planned durations when no markers exist.

    Markers pair first-start with first-end per label; overlapping phases
    are clipped in start order so the schedule invariants always hold.
    """
    markers = [a for a in annotations if a.label.startswith("phase:")]
    phases = []
    if markers:
        by_label = {}
        for a in markers:
            by_label.setdefault(a.label, []).append(a)
        for label in sorted(by_label):
            group = sorted(by_label[label], key=lambda a: a.ts_ms)
            starts = [a for a in group if a.kind == "start"]
            ends = [a for a in group if a.kind == "end"]
            instants = [a for a in group if a.kind == "instant"]
            if instants and warnings is not None:
                warnings.append(f"ignoring instant annotation(s) for {label!r}")
            if len(starts) != len(ends):
                raise UnpairedPhaseMarker(label)
            name = label.split(":", 1)[1]
            for s, e in zip(starts, ends):
                if e.ts_ms <= s.ts_ms:
                    raise UnpairedPhaseMarker(label)
                phases.append(Phase(name, s.ts_ms, e.ts_ms))
        phases.sort(key=lambda p: (p.start_ms, p.end_ms))
        clipped = []
        cursor = None
        for p in phases:
            start = p.start_ms
            if cursor is not None and start < cursor:
                if warnings is not None:
                    warnings.append(f"phase {p.name!r} clipped to remove overlap")
                start = cursor
            if start >= p.end_ms:
                continue
            clipped.append(Phase(p.name, start, p.end_ms))
            cursor = p.end_ms
        return PhaseSchedule(tuple(clipped)).validate()

    cursor = 0
    total = 0.0
    for i, (name, fraction) in enumerate(proportions):
        total += fraction
        end = round(talk_ms * total) if i < len(proportions) - 1 else talk_ms
        if end > cursor:
            phases.append(Phase(name, cursor, end))
        cursor = end
    if qa_ms > 0:
        phases.append(Phase("qa", talk_ms, talk_ms + qa_ms))
    return PhaseSchedule(tuple(phases)).validate()


def schedule_for_bundle(bundle: LoadedBundle) -> PhaseSchedule:
    return build_phase_schedule(
        bundle.annotations,
        bundle.session.planned_duration_ms,
        bundle.session.qa_duration_ms,
        warnings=bundle.warnings,
    )
