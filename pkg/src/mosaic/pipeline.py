"""Analysis dispatch: run every enabled analysis over a loaded bundle and
produce report-ready result records.

Each record has the same envelope: analysis name, status (ok/absent/error),
scalar metrics, and richer details. An analysis whose input stream is missing
is reported as an explicit absent entry rather than dropped, so report
consumers always see all eight.
"""
from __future__ import annotations

from dataclasses import asdict

from . import behaviorlog, biosignal, gaze, slides, speech, vision
from .core import LoadedBundle, schedule_for_bundle
from .errors import AnalysisError, ValidationError
from .ingest import (
    GAZE_JSONL,
    HEADPOSE_JSONL,
    HEART_CSV,
    LANDMARKS_JSONL,
)

ANALYSES = (
    "headpose", "posture", "audio", "speech", "heart", "gaze",
    "interaction", "slides",
)


def _result(analysis, status="ok", reason=None, metrics=None, details=None, notes=None):
    return {
        "analysis": analysis,
        "status": status,
        "reason": reason,
        "metrics": metrics or {},
        "details": details or {},
        "notes": notes or [],
    }


def _absent(analysis, reason):
    return _result(analysis, status="absent", reason=reason)


def _cfg(bundle, name, cls, **extra):
    overrides = dict(bundle.session.thresholds.get(name, {}))
    overrides.update(extra)
    fields = {f for f in cls.__dataclass_fields__}
    return cls(**{k: v for k, v in overrides.items() if k in fields})


def _presenter_stream(bundle, kind):
    presenter = bundle.session.presenter_id
    candidates = bundle.streams_of_kind(kind)
    for sid in sorted(candidates):
        if bundle.stream_actors.get(sid) == presenter:
            return sid, candidates[sid]
    for sid in sorted(candidates):
        return sid, candidates[sid]
    return None, None


def _other_streams(bundle, kind, exclude_sid):
    return [
        (sid, samples)
        for sid, samples in sorted(bundle.streams_of_kind(kind).items())
        if sid != exclude_sid
    ]


def analyze_headpose(bundle, schedule):
    sid, frames = _presenter_stream(bundle, HEADPOSE_JSONL)
    if sid is None:
        return _absent("headpose", "no head-pose stream in bundle")
    if not frames:
        return _result("headpose", status="error", reason="head-pose stream is empty")
    cone_map = (
        vision.cone_map_from_config(bundle.session.cone_map)
        if bundle.session.cone_map else vision.PRESENTER_CONES
    )
    summary = vision.attention_summary(frames, cone_map, schedule)

    evaluators = {}
    for other_sid, other_frames in _other_streams(bundle, HEADPOSE_JSONL, sid):
        if not other_frames:
            continue
        ev_summary = vision.attention_summary(other_frames, vision.EVALUATOR_CONES, schedule)
        evaluators[bundle.stream_actors.get(other_sid) or other_sid] = {
            "shares": ev_summary.shares,
            "focus_ratio": ev_summary.eye_contact_ratio,
            "per_phase": ev_summary.per_phase,
        }

    return _result(
        "headpose",
        metrics={
            "eye_contact_ratio": summary.eye_contact_ratio,
            "frame_count": summary.frame_count,
            "unclassified_count": summary.unclassified_count,
        },
        details={
            "stream": sid,
            "shares": summary.shares,
            "per_phase": summary.per_phase,
            "longest_off_target": [
                {"start_ms": s, "end_ms": e, "target": t}
                for s, e, t in summary.longest_off_target
            ],
            "evaluators": evaluators,
        },
    )


def analyze_posture(bundle, schedule):
    sid, frames = _presenter_stream(bundle, LANDMARKS_JSONL)
    if sid is None:
        return _absent("posture", "no landmark stream in bundle")
    cfg = _cfg(bundle, "posture", vision.PostureConfig)
    report = vision.posture_report(frames, cfg)
    return _result(
        "posture",
        metrics={
            "openness_ratio": report.summary["openness_ratio"],
            "crossed_ratio": report.summary["crossed_ratio"],
            "hunched_ratio": report.summary["hunched_ratio"],
            "pacing_ratio": report.summary["pacing_ratio"],
            "mean_energy": report.summary["mean_energy"],
        },
        details={
            "stream": sid,
            "torso_length": report.torso_length,
            "crossed_arm_intervals": [list(iv) for iv in report.crossed_arm_intervals],
            "hunched_intervals": [list(iv) for iv in report.hunched_intervals],
            "pacing_episodes": [list(iv) for iv in report.pacing_episodes],
            "movement_energy_series": [
                [sec, round(v, 6)] for sec, v in report.movement_energy_series
            ],
        },
    )


def analyze_audio(bundle):
    if bundle.audio is None:
        return _absent("audio", "no audio recording in bundle")
    cfg = _cfg(bundle, "audio", speech.AudioConfig)
    vocal_cfg = _cfg(bundle, "vocal", speech.VocalConfig)
    frames = speech.audio_features(bundle.audio, cfg)
    offset = bundle.audio_offset_ms
    summary = speech.vocal_summary(frames, vocal_cfg)
    return _result(
        "audio",
        metrics={
            "pitch_median_hz": summary.pitch_median_hz,
            "pitch_semitone_sd": summary.pitch_semitone_sd,
            "monotone_flag": summary.monotone_flag,
            "voiced_ratio": summary.voiced_ratio,
            "mean_rms_db": summary.mean_rms_db,
            "silence_count": len(summary.silence_segments),
        },
        details={
            "silence_segments": [
                [s + offset, e + offset] for s, e in summary.silence_segments
            ],
            "modulation_per_minute": [
                [m, round(v, 6) if v is not None else None]
                for m, v in summary.modulation_per_minute
            ],
        },
        notes=[
            "fluency is reported as pace, pauses, and voiced ratio; "
            "no single clarity score is computed",
        ],
    )


def _filler_lexicon(bundle):
    """Inline list from thresholds, a lexicon file (one entry per line,
    n-grams allowed), or the built-in default."""
    inline = bundle.session.thresholds.get("lexicon")
    if inline:
        return tuple(inline)
    rel = bundle.session.thresholds.get("lexicon_path")
    if rel:
        text = (bundle.path / rel).read_text("utf-8")
        return tuple(line.strip() for line in text.splitlines() if line.strip())
    return speech.DEFAULT_FILLER_LEXICON


def analyze_speech(bundle):
    if bundle.transcript is None:
        return _absent("speech", "no transcript in bundle")
    cfg = _cfg(bundle, "transcript", speech.TranscriptConfig)
    report = speech.transcript_patterns(bundle.transcript, _filler_lexicon(bundle), cfg)
    filler_total = sum(report.filler_counts.values())
    long_pauses = [p for p in report.pauses if p[2] == "long"]
    return _result(
        "speech",
        metrics={
            "words_per_minute": report.words_per_minute,
            "word_count": report.word_count,
            "filler_total": filler_total,
            "false_start_count": len(report.false_starts),
            "long_pauses": len(long_pauses),
            "short_pauses": len([p for p in report.pauses if p[2] == "short"]),
        },
        details={
            "filler_counts": {k: v for k, v in sorted(report.filler_counts.items()) if v},
            "filler_timestamps": {
                k: v for k, v in sorted(report.filler_timestamps.items()) if v
            },
            "false_starts": [[ts, tok] for ts, tok in report.false_starts],
            "pauses": [[s, e, c] for s, e, c in report.pauses],
            "speaking_ms": report.speaking_ms,
            "span_ms": report.span_ms,
        },
        notes=[
            "filler entries are counted on every lexical match; discourse-marker "
            "disambiguation (e.g. literal uses of 'like') is out of scope",
        ],
    )


def _timeline_events(bundle, schedule):
    """(ts, label) pairs peaks can align to: talk start, slide changes,
    phase starts, and instant annotations."""
    events = [(0, "session_start")]
    for phase in schedule:
        events.append((phase.start_ms, f"phase_{phase.name}_start"))
    for ev in bundle.events:
        if ev.kind in ("slide_advance", "slide_back"):
            events.append((ev.ts_ms, ev.kind))
    for a in bundle.annotations:
        if a.kind == "instant" and not a.label.startswith("phase:"):
            events.append((a.ts_ms, a.label))
    events.sort()
    return events


def analyze_heart(bundle, schedule):
    presenter = bundle.session.presenter_id
    heart_streams = bundle.streams_of_kind(HEART_CSV)
    if not heart_streams:
        return _absent("heart", "no heart-rate stream in bundle")
    sid, series = _presenter_stream(bundle, HEART_CSV)
    cfg = _cfg(bundle, "heart", biosignal.PeakConfig)

    smoothed = biosignal.smooth(series)
    peaks = biosignal.detect_peaks(smoothed, cfg)
    events = _timeline_events(bundle, schedule)
    stats = biosignal.phase_stats_and_alignment(smoothed, schedule, peaks, events)

    def stats_payload(report):
        return {
            "per_phase": [
                {
                    "phase": s.phase, "n": s.n, "mean": s.mean, "sd": s.sd,
                    "min": s.min, "max": s.max,
                }
                for s in report.per_phase
            ],
            "tests": [
                {
                    "phases": [a, b],
                    "t": r.t if r else None,
                    "df": r.df if r else None,
                    "p_two_sided": r.p_two_sided if r else None,
                    "mode": r.mode if r else None,
                }
                for a, b, r in report.tests
            ],
        }

    evaluator_stats = {}
    for other_sid, other_series in _other_streams(bundle, HEART_CSV, sid):
        other_smoothed = biosignal.smooth(other_series)
        other_peaks = biosignal.detect_peaks(other_smoothed, cfg)
        other_report = biosignal.phase_stats_and_alignment(
            other_smoothed, schedule, other_peaks, events
        )
        actor = bundle.stream_actors.get(other_sid) or other_sid
        payload = stats_payload(other_report)
        payload["peak_count"] = len(other_peaks)
        evaluator_stats[actor] = payload

    artifacts = sum(1 for s in series if s.artifact)
    return _result(
        "heart",
        metrics={
            "peak_count": len(peaks),
            "sample_count": len(series),
            "artifact_count": artifacts,
        },
        details={
            "stream": sid,
            "peaks": [
                {"ts_ms": p.ts_ms, "bpm": p.bpm_at_peak, "z": round(p.z_score, 6)}
                for p in peaks
            ],
            "phase_stats": stats_payload(stats),
            "peak_matches": [
                {
                    "peak_ts_ms": m.peak_ts_ms,
                    "event_ts_ms": m.event_ts_ms,
                    "event_label": m.event_label,
                    "gap_ms": m.gap_ms,
                }
                for m in stats.matches
            ],
            "unmatched_peaks": list(stats.unmatched_peaks),
            "evaluators": evaluator_stats,
        },
        notes=[
            "within-session phase comparisons use the unequal-variance test; "
            "paired mode applies to cohort-level per-presenter phase means",
        ],
    )


def analyze_gaze(bundle, schedule):
    streams = bundle.streams_of_kind(GAZE_JSONL)
    if not streams:
        return _absent("gaze", "no eye-tracking stream in bundle")
    sid = sorted(streams)[0]
    samples = streams[sid]
    fix_cfg = _cfg(bundle, "gaze", gaze.FixationConfig)
    blink_cfg = _cfg(bundle, "blink", gaze.BlinkConfig)
    fixations, saccades = gaze.detect_fixations(samples, fix_cfg)
    blinks, losses, blink_rate = gaze.detect_blinks(samples, blink_cfg)
    aois = gaze.aoi_from_config(bundle.session.aoi_config)
    mapping = gaze.map_aoi(fixations, aois, schedule)
    shares = mapping["shares"]
    return _result(
        "gaze",
        metrics={
            "fixation_count": len(fixations),
            "saccade_count": len(saccades),
            "blink_count": len(blinks),
            "blink_rate_per_min": blink_rate,
            "presenter_face_share": shares.get("presenter_face", 0.0),
            "data_loss_count": len(losses),
        },
        details={
            "stream": sid,
            "aoi_shares": shares,
            "per_phase": mapping["per_phase"],
            "aoi_switches": [[ts, label] for ts, label in mapping["switches"]],
            "mean_fixation_ms": (
                sum(f.duration_ms for f in fixations) / len(fixations)
                if fixations else None
            ),
            "mean_saccade_amplitude": (
                sum(s.amplitude for s in saccades) / len(saccades)
                if saccades else None
            ),
            "data_loss_segments": [list(seg) for seg in losses],
        },
        notes=[
            "scene coordinates are treated as quasi-static; observer head "
            "motion is not compensated",
        ],
    )


def analyze_interaction(bundle, schedule):
    if not bundle.events:
        return _absent("interaction", "no interaction events in bundle")
    session = bundle.session
    item_phase_map = bundle.rubric.item_phase_map() if bundle.rubric else {}
    slide_cfg = _cfg(bundle, "slide_timeline", behaviorlog.SlideTimelineConfig)
    audit_cfg = _cfg(bundle, "audit", behaviorlog.AuditConfig)

    deck_slides = None
    if bundle.deck_bytes:
        try:
            deck_slides = slides.parse_deck(bundle.deck_bytes).slide_count
        except ValidationError:
            deck_slides = None
    if deck_slides is None:
        advances = sum(1 for e in bundle.events if e.kind == "slide_advance")
        deck_slides = max(1, advances + 1)

    presenter_events = [
        e for e in bundle.events
        if e.kind in ("slide_advance", "slide_back") and
        (not e.actor_id or e.actor_id == session.presenter_id)
    ]
    timeline = behaviorlog.slide_timeline(
        presenter_events, deck_slides, session.span_ms, slide_cfg
    )

    evaluator_ids = {eid for eid, _ in session.evaluators}
    eval_events = [e for e in bundle.events if e.actor_id in evaluator_ids]
    audit = behaviorlog.evaluation_audit(
        eval_events, schedule, item_phase_map, session.span_ms,
        bundle.evaluations, audit_cfg,
    )
    for w in audit.warnings:
        bundle.warnings.append(f"interaction audit: {w}")

    ratios = [a.activity_ratio for a in audit.per_evaluator.values()]
    premature_total = sum(len(a.premature_items) for a in audit.per_evaluator.values())
    return _result(
        "interaction",
        metrics={
            "slide_count_seen": len({v.slide_index for v in timeline.visits}),
            "back_navigations": timeline.back_navigations,
            "rushed_slide_count": len(timeline.rushed_slides),
            "premature_rating_count": premature_total,
            "activity_ratio": sum(ratios) / len(ratios) if ratios else 0.0,
        },
        details={
            "slide_visits": [
                {"slide": v.slide_index, "enter_ms": v.enter_ms, "exit_ms": v.exit_ms}
                for v in timeline.visits
            ],
            "dwell_by_slide": {str(k): v for k, v in sorted(timeline.dwell_by_slide.items())},
            "evaluators": {
                actor: {
                    "focus_ms": dict(sorted(a.focus_ms.items())),
                    "active_ms": a.active_ms,
                    "activity_ratio": a.activity_ratio,
                    "rating_order": [
                        {"ts_ms": ts, "item_id": item, "value": value}
                        for ts, item, value in a.rating_order
                    ],
                    "premature_items": [
                        {"item_id": item, "rated_ms": ts, "phase_start_ms": ps}
                        for item, ts, ps in a.premature_items
                    ],
                    "comment_lengths": dict(sorted(a.comment_lengths.items())),
                    "keypress_count": a.keypress_count,
                    "flags": list(a.flags),
                }
                for actor, a in sorted(audit.per_evaluator.items())
            },
        },
    )


def analyze_slides(bundle):
    if not bundle.deck_bytes:
        return _absent("slides", "no deck in bundle")
    cfg = _cfg(bundle, "slides", slides.DeckConfig)
    deck = slides.parse_deck(bundle.deck_bytes, cfg.default_font_pt)
    findings = slides.deck_findings(deck, cfg)
    return _result(
        "slides",
        metrics={
            "slide_count": deck.slide_count,
            "mean_words_per_slide": findings.mean_words_per_slide,
            "total_images": findings.total_images,
            "image_text_ratio": findings.image_text_ratio,
            "small_font_slides": sum(1 for f in findings.per_slide if f.small_font),
            "text_dense_slides": sum(1 for f in findings.per_slide if f.text_dense),
        },
        details={
            "slides": [
                {
                    "index": s.index,
                    "title": s.title,
                    "word_count": s.word_count,
                    "image_count": s.image_count,
                    "has_slide_number": s.has_slide_number,
                    "min_font_pt": s.min_font_pt,
                }
                for s in deck.slides
            ],
            "flags": [asdict(f) for f in findings.per_slide],
        },
        notes=[
            "small-font flags consider explicit run sizes only; theme and "
            "master inheritance is not resolved",
        ],
    )


def run_analyses(bundle: LoadedBundle, only=None):
    """Run all (or the selected) analyses; failures become error entries."""
    schedule = schedule_for_bundle(bundle)
    selected = list(ANALYSES) if not only else [a for a in ANALYSES if a in set(only)]

    runners = {
        "headpose": lambda: analyze_headpose(bundle, schedule),
        "posture": lambda: analyze_posture(bundle, schedule),
        "audio": lambda: analyze_audio(bundle),
        "speech": lambda: analyze_speech(bundle),
        "heart": lambda: analyze_heart(bundle, schedule),
        "gaze": lambda: analyze_gaze(bundle, schedule),
        "interaction": lambda: analyze_interaction(bundle, schedule),
        "slides": lambda: analyze_slides(bundle),
    }

    results = {}
    for name in ANALYSES:
        if name not in selected:
            results[name] = _absent(name, "analysis not selected")
            continue
        try:
            results[name] = runners[name]()
        except (AnalysisError, ValidationError) as exc:
            results[name] = _result(name, status="error", reason=str(exc))
    return schedule, results


def metrics_index(results):
    """Flat metric map (analysis.metric -> value) for feedback linking."""
    index = {}
    for name in sorted(results):
        record = results[name]
        if record["status"] != "ok":
            continue
        for key, value in record["metrics"].items():
            index[f"{name}.{key}"] = value
    return index
