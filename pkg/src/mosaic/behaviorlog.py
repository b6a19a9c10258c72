"""Slide-transition timeline and evaluator interaction-log audit.

The audit works from explicit console events (item focus/blur, ratings,
keypresses) rather than keystroke inference, so its numbers are exact and
replayable. Thresholds are configuration with documented defaults.
"""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class SlideVisit:
    slide_index: int  # 1-based
    enter_ms: int
    exit_ms: int

    @property
    def dwell_ms(self) -> int:
        return self.exit_ms - self.enter_ms


@dataclass
class SlideTimeline:
    visits: list = field(default_factory=list)
    back_navigations: int = 0
    rushed_slides: list = field(default_factory=list)    # visits with dwell < min
    overlong_slides: list = field(default_factory=list)  # visits with dwell > max
    dwell_by_slide: dict = field(default_factory=dict)   # slide -> total ms


@dataclass
class SlideTimelineConfig:
    rushed_dwell_ms: int = 5_000
    overlong_dwell_ms: int = 180_000


def slide_timeline(events, slide_count, session_end_ms, cfg=None) -> SlideTimeline:
    """Reconstruct slide visits from advance/back events.

    The deck starts on slide 1 at time 0; the index clamps to [1, slide_count].
    Visits partition [0, session_end_ms].
    """
    cfg = cfg or SlideTimelineConfig()
    timeline = SlideTimeline()
    current = 1
    entered = 0
    for ev in events:
        if ev.kind not in ("slide_advance", "slide_back"):
            continue
        ts = min(max(ev.ts_ms, 0), session_end_ms)
        if ev.kind == "slide_back":
            timeline.back_navigations += 1
            target = max(1, current - 1)
        else:
            target = min(slide_count, current + 1)
        if target == current:
            continue  # clamped at deck edge; no visit boundary
        if ts > entered:
            timeline.visits.append(SlideVisit(current, entered, ts))
        current = target
        entered = ts
    if session_end_ms > entered:
        timeline.visits.append(SlideVisit(current, entered, session_end_ms))

    for v in timeline.visits:
        timeline.dwell_by_slide[v.slide_index] = (
            timeline.dwell_by_slide.get(v.slide_index, 0) + v.dwell_ms
        )
        if v.dwell_ms < cfg.rushed_dwell_ms:
            timeline.rushed_slides.append(v)
        elif v.dwell_ms > cfg.overlong_dwell_ms:
            timeline.overlong_slides.append(v)
    return timeline


@dataclass
class EvaluatorAudit:
    actor_id: str
    focus_ms: dict = field(default_factory=dict)        # item -> total focus ms
    rating_times: dict = field(default_factory=dict)    # item -> [(ts, value)]
    rating_order: list = field(default_factory=list)    # (ts, item, value)
    comment_lengths: dict = field(default_factory=dict)
    premature_items: list = field(default_factory=list)  # (item, rated_ts, phase_start)
    active_ms: int = 0
    activity_ratio: float = 0.0
    keypress_count: int = 0
    flags: list = field(default_factory=list)  # subset of {premature, rushed, superficial}


@dataclass
class AuditConfig:
    rushed_active_fraction: float = 0.30
    superficial_comment_chars: int = 20


@dataclass
class EvaluationAudit:
    per_evaluator: dict = field(default_factory=dict)  # actor -> EvaluatorAudit
    warnings: list = field(default_factory=list)


def _median(xs):
    vs = sorted(xs)
    n = len(vs)
    if n == 0:
        return 0
    mid = n // 2
    return vs[mid] if n % 2 else 0.5 * (vs[mid - 1] + vs[mid])


def evaluation_audit(events, schedule, item_phase_map, span_ms,
                     evaluations=None, cfg=None) -> EvaluationAudit:
    """Audit evaluator behavior: per-item focus time, rating order, premature
    ratings, and engagement flags.

    A rating is premature when it lands before the start of the phase its
    rubric item is mapped to. Focus intervals auto-close at the next focus
    or at session end, with a warning for each unbalanced pair. Events from
    different evaluators may arrive interleaved in one file; the audit groups
    them by actor_id, so interleaving never changes the result.
    """
    cfg = cfg or AuditConfig()
    audit = EvaluationAudit()

    by_actor = {}
    for ev in events:
        if ev.kind in ("slide_advance", "slide_back"):
            continue
        by_actor.setdefault(ev.actor_id, []).append(ev)

    comments_by_actor = {}
    for evaluation in evaluations or []:
        comments_by_actor[evaluation.evaluator_id] = evaluation.comments

    for actor in sorted(by_actor):
        actor_events = by_actor[actor]
        entry = EvaluatorAudit(actor_id=actor)

        open_item = None
        open_ts = None
        for ev in actor_events:
            if ev.kind == "item_focus":
                if open_item is not None:
                    audit.warnings.append(
                        f"{actor}: focus on {open_item!r} auto-closed by focus on {ev.item_id!r}"
                    )
                    entry.focus_ms[open_item] = (
                        entry.focus_ms.get(open_item, 0) + max(0, ev.ts_ms - open_ts)
                    )
                open_item = ev.item_id
                open_ts = ev.ts_ms
            elif ev.kind == "item_blur":
                if open_item is None or ev.item_id != open_item:
                    audit.warnings.append(
                        f"{actor}: blur without matching focus on {ev.item_id!r}"
                    )
                    continue
                entry.focus_ms[open_item] = (
                    entry.focus_ms.get(open_item, 0) + max(0, ev.ts_ms - open_ts)
                )
                open_item = None
                open_ts = None
            elif ev.kind == "item_rated":
                entry.rating_times.setdefault(ev.item_id, []).append((ev.ts_ms, ev.value))
                entry.rating_order.append((ev.ts_ms, ev.item_id, ev.value))
            elif ev.kind == "keypress":
                entry.keypress_count += 1
        if open_item is not None:
            audit.warnings.append(f"{actor}: focus on {open_item!r} auto-closed at session end")
            entry.focus_ms[open_item] = (
                entry.focus_ms.get(open_item, 0) + max(0, span_ms - open_ts)
            )

        for item, ratings in sorted(entry.rating_times.items()):
            phase_name = item_phase_map.get(item)
            if not phase_name:
                continue
            phase = schedule.by_name(phase_name)
            if phase is None:
                continue
            first_ts = min(ts for ts, _ in ratings)
            if first_ts < phase.start_ms:
                entry.premature_items.append((item, first_ts, phase.start_ms))

        entry.active_ms = sum(entry.focus_ms.values())
        entry.activity_ratio = entry.active_ms / span_ms if span_ms > 0 else 0.0

        comments = comments_by_actor.get(actor, {})
        entry.comment_lengths = {k: len(v.strip()) for k, v in comments.items()}

        if entry.premature_items:
            entry.flags.append("premature")
        if entry.activity_ratio < cfg.rushed_active_fraction:
            entry.flags.append("rushed")
        if comments and _median(list(entry.comment_lengths.values())) < cfg.superficial_comment_chars:
            entry.flags.append("superficial")

        audit.per_evaluator[actor] = entry
    return audit
