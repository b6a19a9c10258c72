"""Rubric aggregation across evaluator roles, self-vs-external comparison,
class averages, and composition of the three-part feedback (strengths,
improvement areas, action plan).

Feedback can come from the deterministic template backend or from a pluggable
text generator. Generated output is validated against the rubric and falls
back to the template backend on any violation; either way the result carries
review_status="draft" so a professor approves it before release.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import NoExternalEvaluations

STRENGTH_MEAN = 4.0
IMPROVEMENT_MEAN = 3.0
DIVERGENCE_GAP = 1.5


@dataclass
class ItemAggregate:
    item_id: str
    external_mean: float | None   # professors + peers, self excluded
    professor_mean: float | None
    peer_mean: float | None
    self_score: int | None
    spread: int | None            # max - min over external scores
    divergence: bool              # |self - external_mean| >= DIVERGENCE_GAP
    comments: dict = field(default_factory=dict)  # role -> [comment]
    class_mean: float | None = None


@dataclass
class RubricAggregates:
    items: dict = field(default_factory=dict)  # item_id -> ItemAggregate
    evaluator_count: int = 0
    external_count: int = 0

    def item(self, item_id):
        return self.items.get(item_id)


def aggregate_rubric(evaluations, rubric, divergence_gap=DIVERGENCE_GAP) -> RubricAggregates:
    """Aggregate per-item scores by role group; the self evaluation never
    contributes to the external mean. Input order does not matter."""
    external = [e for e in evaluations if e.role in ("professor", "peer")]
    if not external:
        raise NoExternalEvaluations("need at least one professor or peer evaluation")
    self_evals = [e for e in evaluations if e.role == "self"]

    agg = RubricAggregates(
        evaluator_count=len(evaluations),
        external_count=len(external),
    )
    for item in rubric.items:
        ext_scores = sorted(e.scores[item.id] for e in external if item.id in e.scores)
        prof = sorted(e.scores[item.id] for e in external
                      if e.role == "professor" and item.id in e.scores)
        peer = sorted(e.scores[item.id] for e in external
                      if e.role == "peer" and item.id in e.scores)
        self_score = None
        for e in self_evals:
            if item.id in e.scores:
                self_score = e.scores[item.id]
        ext_mean = sum(ext_scores) / len(ext_scores) if ext_scores else None

        comments = {}
        for e in sorted(evaluations, key=lambda e: (e.role, e.evaluator_id)):
            text = (e.comments or {}).get(item.id, "").strip()
            if text:
                comments.setdefault(e.role, []).append(text)

        agg.items[item.id] = ItemAggregate(
            item_id=item.id,
            external_mean=ext_mean,
            professor_mean=sum(prof) / len(prof) if prof else None,
            peer_mean=sum(peer) / len(peer) if peer else None,
            self_score=self_score,
            spread=(ext_scores[-1] - ext_scores[0]) if ext_scores else None,
            divergence=(
                self_score is not None and ext_mean is not None
                and abs(self_score - ext_mean) >= divergence_gap
            ),
            comments=comments,
        )
    return agg


def class_averages(session_aggregates):
    """Per-item class means across a cohort: the mean of per-session external
    means, skipping sessions where the item is missing."""
    sums = {}
    counts = {}
    for agg in session_aggregates:
        for item_id, item in agg.items.items():
            if item.external_mean is None:
                continue
            sums[item_id] = sums.get(item_id, 0.0) + item.external_mean
            counts[item_id] = counts.get(item_id, 0) + 1
    return {item_id: sums[item_id] / counts[item_id] for item_id in sorted(sums)}


# --- feedback composition ---------------------------------------------------

# How linked analysis metrics read in evidence text. Values are
# (display label, format style).
METRIC_PRESENTATION = {
    "headpose.eye_contact_ratio": ("eye contact", "pct_of_talk"),
    "gaze.presenter_face_share": ("audience gaze on presenter", "pct"),
    "speech.words_per_minute": ("speaking pace", "per_min"),
    "speech.long_pauses": ("long pauses", "count"),
    "audio.pitch_semitone_sd": ("pitch variation", "semitones"),
    "posture.openness_ratio": ("open posture", "pct_of_talk"),
    "slides.mean_words_per_slide": ("average words per slide", "number"),
    "heart.peak_count": ("heart-rate surges", "count"),
    "interaction.activity_ratio": ("evaluation engagement", "pct"),
}


def format_metric_evidence(metric_link, value):
    label, style = METRIC_PRESENTATION.get(metric_link, (metric_link, "number"))
    if value is None:
        return None
    if style == "pct_of_talk":
        return f"{label} {round(value * 100)}% of talk"
    if style == "pct":
        return f"{label} {round(value * 100)}%"
    if style == "per_min":
        return f"{label} {value:.0f}/min"
    if style == "count":
        return f"{int(value)} {label}"
    if style == "semitones":
        return f"{label} {value:.1f} semitones"
    return f"{label} {value:.2f}"


DEFAULT_ACTION_TEMPLATES = {
    "eye_contact": "Practice holding eye contact with different audience zones for "
                   "3-5 seconds before moving on; rehearse with the slides out of reach.",
    "clarity_opening": "Script and memorize the first two sentences of the opening; "
                       "state the talk's goal in one line before any detail.",
    "structure": "Add explicit signposting between sections (\"first\", \"next\", "
                 "\"to wrap up\") and preview the outline up front.",
    "visual_aids": "Cut each dense slide to one idea; move detail to speaker notes "
                   "and keep fonts at 18pt or larger.",
    "pacing": "Rehearse with a timer per section; pause deliberately after key "
              "points instead of accelerating.",
    "conclusions": "End with a prepared two-sentence summary and a clear closing "
                   "line instead of trailing off.",
    "voice": "Vary pitch and volume on key terms; record a rehearsal and mark "
             "monotone stretches to re-deliver.",
}

GENERIC_ACTION_TEMPLATE = (
    "Review the rubric guidance for \"{title}\" and rehearse that aspect in the "
    "next practice run."
)


@dataclass
class FeedbackSections:
    strengths: list = field(default_factory=list)      # (item_id, evidence)
    improvements: list = field(default_factory=list)   # (item_id, evidence)
    action_plan: list = field(default_factory=list)    # (item_id, recommendation, metric evidence|None)
    provenance: str = "template"                       # template | generated
    review_status: str = "draft"
    warnings: list = field(default_factory=list)


class FeedbackGenerator:
    """Interface for pluggable feedback text generation.

    Implementations receive a request document (see docs/generation-contract.md)
    and return a response document with strengths/improvements/action_plan
    arrays. The engine validates the response and silently falls back to the
    template backend when it is unusable, so implementations may fail freely.
    """

    def generate(self, request: dict) -> dict:
        raise NotImplementedError


def build_generation_request(aggregates, metrics, rubric):
    """The structured document handed to a FeedbackGenerator."""
    items = []
    for item in rubric.items:
        agg = aggregates.item(item.id)
        if agg is None:
            continue
        items.append({
            "item_id": item.id,
            "title": item.title,
            "external_mean": agg.external_mean,
            "professor_mean": agg.professor_mean,
            "peer_mean": agg.peer_mean,
            "self_score": agg.self_score,
            "spread": agg.spread,
            "comments": agg.comments,
            "metric_link": item.metric_link,
            "metric_value": metrics.get(item.metric_link) if item.metric_link else None,
        })
    return {
        "kind": "feedback_generation_request",
        "version": 1,
        "items": items,
        "metrics": {k: metrics[k] for k in sorted(metrics)},
        "required_sections": ["strengths", "improvements", "action_plan"],
    }


def _validate_generated(response, rubric):
    if not isinstance(response, dict):
        return None
    known = set(rubric.item_ids())
    sections = {}
    for name in ("strengths", "improvements", "action_plan"):
        entries = response.get(name)
        if not isinstance(entries, list):
            return None
        cleaned = []
        for e in entries:
            if not isinstance(e, dict) or e.get("item_id") not in known:
                return None
            text = e.get("text")
            if not isinstance(text, str) or not text.strip():
                return None
            cleaned.append((e["item_id"], text.strip()))
        sections[name] = cleaned
    improv_ids = {i for i, _ in sections["improvements"]}
    plan_ids = {i for i, _ in sections["action_plan"]}
    if improv_ids - plan_ids:
        return None  # every improvement needs an action-plan entry
    return sections


def compose_feedback(aggregates, metrics, rubric, templates=None, generator=None,
                     strength_mean=STRENGTH_MEAN, improvement_mean=IMPROVEMENT_MEAN):
    """Compose the three feedback sections.

    Template mode is a pure function of its inputs: strengths are items with
    external mean >= strength_mean (best first), improvements <= improvement_mean
    (worst first), and each improvement gets an action-plan entry with linked
    metric evidence substituted. Generator mode submits a request document and
    falls back to template mode when the response fails validation.
    """
    sections = FeedbackSections()

    if generator is not None:
        request = build_generation_request(aggregates, metrics, rubric)
        try:
            response = generator.generate(request)
        except Exception as exc:  # generator failures must never break reports
            response = None
            sections.warnings.append(f"generator failed: {exc}")
        validated = _validate_generated(response, rubric) if response is not None else None
        if validated is not None:
            sections.strengths = validated["strengths"]
            sections.improvements = validated["improvements"]
            sections.action_plan = [
                (item_id, text, format_metric_evidence(
                    rubric.item(item_id).metric_link,
                    metrics.get(rubric.item(item_id).metric_link)
                    if rubric.item(item_id).metric_link else None,
                ))
                for item_id, text in validated["action_plan"]
            ]
            sections.provenance = "generated"
            return sections
        if response is not None and not sections.warnings:
            sections.warnings.append("generator response failed validation; using templates")

    templates = templates or {}
    scored = [
        (item, aggregates.item(item.id))
        for item in rubric.items
        if aggregates.item(item.id) and aggregates.item(item.id).external_mean is not None
    ]

    def evidence_for(item, agg):
        parts = [f"external mean {agg.external_mean:.1f}/5"]
        if item.metric_link:
            metric_text = format_metric_evidence(item.metric_link, metrics.get(item.metric_link))
            if metric_text:
                parts.append(metric_text)
        return "; ".join(parts)

    strengths = [(item, agg) for item, agg in scored if agg.external_mean >= strength_mean]
    strengths.sort(key=lambda p: (-p[1].external_mean, p[0].id))
    sections.strengths = [(item.id, evidence_for(item, agg)) for item, agg in strengths]

    improvements = [(item, agg) for item, agg in scored if agg.external_mean <= improvement_mean]
    improvements.sort(key=lambda p: (p[1].external_mean, p[0].id))
    sections.improvements = [(item.id, evidence_for(item, agg)) for item, agg in improvements]

    for item, agg in improvements:
        template = templates.get(item.id) or DEFAULT_ACTION_TEMPLATES.get(item.id)
        if template is None:
            sections.warnings.append(f"no action template for {item.id!r}; using generic text")
            template = GENERIC_ACTION_TEMPLATE
        metric_text = None
        if item.metric_link:
            metric_text = format_metric_evidence(item.metric_link, metrics.get(item.metric_link))
        recommendation = template.format(title=item.title, metric=metric_text or "")
        sections.action_plan.append((item.id, recommendation.strip(), metric_text))
    return sections
