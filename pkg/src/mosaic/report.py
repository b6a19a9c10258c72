"""Unified feedback report: assembly, schema validation, and rendering.

The report merges human assessment (rubric aggregates + feedback sections)
with the data-based analyses on one timeline. Assembly is deterministic:
floats are rounded to six decimals, keys serialize in sorted order, and no
wall-clock state enters the report, so identical inputs yield identical
bytes. The machine-readable schema ships alongside the package and is
published at docs/report-schema.json.
"""
from __future__ import annotations

import html as html_mod
import json
import math
from importlib import resources

import jsonschema

from .errors import SchemaViolation, UnsupportedFormat, ValidationError
from .pipeline import ANALYSES

SCHEMA_VERSION = "1.0"


def load_schema():
    text = resources.files("mosaic").joinpath("report_schema.json").read_text("utf-8")
    return json.loads(text)


def _round_floats(value):
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            raise SchemaViolation("report contains a non-finite number")
        return round(value, 6)
    if isinstance(value, dict):
        return {k: _round_floats(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round_floats(v) for v in value]
    return value


def _merged_timeline(bundle, results):
    events = []
    for a in bundle.annotations:
        events.append({
            "ts_ms": a.ts_ms, "kind": f"annotation_{a.kind}", "label": a.label,
        })
    heart = results.get("heart") or {}
    if heart.get("status") == "ok":
        for p in heart["details"]["peaks"]:
            events.append({"ts_ms": p["ts_ms"], "kind": "hr_peak",
                           "label": f"{p['bpm']:.0f} bpm"})
    posture = results.get("posture") or {}
    if posture.get("status") == "ok":
        for s, e in posture["details"]["pacing_episodes"]:
            events.append({"ts_ms": s, "kind": "pacing", "label": "pacing",
                           "end_ms": e})
    for ev in bundle.events:
        if ev.kind in ("slide_advance", "slide_back"):
            events.append({"ts_ms": ev.ts_ms, "kind": ev.kind, "label": ev.kind})
    interaction = results.get("interaction") or {}
    if interaction.get("status") == "ok":
        for actor, audit in interaction["details"]["evaluators"].items():
            for p in audit["premature_items"]:
                events.append({
                    "ts_ms": p["rated_ms"], "kind": "premature_rating",
                    "label": f"{actor}:{p['item_id']}",
                })
    events.sort(key=lambda e: (e["ts_ms"], e["kind"], e["label"]))
    return events


def assemble_report(bundle, schedule, results, aggregates=None, sections=None,
                    class_means=None):
    """Build and validate the report document (a plain dict)."""
    session = bundle.session
    has_human = aggregates is not None
    has_data = any(r["status"] == "ok" for r in results.values())
    if not has_human and not has_data:
        raise ValidationError("nothing to report: no evaluations and no analyses")

    role_of = dict(session.evaluators)
    comparisons = []
    aggregates_doc = None
    sections_doc = None
    if has_human:
        aggregates_doc = {}
        for item_id in sorted(aggregates.items):
            item = aggregates.items[item_id]
            class_mean = (class_means or {}).get(item_id)
            aggregates_doc[item_id] = {
                "external_mean": item.external_mean,
                "professor_mean": item.professor_mean,
                "peer_mean": item.peer_mean,
                "self_score": item.self_score,
                "spread": item.spread,
                "divergence": item.divergence,
                "class_mean": class_mean,
                "comments": item.comments,
            }
            title = item_id
            if bundle.rubric is not None and bundle.rubric.item(item_id):
                title = bundle.rubric.item(item_id).title
            comparisons.append({
                "item_id": item_id,
                "title": title,
                "self": item.self_score,
                "peer": item.peer_mean,
                "professor": item.professor_mean,
                "external": item.external_mean,
                "class": class_mean,
            })
        if sections is not None:
            sections_doc = {
                "strengths": [
                    {"item_id": i, "evidence": e} for i, e in sections.strengths
                ],
                "improvements": [
                    {"item_id": i, "evidence": e} for i, e in sections.improvements
                ],
                "action_plan": [
                    {"item_id": i, "recommendation": r, "metric_evidence": m}
                    for i, r, m in sections.action_plan
                ],
                "provenance": sections.provenance,
                "review_status": sections.review_status,
            }

    limitations = sorted({note for r in results.values() for note in r.get("notes", [])})

    report = {
        "schema_version": SCHEMA_VERSION,
        "session": {
            "id": session.id,
            "presenter_id": session.presenter_id,
            "planned_duration_ms": session.planned_duration_ms,
            "qa_duration_ms": session.qa_duration_ms,
            "evaluators": [
                {"id": eid, "role": role_of[eid]} for eid, _ in session.evaluators
            ],
            "observers": list(session.observers),
        },
        "phase_schedule": [
            {"name": p.name, "start_ms": p.start_ms, "end_ms": p.end_ms}
            for p in schedule
        ],
        "human_feedback": (
            {"aggregates": aggregates_doc, "sections": sections_doc}
            if has_human else None
        ),
        "data_feedback": {name: results[name] for name in ANALYSES},
        "comparisons": comparisons,
        "timeline": _merged_timeline(bundle, results),
        "limitations": limitations,
        "warnings": sorted(set(bundle.warnings)),
    }
    report = _round_floats(report)
    try:
        jsonschema.validate(report, load_schema())
    except jsonschema.ValidationError as exc:
        raise SchemaViolation(f"assembled report violates schema: {exc.message}") from exc
    return report


def render(report, fmt="json") -> bytes:
    if fmt == "json":
        return (json.dumps(report, indent=2, sort_keys=True, ensure_ascii=True)
                + "\n").encode("utf-8")
    if fmt == "md":
        return _render_md(report).encode("utf-8")
    if fmt == "html":
        return _render_html(report).encode("utf-8")
    raise UnsupportedFormat(fmt)


# --- markdown ----------------------------------------------------------------

_ANALYSIS_TITLES = {
    "headpose": "Head pose and visual attention",
    "posture": "Body posture",
    "audio": "Vocal delivery",
    "speech": "Speech patterns",
    "heart": "Heart rate",
    "gaze": "Audience gaze",
    "interaction": "Evaluation process",
    "slides": "Slide deck",
}


def _fmt_value(v):
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.3f}".rstrip("0").rstrip(".")
    if v is None:
        return "n/a"
    return str(v)


def _render_md(report) -> str:
    lines = [f"# Presentation feedback: session {report['session']['id']}", ""]
    human = report.get("human_feedback")

    lines.append("## Strengths")
    lines.append("")
    if human and human.get("sections") and human["sections"]["strengths"]:
        for s in human["sections"]["strengths"]:
            lines.append(f"- **{s['item_id']}**: {s['evidence']}")
    else:
        lines.append("none")
    lines.append("")

    lines.append("## Areas for improvement")
    lines.append("")
    if human and human.get("sections") and human["sections"]["improvements"]:
        for s in human["sections"]["improvements"]:
            lines.append(f"- **{s['item_id']}**: {s['evidence']}")
    else:
        lines.append("none")
    lines.append("")

    lines.append("## Action plan")
    lines.append("")
    if human and human.get("sections") and human["sections"]["action_plan"]:
        for s in human["sections"]["action_plan"]:
            extra = f" ({s['metric_evidence']})" if s.get("metric_evidence") else ""
            lines.append(f"- **{s['item_id']}**: {s['recommendation']}{extra}")
    else:
        lines.append("none")
    lines.append("")

    if report["comparisons"]:
        lines.append("## Self vs peers vs professors vs class")
        lines.append("")
        lines.append("| item | self | peer | professor | class |")
        lines.append("| --- | --- | --- | --- | --- |")
        for c in report["comparisons"]:
            lines.append(
                f"| {c['title']} | {_fmt_value(c['self'])} | {_fmt_value(c['peer'])} "
                f"| {_fmt_value(c['professor'])} | {_fmt_value(c['class'])} |"
            )
        lines.append("")

    lines.append("## Data-based findings")
    lines.append("")
    for name in ANALYSES:
        record = report["data_feedback"][name]
        lines.append(f"### {_ANALYSIS_TITLES[name]}")
        lines.append("")
        if record["status"] != "ok":
            lines.append(f"_{record['status']}: {record.get('reason') or 'unavailable'}_")
            lines.append("")
            continue
        for key in sorted(record["metrics"]):
            lines.append(f"- {key}: {_fmt_value(record['metrics'][key])}")
        lines.append("")

    if report["limitations"]:
        lines.append("## Limitations")
        lines.append("")
        for note in report["limitations"]:
            lines.append(f"- {note}")
        lines.append("")
    return "\n".join(lines) + "\n"


# --- html ----------------------------------------------------------------------

_TIMELINE_COLORS = {
    "hr_peak": "#d62728",
    "slide_advance": "#1f77b4",
    "slide_back": "#17becf",
    "pacing": "#ff7f0e",
    "premature_rating": "#9467bd",
}
_ANNOTATION_COLOR = "#2ca02c"


def _svg_timeline(report, width=960, height=120):
    span = max(
        report["session"]["planned_duration_ms"] + report["session"]["qa_duration_ms"],
        1,
    )
    rows = ["annotation", "hr_peak", "slide", "pacing", "premature_rating"]
    row_y = {name: 18 + i * 20 for i, name in enumerate(rows)}

    parts = [
        f'<svg role="img" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" xmlns="http://www.w3.org/2000/svg">'
    ]
    for phase in report["phase_schedule"]:
        x0 = phase["start_ms"] / span * width
        x1 = phase["end_ms"] / span * width
        parts.append(
            f'<rect x="{x0:.1f}" y="0" width="{x1 - x0:.1f}" height="{height}" '
            f'fill="#f3f3f3" stroke="#ddd"/>'
            f'<text x="{x0 + 3:.1f}" y="12" font-size="10" fill="#666">{phase["name"]}</text>'
        )
    for ev in report["timeline"]:
        x = ev["ts_ms"] / span * width
        kind = ev["kind"]
        if kind.startswith("annotation"):
            row, color = "annotation", _ANNOTATION_COLOR
        elif kind.startswith("slide"):
            row, color = "slide", _TIMELINE_COLORS[kind]
        else:
            row, color = kind, _TIMELINE_COLORS.get(kind, "#555")
        y = row_y.get(row, height - 12)
        if "end_ms" in ev:
            x1 = ev["end_ms"] / span * width
            parts.append(
                f'<rect x="{x:.1f}" y="{y - 5}" width="{max(x1 - x, 1.0):.1f}" height="10" '
                f'fill="{color}" opacity="0.6"><title>{html_mod.escape(ev["label"])}</title></rect>'
            )
        else:
            parts.append(
                f'<circle cx="{x:.1f}" cy="{y}" r="4" fill="{color}">'
                f'<title>{html_mod.escape(ev["label"])}</title></circle>'
            )
    parts.append("</svg>")
    return "".join(parts)


def _svg_comparisons(report, width=960):
    comparisons = report["comparisons"]
    if not comparisons:
        return ""
    bar_groups = len(comparisons)
    group_w = width / max(bar_groups, 1)
    height = 180
    series = [("self", "#9467bd"), ("peer", "#1f77b4"),
              ("professor", "#d62728"), ("class", "#2ca02c")]
    parts = [
        f'<svg role="img" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" xmlns="http://www.w3.org/2000/svg">'
    ]
    chart_h = height - 40
    for gi, c in enumerate(comparisons):
        gx = gi * group_w
        bw = min(18.0, group_w / 6)
        for si, (key, color) in enumerate(series):
            v = c.get(key)
            if v is None:
                continue
            h = v / 5.0 * chart_h
            x = gx + 8 + si * (bw + 2)
            parts.append(
                f'<rect x="{x:.1f}" y="{chart_h - h + 10:.1f}" width="{bw:.1f}" '
                f'height="{h:.1f}" fill="{color}">'
                f'<title>{html_mod.escape(c["item_id"])} {key}: {v}</title></rect>'
            )
        parts.append(
            f'<text x="{gx + 6:.1f}" y="{height - 8}" font-size="9" fill="#333">'
            f'{html_mod.escape(c["item_id"][:14])}</text>'
        )
    parts.append("</svg>")
    return "".join(parts)


def _render_html(report) -> str:
    md_body = _render_md(report)
    # minimal markdown-to-html: headings, bullets, and tables are enough here
    html_lines = []
    in_list = False
    in_table = False
    for line in md_body.split("\n"):
        esc = html_mod.escape(line)
        if line.startswith("|"):
            cells = [c.strip() for c in line.strip("|").split("|")]
            if all(set(c) <= {"-", " "} and c for c in cells):
                continue
            tag = "th" if not in_table else "td"
            if not in_table:
                html_lines.append('<table border="1" cellspacing="0" cellpadding="4">')
                in_table = True
            row = "".join(f"<{tag}>{html_mod.escape(c)}</{tag}>" for c in cells)
            html_lines.append(f"<tr>{row}</tr>")
            continue
        if in_table:
            html_lines.append("</table>")
            in_table = False
        if line.startswith("- "):
            if not in_list:
                html_lines.append("<ul>")
                in_list = True
            html_lines.append(f"<li>{html_mod.escape(line[2:])}</li>")
            continue
        if in_list:
            html_lines.append("</ul>")
            in_list = False
        if line.startswith("### "):
            html_lines.append(f"<h3>{esc[4:]}</h3>")
        elif line.startswith("## "):
            html_lines.append(f"<h2>{esc[3:]}</h2>")
        elif line.startswith("# "):
            html_lines.append(f"<h1>{esc[2:]}</h1>")
        elif line.strip():
            html_lines.append(f"<p>{esc}</p>")
    if in_list:
        html_lines.append("</ul>")
    if in_table:
        html_lines.append("</table>")

    # bold markers survive escaping; swap them for <strong>
    body = "\n".join(html_lines)
    while "**" in body:
        body = body.replace("**", "<strong>", 1).replace("**", "</strong>", 1)

    return (
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
        f"<title>Feedback: {html_mod.escape(report['session']['id'])}</title>"
        "<style>body{font-family:sans-serif;max-width:1000px;margin:2em auto;"
        "padding:0 1em;color:#222}svg{display:block;margin:1em 0}</style>"
        "</head><body>"
        + "<h2>Session timeline</h2>"
        + _svg_timeline(report)
        + "<h2>Score comparison</h2>"
        + _svg_comparisons(report)
        + body
        + "</body></html>\n"
    )
