import json

import jsonschema
import pytest

from mosaic import assessment, pipeline, report as report_mod
from mosaic.core import load_bundle, schedule_for_bundle
from mosaic.errors import SchemaViolation, UnsupportedFormat, ValidationError


class TestAssembleReport:
    def test_full_bundle_has_all_eight_analyses(self, full_report):
        doc, _, _, _ = full_report
        feedback = doc["data_feedback"]
        assert set(feedback) == set(pipeline.ANALYSES)
        assert all(feedback[name]["status"] == "ok" for name in feedback)

    def test_rubric_only_session_marks_analyses_absent(self, tmp_path):
        descriptor = {
            "id": "s1", "presenter_id": "p1",
            "evaluators": [{"id": "prof1", "role": "professor"},
                           {"id": "peer1", "role": "peer"},
                           {"id": "peer2", "role": "peer"}],
            "planned_duration_ms": 600_000, "sync_map": {}, "streams": {},
        }
        (tmp_path / "session.json").write_text(json.dumps(descriptor))
        (tmp_path / "rubric.json").write_text(json.dumps({
            "version": "1",
            "items": [{"id": "x", "title": "X", "levels": ["a", "b", "c", "d", "e"]}],
        }))
        (tmp_path / "evaluations").mkdir()
        (tmp_path / "evaluations" / "prof1.json").write_text(json.dumps({
            "evaluator_id": "prof1", "role": "professor",
            "scores": {"x": 4}, "comments": {"x": "good"},
        }))
        bundle = load_bundle(tmp_path)
        schedule, results = pipeline.run_analyses(bundle)
        aggregates = assessment.aggregate_rubric(bundle.evaluations, bundle.rubric)
        sections = assessment.compose_feedback(aggregates, {}, bundle.rubric)
        doc = report_mod.assemble_report(bundle, schedule, results, aggregates, sections)
        statuses = {name: r["status"] for name, r in doc["data_feedback"].items()}
        assert set(statuses.values()) == {"absent"}
        assert all(r["reason"] for r in doc["data_feedback"].values())

    def test_nothing_to_report_raises(self, tmp_path):
        descriptor = {
            "id": "s1", "presenter_id": "p1", "evaluators": [],
            "planned_duration_ms": 600_000, "sync_map": {}, "streams": {},
        }
        (tmp_path / "session.json").write_text(json.dumps(descriptor))
        bundle = load_bundle(tmp_path)
        schedule, results = pipeline.run_analyses(bundle)
        with pytest.raises(ValidationError):
            report_mod.assemble_report(bundle, schedule, results)

    def test_validates_against_published_schema(self, full_report):
        doc, _, _, _ = full_report
        jsonschema.validate(doc, report_mod.load_schema())

    def test_timeline_sorted(self, full_report):
        doc, _, _, _ = full_report
        ts = [e["ts_ms"] for e in doc["timeline"]]
        assert ts == sorted(ts)

    def test_timeline_covers_ground_truth_events(self, full_report):
        doc, _, manifest, _ = full_report
        kinds = {}
        for e in doc["timeline"]:
            kinds.setdefault(e["kind"], []).append(e)
        assert len(kinds["hr_peak"]) == len(manifest["heart"]["surge_times_ms"])
        assert len(kinds["slide_advance"]) == len(manifest["events"]["slide_advance_times_ms"]) + 1
        assert len(kinds["pacing"]) == len(manifest["posture"]["pacing_intervals_ms"])
        assert len(kinds["premature_rating"]) == 1

    def test_non_finite_numbers_rejected(self):
        with pytest.raises(SchemaViolation):
            report_mod._round_floats({"x": float("nan")})

    def test_floats_rounded_to_six_places(self, full_report):
        doc, _, _, _ = full_report

        def check(value, path="$"):
            if isinstance(value, float):
                assert value == round(value, 6), path
            elif isinstance(value, dict):
                for k, v in value.items():
                    check(v, f"{path}.{k}")
            elif isinstance(value, list):
                for i, v in enumerate(value):
                    check(v, f"{path}[{i}]")

        check(doc)


class TestRender:
    def test_json_round_trip(self, full_report):
        doc, _, _, _ = full_report
        data = report_mod.render(doc, "json")
        assert json.loads(data) == doc

    def test_json_deterministic(self, full_report):
        doc, bundle, _, results = full_report
        schedule = schedule_for_bundle(bundle)
        aggregates = assessment.aggregate_rubric(bundle.evaluations, bundle.rubric)
        metrics = pipeline.metrics_index(results)
        sections = assessment.compose_feedback(aggregates, metrics, bundle.rubric)
        doc2 = report_mod.assemble_report(bundle, schedule, results, aggregates, sections)
        assert report_mod.render(doc, "json") == report_mod.render(doc2, "json")

    def test_md_sections_present(self, full_report):
        doc, _, _, _ = full_report
        text = report_mod.render(doc, "md").decode()
        for heading in ("## Strengths", "## Areas for improvement", "## Action plan",
                        "## Data-based findings"):
            assert heading in text

    def test_md_empty_improvements_say_none(self, full_report):
        doc, _, _, _ = full_report
        trimmed = json.loads(json.dumps(doc))
        trimmed["human_feedback"]["sections"]["improvements"] = []
        text = report_mod.render(trimmed, "md").decode()
        idx = text.index("## Areas for improvement")
        assert "none" in text[idx:idx + 60]

    def test_html_is_standalone(self, full_report):
        doc, _, _, _ = full_report
        html = report_mod.render(doc, "html").decode()
        assert html.startswith("<!DOCTYPE html>")
        assert "<svg" in html
        assert "http-equiv" not in html
        assert "src=\"http" not in html and "href=\"http" not in html

    def test_html_marks_ground_truth_timeline(self, full_report):
        doc, _, manifest, _ = full_report
        html = report_mod.render(doc, "html").decode()
        # one circle per instant timeline entry, one rect per spanning entry
        point_count = sum(1 for e in doc["timeline"] if "end_ms" not in e)
        assert html.count("<circle") == point_count

    def test_unsupported_format(self, full_report):
        doc, _, _, _ = full_report
        with pytest.raises(UnsupportedFormat):
            report_mod.render(doc, "pdf")
