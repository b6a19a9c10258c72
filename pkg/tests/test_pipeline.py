import json

import pytest

from mosaic import ingest, pipeline
from mosaic.core import load_bundle
from mosaic.model import HeadPoseFrame


def write_bundle(tmp_path, streams):
    descriptor = {
        "id": "s1", "presenter_id": "p1",
        "evaluators": [{"id": "prof1", "role": "professor"},
                       {"id": "peer1", "role": "peer"},
                       {"id": "peer2", "role": "peer"}],
        "planned_duration_ms": 60_000, "qa_duration_ms": 0,
        "sync_map": {sid: 0 for sid in streams},
        "streams": {
            sid: {"kind": kind, "path": f"streams/{sid}.jsonl", "actor": actor}
            for sid, (kind, actor, _) in streams.items()
        },
    }
    (tmp_path / "session.json").write_text(json.dumps(descriptor))
    (tmp_path / "streams").mkdir()
    for sid, (kind, _, samples) in streams.items():
        (tmp_path / "streams" / f"{sid}.jsonl").write_bytes(
            ingest.serialize_stream(kind, samples)
        )
    return tmp_path


def pose_frames(eulers, step=100):
    return [HeadPoseFrame(i * step, euler=e) for i, e in enumerate(eulers)]


class TestHeadposeDispatch:
    def test_evaluator_streams_use_evaluator_cones(self, tmp_path):
        presenter = pose_frames([(0.0, 0.0, 0.0)] * 100)          # audience
        evaluator = pose_frames([(-40.0, 0.0, 0.0)] * 60          # screen
                                + [(0.0, 120.0, 0.0)] * 40)       # distracted
        bundle = load_bundle(write_bundle(tmp_path, {
            "headpose_presenter": ("headpose_jsonl", "p1", presenter),
            "headpose_evaluator_prof1": ("headpose_jsonl", "prof1", evaluator),
        }))
        _, results = pipeline.run_analyses(bundle, only=["headpose"])
        record = results["headpose"]
        assert record["status"] == "ok"
        assert record["metrics"]["eye_contact_ratio"] == 1.0
        prof = record["details"]["evaluators"]["prof1"]
        assert prof["shares"]["screen"] == pytest.approx(0.6, abs=1e-9)
        assert prof["shares"]["distracted"] == pytest.approx(0.4, abs=1e-9)
        assert prof["focus_ratio"] == 0.0  # never looked at the presenter

    def test_presenter_stream_selected_by_actor(self, tmp_path):
        # the evaluator stream sorts first; actor matching must still pick
        # the presenter stream as primary
        presenter = pose_frames([(0.0, 40.0, 0.0)] * 50)  # slides
        evaluator = pose_frames([(0.0, 0.0, 0.0)] * 50)
        bundle = load_bundle(write_bundle(tmp_path, {
            "a_headpose_eval": ("headpose_jsonl", "peer1", evaluator),
            "z_headpose_presenter": ("headpose_jsonl", "p1", presenter),
        }))
        _, results = pipeline.run_analyses(bundle, only=["headpose"])
        assert results["headpose"]["details"]["stream"] == "z_headpose_presenter"
        assert results["headpose"]["details"]["shares"] == {"slides": 1.0}


class TestSpeechLexicon:
    def test_lexicon_file_one_entry_per_line(self, tmp_path):
        from mosaic.model import TranscriptWord

        descriptor = {
            "id": "s1", "presenter_id": "p1",
            "evaluators": [{"id": "prof1", "role": "professor"},
                           {"id": "peer1", "role": "peer"},
                           {"id": "peer2", "role": "peer"}],
            "planned_duration_ms": 60_000, "qa_duration_ms": 0,
            "sync_map": {"transcript": 0},
            "streams": {},
            "thresholds": {"lexicon_path": "lexicon.txt"},
        }
        (tmp_path / "session.json").write_text(json.dumps(descriptor))
        (tmp_path / "lexicon.txt").write_text("o sea\neste\n")
        words = []
        t = 0
        for token in "bueno este dato o sea importante".split():
            words.append(TranscriptWord(token, t, t + 200))
            t += 250
        (tmp_path / "transcript.jsonl").write_bytes(
            ingest.serialize_stream(ingest.TRANSCRIPT_JSONL, words)
        )
        bundle = load_bundle(tmp_path)
        _, results = pipeline.run_analyses(bundle, only=["speech"])
        assert results["speech"]["details"]["filler_counts"] == {"este": 1, "o sea": 1}


class TestMetricsIndex:
    def test_only_ok_analyses_contribute(self, tmp_path):
        bundle = load_bundle(write_bundle(tmp_path, {
            "headpose_presenter": ("headpose_jsonl", "p1",
                                   pose_frames([(0.0, 0.0, 0.0)] * 20)),
        }))
        _, results = pipeline.run_analyses(bundle)
        metrics = pipeline.metrics_index(results)
        assert metrics["headpose.eye_contact_ratio"] == 1.0
        assert not any(k.startswith("gaze.") for k in metrics)
