"""Acceptance suite: one test per release criterion, each printing a
pass/fail line with the measured numbers at the stated tolerance."""
import json
import time
import urllib.request

import numpy as np
from scipy import stats as scipy_stats
from scipy.spatial.transform import Rotation

from mosaic import biosignal, pipeline, report as report_mod, speech, slides, vision
from mosaic.capture import CaptureServer
from mosaic.cli import main as cli_main
from mosaic.core import load_bundle
from mosaic.synth import SynthConfig, generate_session

from deck_fixtures import build_pptx, picture, slide, text_shape


def report_line(number, name, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {number} {status} [{name}] {detail}")
    assert ok, f"criterion {number} ({name}): {detail}"


def test_criterion_01_statistical_correctness():
    t0 = time.monotonic()
    r = biosignal.t_test([2, 4, 6], [1, 2, 3], mode="paired")
    worked = (abs(r.t - 3.4641016151377553) < 1e-9 and r.df == 2
              and abs(r.p_two_sided - 0.07417990022744853) < 1e-9)

    rng = np.random.default_rng(20_240_601)
    max_err = 0.0
    for _ in range(100):
        n1 = int(rng.integers(2, 10))
        n2 = int(rng.integers(2, 10))
        a = rng.normal(rng.uniform(-3, 3), rng.uniform(0.5, 2), n1)
        b = rng.normal(rng.uniform(-3, 3), rng.uniform(0.5, 2), n2)
        ours = biosignal.t_test(list(a), list(b), mode="welch")
        ref = scipy_stats.ttest_ind(a, b, equal_var=False)
        max_err = max(max_err, abs(ours.t - ref.statistic),
                      abs(ours.p_two_sided - ref.pvalue))
        d = rng.normal(0, 1, n1)
        base = rng.normal(0, 1, n1)
        ours_p = biosignal.t_test(list(base + d), list(base), mode="paired")
        ref_p = scipy_stats.ttest_rel(base + d, base)
        max_err = max(max_err, abs(ours_p.t - ref_p.statistic),
                      abs(ours_p.p_two_sided - ref_p.pvalue))
    elapsed = time.monotonic() - t0
    report_line(
        1, "statistical correctness",
        worked and max_err < 1e-9 and elapsed < 1.0,
        f"worked example ok={worked}, max |delta| vs reference = {max_err:.2e}, "
        f"runtime {elapsed:.2f}s (< 1 s)",
    )


def test_criterion_02_peak_recovery(tmp_path):
    t0 = time.monotonic()
    tp = fp = fn = 0
    for seed in range(10):
        out = tmp_path / f"hr{seed}"
        cfg = SynthConfig(profile="noisy", parts=("heart",))
        manifest = generate_session(seed, out, cfg)
        bundle = load_bundle(out)
        smoothed = biosignal.smooth(bundle.streams["heart_presenter"])
        peaks = biosignal.detect_peaks(smoothed)
        surges = manifest["heart"]["surge_times_ms"]
        matched = set()
        for p in peaks:
            gap, idx = min((abs(p.ts_ms - c), i) for i, c in enumerate(surges))
            if gap <= 5_000 and idx not in matched:
                matched.add(idx)
                tp += 1
            else:
                fp += 1
        fn += len(surges) - len(matched)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    elapsed = time.monotonic() - t0
    report_line(
        2, "peak recovery",
        precision >= 0.95 and recall >= 0.95 and elapsed < 5.0,
        f"precision={precision:.3f} recall={recall:.3f} over 10 noisy seeds "
        f"(TP={tp} FP={fp} FN={fn}), runtime {elapsed:.2f}s (< 5 s)",
    )


def test_criterion_03_euler_round_trip():
    rng = np.random.default_rng(3_141)
    worst = 0.0
    matrices = [Rotation.random(random_state=rng).as_matrix() for _ in range(700)]
    for _ in range(300):
        pitch = 89.9 + 10 ** rng.uniform(-7, -1)  # |pitch| > 89.9 deg
        pitch = min(pitch, 90.0)
        if rng.uniform() < 0.5:
            pitch = -pitch
        yaw = float(rng.uniform(-179, 179))
        roll = float(rng.uniform(-179, 179))
        matrices.append(
            Rotation.from_euler("YXZ", [yaw, pitch, roll], degrees=True).as_matrix()
        )
    for R in matrices:
        pose = vision.euler_from_rotation(R)
        back = vision.rotation_from_euler(pose.pitch, pose.yaw, pose.roll)
        worst = max(worst, float(np.abs(back - R).max()))
    report_line(
        3, "euler round-trip",
        worst < 1e-6,
        f"max element-wise error {worst:.2e} over 1000 rotations "
        f"(300 near gimbal lock) (< 1e-6)",
    )


def test_criterion_04_attention_shares(tmp_path):
    worst = 0.0
    worst_sum = 0.0
    for seed in (1, 2, 3):
        out = tmp_path / f"att{seed}"
        manifest = generate_session(seed, out, SynthConfig(parts=("headpose",)))
        bundle = load_bundle(out)
        summary = vision.attention_summary(bundle.streams["headpose_presenter"])
        for target, expected in manifest["attention"]["shares"].items():
            worst = max(worst, abs(summary.shares.get(target, 0.0) - expected))
        worst_sum = max(worst_sum, abs(sum(summary.shares.values()) - 1.0))
    report_line(
        4, "attention shares",
        worst <= 0.02 and worst_sum <= 1e-9,
        f"max share error {worst:.4f} (<= 0.02), share-sum error {worst_sum:.1e} "
        f"(<= 1e-9) over 3 seeds",
    )


def test_criterion_05_pitch_estimation():
    fs = 16_000
    ok = True
    details = []
    for freq in (100.0, 220.0, 330.0):
        t = np.arange(fs * 2) / fs
        sig = speech.AudioSignal(0.5 * np.sin(2 * np.pi * freq * t), fs)
        frames = speech.audio_features(sig)
        voiced = [f for f in frames if f.voiced]
        within = sum(1 for f in voiced if abs(f.f0_hz - freq) <= 3.0)
        fraction = within / len(voiced) if voiced else 0.0
        coverage = len(voiced) / len(frames)
        details.append(f"{freq:.0f}Hz: {fraction:.3f} within +/-3Hz, "
                       f"voiced {coverage:.2f}")
        ok = ok and fraction >= 0.95 and coverage >= 0.95
    silence_frames = speech.audio_features(speech.AudioSignal(np.zeros(fs), fs))
    silence_ok = all(not f.voiced for f in silence_frames)
    report_line(
        5, "pitch estimation",
        ok and silence_ok,
        "; ".join(details) + f"; silence voiced frames = "
        f"{sum(f.voiced for f in silence_frames)} (must be 0)",
    )


def test_criterion_06_gaze_oracle(tmp_path):
    count_ok = True
    worst_share = 0.0
    for seed in (4, 5, 6):
        out = tmp_path / f"gz{seed}"
        manifest = generate_session(seed, out, SynthConfig(parts=("gaze",)))
        bundle = load_bundle(out)
        samples = bundle.streams["gaze_observer"]
        from mosaic import gaze as gaze_mod
        fixations, _ = gaze_mod.detect_fixations(samples)
        blinks, _, _ = gaze_mod.detect_blinks(samples)
        truth = manifest["gaze"]
        count_ok = count_ok and len(fixations) == truth["fixation_count"]
        count_ok = count_ok and len(blinks) == truth["blink_count"]
        aois = gaze_mod.aoi_from_config(truth["aoi_config"])
        mapping = gaze_mod.map_aoi(fixations, aois)
        for name, expected in truth["aoi_shares"].items():
            worst_share = max(worst_share,
                              abs(mapping["shares"].get(name, 0.0) - expected))
    report_line(
        6, "gaze oracle",
        count_ok and worst_share <= 0.01,
        f"fixation/blink counts exact={count_ok}, max AOI share error "
        f"{worst_share:.4f} (<= 0.01) over 3 seeds",
    )


def test_criterion_07_transcript_patterns(tmp_path):
    exact = True
    for seed in (8, 9, 10):
        out = tmp_path / f"tr{seed}"
        manifest = generate_session(seed, out, SynthConfig(parts=("transcript",)))
        bundle = load_bundle(out)
        result = speech.transcript_patterns(bundle.transcript)
        truth = manifest["speech"]
        got = {k: v for k, v in result.filler_counts.items() if v}
        exact = exact and got == truth["filler_counts"]
        exact = exact and len(result.false_starts) == truth["false_starts"]
        long_pauses = sum(1 for _, _, c in result.pauses if c == "long")
        exact = exact and long_pauses == truth["long_pauses"]

    from mosaic.model import TranscriptWord
    words = []
    t = 0
    for token in "um so like you know".split():
        words.append(TranscriptWord(token, t, t + 200))
        t += 250
    case = speech.transcript_patterns(words)
    longest_match_ok = (
        {k: v for k, v in case.filler_counts.items() if v}
        == {"um": 1, "like": 1, "you know": 1}
    )
    report_line(
        7, "transcript patterns",
        exact and longest_match_ok,
        f"manifest-exact counts over 3 seeds = {exact}; "
        f"longest-match 'you know' case = {longest_match_ok}",
    )


def test_criterion_08_evaluation_audit(tmp_path):
    all_ok = True
    for seed in range(10):
        out = tmp_path / f"ev{seed}"
        cfg = SynthConfig(parts=("events", "annotations", "evaluations"))
        manifest = generate_session(seed, out, cfg)
        bundle = load_bundle(out)
        _, results = pipeline.run_analyses(bundle, only=["interaction"])
        evaluators = results["interaction"]["details"]["evaluators"]
        flagged = [
            (actor, p["item_id"])
            for actor, audit in evaluators.items()
            for p in audit["premature_items"]
        ]
        scripted = manifest["events"]["premature"]
        expected = [(scripted["actor_id"], scripted["item_id"])]
        all_ok = all_ok and flagged == expected
    report_line(
        8, "evaluation audit",
        all_ok,
        f"exactly the scripted premature rating flagged in 10/10 seeds = {all_ok}",
    )


def test_criterion_09_deck_analysis():
    dense_words = " ".join(f"w{i}" for i in range(55))
    deck_bytes = build_pptx([
        slide(text_shape([("Opening Slide", None)], ph_type="title")
              + text_shape([("intro words here", 2400)], shape_id=3)),
        slide(text_shape([(dense_words, None)])),
        slide(text_shape([("tiny print", 1200)]) + picture(7) + picture(8)),
        slide(text_shape([("Benchmarks", 1800)])),
    ])
    deck = slides.parse_deck(deck_bytes)
    findings = slides.deck_findings(deck)
    checks = {
        "slide_count": deck.slide_count == 4,
        "word_counts": [s.word_count for s in deck.slides] == [5, 55, 2, 1],
        "image_counts": [s.image_count for s in deck.slides] == [0, 0, 2, 0],
        "small_font_flags": [f.small_font for f in findings.per_slide]
        == [False, False, True, False],
        "font_1800_reads_18pt": deck.slides[3].text_runs[0].font_pt == 18.0,
        "dense_flags": [f.text_dense for f in findings.per_slide]
        == [False, True, False, False],
    }
    report_line(
        9, "deck analysis",
        all(checks.values()),
        ", ".join(f"{k}={v}" for k, v in checks.items()),
    )


def test_criterion_10_end_to_end_determinism(tmp_path):
    t0 = time.monotonic()
    reports = []
    for run in ("a", "b"):
        base = tmp_path / run
        bundle_dir = base / "bundle"
        assert cli_main(["synth", "--seed", "42", "-o", str(bundle_dir)]) == 0
        assert cli_main(["analyze", str(bundle_dir),
                         "-o", str(base / "analyses.json")]) == 0
        assert cli_main(["report", str(bundle_dir), "--format", "json",
                         "-o", str(base / "report.json")]) == 0
        reports.append((base / "report.json").read_bytes())
    identical = reports[0] == reports[1]

    import jsonschema
    from pathlib import Path
    schema_path = Path(__file__).resolve().parent.parent / "docs" / "report-schema.json"
    schema = json.loads(schema_path.read_text("utf-8"))
    jsonschema.validate(json.loads(reports[0]), schema)
    schema_matches_package = schema == report_mod.load_schema()
    elapsed = time.monotonic() - t0
    report_line(
        10, "end-to-end determinism",
        identical and schema_matches_package and elapsed < 60.0,
        f"byte-identical={identical}, report validates against published schema "
        f"(docs copy == packaged copy: {schema_matches_package}), "
        f"two full pipelines in {elapsed:.1f}s (< 60 s)",
    )


RUBRIC_DOC = {
    "version": "1",
    "items": [
        {"id": "eye_contact", "title": "Eye contact",
         "levels": ["a", "b", "c", "d", "e"]},
        {"id": "conclusions", "title": "Conclusions",
         "levels": ["a", "b", "c", "d", "e"], "phase": "conclusion"},
    ],
}


def _post(base, path, body):
    req = urllib.request.Request(
        f"{base}{path}", data=json.dumps(body).encode(), method="POST",
        headers={"Content-Type": "application/json"},
    )
    with urllib.request.urlopen(req, timeout=5) as resp:
        return resp.status, json.loads(resp.read().decode() or "{}")


def test_criterion_11_capture_round_trip(tmp_path):
    rubric_path = tmp_path / "rubric.json"
    rubric_path.write_text(json.dumps(RUBRIC_DOC))
    labels_path = tmp_path / "labels.txt"
    labels_path.write_text("nervous_movement\nreading_notes\neye_contact\n")
    out = tmp_path / "capture"
    server = CaptureServer(
        out_dir=out, rubric_path=rubric_path, labels_path=labels_path, port=0,
        evaluators=[("prof1", "professor"), ("peer1", "peer"), ("peer2", "peer")],
    ).start_background()
    base = f"http://127.0.0.1:{server.port}"
    scripted = {"prof1": 240, "peer1": 180, "peer2": 300}  # ms per item focus
    try:
        _post(base, "/api/v1/start", {})
        # observer: two instants and one interval pair
        _post(base, "/api/v1/annotations", {"label": "eye_contact", "kind": "instant"})
        _post(base, "/api/v1/annotations", {"label": "reading_notes", "kind": "start"})
        _post(base, "/api/v1/annotations", {"label": "reading_notes", "kind": "end"})
        _post(base, "/api/v1/annotations", {"label": "nervous_movement", "kind": "instant"})

        client_t0 = time.monotonic()

        def now_client():
            return int((time.monotonic() - client_t0) * 1000)

        for actor, focus_ms in scripted.items():
            for item in ("eye_contact", "conclusions"):
                _post(base, "/api/v1/events", [
                    {"client_ts_ms": now_client(), "actor_id": actor,
                     "kind": "item_focus", "item_id": item},
                ])
                time.sleep(focus_ms / 1000)
                _post(base, "/api/v1/events", [
                    {"client_ts_ms": now_client(), "actor_id": actor,
                     "kind": "item_rated", "item_id": item, "value": 4},
                    {"client_ts_ms": now_client(), "actor_id": actor,
                     "kind": "item_blur", "item_id": item},
                ])
            _post(base, "/api/v1/evaluations", {
                "evaluator_id": actor,
                "role": "professor" if actor == "prof1" else "peer",
                "scores": {"eye_contact": 4, "conclusions": 3},
                "comments": {"eye_contact": "steady gaze through the middle",
                             "conclusions": "recap came through clearly"},
            })
    finally:
        server.shutdown()

    bundle = load_bundle(out)  # zero validation errors or this raises
    _, results = pipeline.run_analyses(bundle, only=["interaction"])
    evaluators = results["interaction"]["details"]["evaluators"]
    worst = 0.0
    for actor, focus_ms in scripted.items():
        for item in ("eye_contact", "conclusions"):
            measured = evaluators[actor]["focus_ms"][item]
            worst = max(worst, abs(measured - focus_ms))
    annotations_ok = len(bundle.annotations) == 4
    evals_ok = len(bundle.evaluations) == 3
    report_line(
        11, "capture round-trip",
        worst <= 50 and annotations_ok and evals_ok,
        f"bundle loaded cleanly; max focus-time error {worst:.0f}ms (<= 50ms); "
        f"annotations={len(bundle.annotations)}, evaluations={len(bundle.evaluations)}",
    )
