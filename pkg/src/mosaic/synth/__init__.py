"""Seeded synthetic-session generator.

Produces a complete bundle plus a ground-truth manifest that records exactly
what was injected (surge times, attention shares, fixation counts, filler
placements, the premature rating, ...). The manifest is the test oracle for
every detector. Generation is deterministic for a given seed and profile:
streams use independent PCG64 generators keyed by (seed, stream index), and
bundle bytes are reproducible across platforms.
"""
from __future__ import annotations

import io
import json
import math
import wave
from dataclasses import dataclass, replace
from pathlib import Path


import numpy as np

from .. import ingest
from ..model import (
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
from .deckgen import SlideSpec, build_deck

ALL_PARTS = (
    "heart", "headpose", "landmarks", "gaze", "audio", "transcript",
    "events", "annotations", "evaluations", "deck",
)

# rng stream indices, fixed so each part is independently reproducible
_RNG_OFFSETS = 0
_RNG_HEART = 1
_RNG_ATTENTION = 2
_RNG_LANDMARKS = 3
_RNG_GAZE = 4
_RNG_SPEECH = 5
_RNG_EVENTS = 6
_RNG_EVALS = 7
_RNG_ANNOTATIONS = 8


@dataclass
class SynthConfig:
    talk_ms: int = 600_000
    qa_ms: int = 300_000
    profile: str = "easy"  # easy | noisy
    parts: tuple = ALL_PARTS
    hr_sample_ms: int = 1_000
    hr_surge_count: int = 3
    hr_surge_amp: float = 15.0
    hr_surge_half_width_ms: int = 12_000
    hr_surge_min_gap_ms: int = 90_000
    headpose_sample_ms: int = 100
    attention_audience_share: float = 0.6
    landmark_sample_ms: int = 40
    gaze_sample_ms: int = 20
    gaze_face_share: float = 0.7
    gaze_blink_count: int = 12
    filler_plan: tuple = (("um", 7), ("like", 3), ("you know", 2))
    false_start_count: int = 1
    audio_rate: int = 16_000

    @property
    def noise_sd(self) -> float:
        return 2.0 if self.profile == "noisy" else 1.0

    @property
    def span_ms(self) -> int:
        return self.talk_ms + self.qa_ms

    @property
    def opening_end_ms(self) -> int:
        return round(self.talk_ms * 0.10)

    @property
    def conclusion_start_ms(self) -> int:
        return round(self.talk_ms * 0.80)


def _rng(seed, index):
    return np.random.default_rng([int(seed), index])


EVALUATORS = (("prof1", "professor"), ("peer1", "peer"), ("peer2", "peer"))

RUBRIC_ITEMS = (
    ("clarity_opening", "Clarity of the opening", "opening", None),
    ("structure", "Structure and signposting", None, None),
    ("eye_contact", "Eye contact with the audience", None, "headpose.eye_contact_ratio"),
    ("visual_aids", "Quality of visual aids", None, "slides.mean_words_per_slide"),
    ("pacing", "Pacing and timing", None, "speech.words_per_minute"),
    ("conclusions", "Strength of the conclusions", "conclusion", None),
)

_LEVELS = tuple(f"Level {i} descriptor" for i in range(1, 6))


def default_rubric() -> Rubric:
    return Rubric(version="1", items=tuple(
        RubricItem(id=i, title=t, levels=_LEVELS, phase=p, metric_link=m)
        for i, t, p, m in RUBRIC_ITEMS
    ))


# --- heart rate -------------------------------------------------------------

def _hr_baseline(t_ms, cfg: SynthConfig) -> float:
    opening_end = cfg.opening_end_ms
    concl_start = cfg.conclusion_start_ms
    ramp_start = concl_start - 40_000
    qa_start = cfg.talk_ms
    qa_settle = qa_start + 30_000
    if t_ms < opening_end:
        return 70.0
    if t_ms < ramp_start:
        return 70.0 + 10.0 * (t_ms - opening_end) / (ramp_start - opening_end)
    if t_ms < concl_start:
        x = (t_ms - ramp_start) / (concl_start - ramp_start)
        return 80.0 + 5.0 * (1 - math.cos(math.pi * x)) / 2.0
    if t_ms < qa_start:
        return 85.0
    if t_ms < qa_settle:
        x = (t_ms - qa_start) / (qa_settle - qa_start)
        return 85.0 - 7.0 * (1 - math.cos(math.pi * x)) / 2.0
    return 78.0


def _place_surges(rng, cfg: SynthConfig):
    """Surge centers inside steady baseline zones, pairwise well separated."""
    hw = cfg.hr_surge_half_width_ms
    zones = [
        (cfg.opening_end_ms + 30_000, cfg.conclusion_start_ms - 40_000 - 30_000 - hw),
        (cfg.talk_ms + 30_000 + 30_000, cfg.span_ms - 30_000 - hw),
    ]
    zones = [(a, b) for a, b in zones if b > a]
    if not zones or cfg.hr_surge_count <= 0:
        return []
    centers = []
    attempts = 0
    while len(centers) < cfg.hr_surge_count and attempts < 10_000:
        attempts += 1
        zi = int(rng.integers(0, len(zones)))
        a, b = zones[zi]
        c = int(rng.integers(a, b))
        if all(abs(c - o) >= cfg.hr_surge_min_gap_ms for o in centers):
            centers.append(c)
    centers.sort()
    return centers


def gen_heart(seed, cfg: SynthConfig):
    rng = _rng(seed, _RNG_HEART)
    surges = _place_surges(rng, cfg)
    hw = cfg.hr_surge_half_width_ms

    def surge_at(t):
        total = 0.0
        for c in surges:
            if abs(t - c) <= hw:
                total += cfg.hr_surge_amp * math.cos(math.pi * (t - c) / (2 * hw)) ** 2
        return total

    times = list(range(0, cfg.span_ms, cfg.hr_sample_ms))
    noise = rng.normal(0.0, cfg.noise_sd, size=len(times))
    samples = [
        HeartSample(t, round(_hr_baseline(t, cfg) + surge_at(t) + float(noise[i]), 2))
        for i, t in enumerate(times)
    ]

    artifact_times = []
    if cfg.profile == "noisy":
        idx = sorted(rng.choice(len(samples), size=2, replace=False).tolist())
        for i in idx:
            samples[i] = HeartSample(samples[i].ts_ms, 300.0)
            artifact_times.append(samples[i].ts_ms)

    evaluator_noise = rng.normal(0.0, cfg.noise_sd, size=len(times))
    evaluator = [
        HeartSample(t, round(72.0 + float(evaluator_noise[i]), 2))
        for i, t in enumerate(times)
    ]
    truth = {
        "surge_times_ms": surges,
        "surge_amp_bpm": cfg.hr_surge_amp,
        "artifact_times_ms": artifact_times,
        "phase_mean_bpm": {"opening": 70.0, "conclusion": 85.0},
    }
    return samples, evaluator, truth


# --- head pose / attention ----------------------------------------------------

def gen_headpose(seed, cfg: SynthConfig):
    rng = _rng(seed, _RNG_ATTENTION)
    step = cfg.headpose_sample_ms
    n = cfg.talk_ms // step
    target_aud = int(round(cfg.attention_audience_share * n))

    frame_is_audience = np.zeros(n, dtype=bool)
    pos = 0
    audience = True
    while pos < n:
        dur_ms = rng.uniform(12_000, 28_000) if audience else rng.uniform(8_000, 18_000)
        count = max(1, int(dur_ms // step))
        frame_is_audience[pos:pos + count] = audience
        pos += count
        audience = not audience

    have = int(frame_is_audience.sum())
    if have > target_aud:
        flip = np.where(frame_is_audience)[0][-(have - target_aud):]
        frame_is_audience[flip] = False
    elif have < target_aud:
        flip = np.where(~frame_is_audience)[0][-(target_aud - have):]
        frame_is_audience[flip] = True

    frames = []
    for i in range(n):
        if frame_is_audience[i]:
            yaw = rng.uniform(-12, 12)
            pitch = rng.uniform(-5, 18)
        else:
            yaw = rng.uniform(32, 80)
            pitch = rng.uniform(-20, 20)
        roll = rng.uniform(-8, 8)
        frames.append(HeadPoseFrame(
            i * step,
            euler=(round(pitch, 3), round(yaw, 3), round(roll, 3)),
        ))
    share = target_aud / n
    truth = {"shares": {"audience": share, "slides": 1.0 - share}, "frame_count": n}
    return frames, truth


# --- landmarks / posture ------------------------------------------------------

_BASE_SKELETON = {
    "nose": (0.50, 0.22), "eye_l": (0.48, 0.20), "eye_r": (0.52, 0.20),
    "ear_l": (0.47, 0.21), "ear_r": (0.53, 0.21),
    "shoulder_l": (0.42, 0.35), "shoulder_r": (0.58, 0.35),
    "elbow_l": (0.38, 0.45), "elbow_r": (0.62, 0.45),
    "wrist_l": (0.37, 0.52), "wrist_r": (0.63, 0.52),
    "hip_l": (0.45, 0.55), "hip_r": (0.55, 0.55),
    "knee_l": (0.44, 0.75), "knee_r": (0.56, 0.75),
    "ankle_l": (0.44, 0.95), "ankle_r": (0.56, 0.95),
}
# torso length: mid-shoulder (0.5, 0.35) to mid-hip (0.5, 0.55) = 0.2


def gen_landmarks(seed, cfg: SynthConfig):
    rng = _rng(seed, _RNG_LANDMARKS)
    t = cfg.talk_ms
    pacing = [
        (round(0.20 * t), round(0.225 * t)),
        (round(0.50 * t), round(0.53 * t)),
    ]
    crossed = (round(t / 3), round(t / 3) + 10_000)
    hunched = (round(2 * t / 3), round(2 * t / 3) + 8_000)
    torso = 0.2

    step = cfg.landmark_sample_ms
    frames = []
    for ts in range(0, t, step):
        dx = 0.0
        for s, e in pacing:
            if s <= ts < e:
                dx = 0.5 * torso * math.sin(2 * math.pi * 0.5 * (ts - s) / 1000.0)
        joints = {}
        for name, (bx, by) in _BASE_SKELETON.items():
            x, y = bx + dx, by
            if crossed[0] <= ts < crossed[1]:
                if name == "wrist_l":
                    x, y = 0.56 + dx, 0.45
                elif name == "wrist_r":
                    x, y = 0.44 + dx, 0.45
            if hunched[0] <= ts < hunched[1] and name in ("nose", "eye_l", "eye_r", "ear_l", "ear_r"):
                y = by + 0.10
            x += float(rng.uniform(-0.002, 0.002))
            y += float(rng.uniform(-0.002, 0.002))
            joints[name] = (round(x, 4), round(y, 4), 0.9)
        frames.append(LandmarkFrame(ts, joints))
    truth = {
        "pacing_intervals_ms": [list(iv) for iv in pacing],
        "crossed_interval_ms": list(crossed),
        "hunched_interval_ms": list(hunched),
        "torso_length": torso,
    }
    return frames, truth


# --- gaze ---------------------------------------------------------------------

GAZE_AOIS = (
    {"name": "presenter_face", "rect": [0.35, 0.15, 0.65, 0.50]},
    {"name": "slides", "rect": [0.70, 0.05, 0.98, 0.60]},
)


def gen_gaze(seed, cfg: SynthConfig):
    rng = _rng(seed, _RNG_GAZE)
    step = cfg.gaze_sample_ms
    samples = []
    clusters = []  # (aoi, start, dwell)
    face_ms = 0
    slides_ms = 0
    t = 0
    prev_center = None

    def draw_center(aoi):
        for _ in range(100):
            if aoi == "presenter_face":
                c = (float(rng.uniform(0.40, 0.60)), float(rng.uniform(0.20, 0.45)))
            else:
                c = (float(rng.uniform(0.75, 0.93)), float(rng.uniform(0.10, 0.55)))
            if prev_center is None:
                return c
            if abs(c[0] - prev_center[0]) + abs(c[1] - prev_center[1]) >= 0.08:
                return c
        return c

    blink_after = None  # chosen once cluster count is known; see below
    planned = []
    while True:
        total = face_ms + slides_ms
        share = face_ms / total if total else 0.0
        aoi = "presenter_face" if share < cfg.gaze_face_share else "slides"
        dwell = (rng.uniform(800, 1600) if aoi == "presenter_face"
                 else rng.uniform(700, 1400))
        dwell = int(round(dwell / step)) * step
        if t + dwell > cfg.talk_ms:
            break
        center = draw_center(aoi)
        planned.append((aoi, t, dwell, center))
        prev_center = center
        if aoi == "presenter_face":
            face_ms += dwell
        else:
            slides_ms += dwell
        t += dwell

    interior = max(0, len(planned) - 1)
    blink_count = min(cfg.gaze_blink_count, interior)
    blink_after = set(
        rng.choice(interior, size=blink_count, replace=False).tolist()
    ) if blink_count else set()

    shift = 0
    for ci, (aoi, start, dwell, center) in enumerate(planned):
        start += shift
        for ts in range(start, start + dwell, step):
            x = center[0] + float(rng.uniform(-0.004, 0.004))
            y = center[1] + float(rng.uniform(-0.004, 0.004))
            samples.append(GazeSample(ts, round(x, 4), round(y, 4), True))
        clusters.append((aoi, start, dwell))
        if ci in blink_after:
            run_ms = int(round(rng.uniform(120, 260) / step)) * step
            for ts in range(start + dwell, start + dwell + run_ms, step):
                samples.append(GazeSample(ts, None, None, False))
            shift += run_ms

    truth = {
        "fixation_count": len(clusters),
        "blink_count": blink_count,
        "aoi_shares": {
            "presenter_face": face_ms / (face_ms + slides_ms),
            "slides": slides_ms / (face_ms + slides_ms),
        },
        "aoi_config": [dict(a) for a in GAZE_AOIS],
    }
    return samples, truth


# --- audio + transcript ---------------------------------------------------------

_VOCAB = (
    "cache", "cluster", "latency", "protocol", "replica", "throughput",
    "gradient", "pipeline", "index", "bandwidth", "consensus", "payload",
    "schema", "shard", "fallback", "quorum", "workload", "buffer",
    "timeout", "handshake",
)

_FILLER_WORDS = {"um", "uh", "like", "you", "know", "the", "eh", "este", "o", "sea", "vale"}


def gen_speech(seed, cfg: SynthConfig):
    """Sentence plan (pitch + silences), WAV samples, and aligned transcript."""
    rng = _rng(seed, _RNG_SPEECH)
    pitch_cycle = (180.0, 220.0, 260.0, 200.0)

    sentences = []  # (start, end, f0)
    silences = []   # (start, end, long?)
    t = 0
    si = 0
    while True:
        dur = int(rng.uniform(2_500, 5_000))
        if t + dur > cfg.talk_ms - 1_000:
            break
        f0 = pitch_cycle[si % len(pitch_cycle)] + float(rng.uniform(-5, 5))
        sentences.append((t, t + dur, round(f0, 1)))
        t += dur
        long_pause = (si % 5 == 4)
        sil = int(rng.uniform(2_200, 3_000)) if long_pause else int(rng.uniform(420, 900))
        if t + sil > cfg.talk_ms:
            break
        silences.append((t, t + sil, long_pause))
        t += sil
        si += 1

    # transcript words fill each sentence; the last word is stretched to the
    # sentence end so inter-sentence gaps equal the scripted silences exactly
    base_words = []
    for s, e, _ in sentences:
        w = s
        sentence_words = []
        while True:
            dur = int(rng.uniform(240, 340))
            gap = int(rng.uniform(40, 90))
            if w + dur > e:
                break
            sentence_words.append([w, w + dur])
            w += dur + gap
        if not sentence_words:
            sentence_words.append([s, e])
        sentence_words[-1][1] = e
        base_words.extend(sentence_words)

    tokens = [_VOCAB[i % len(_VOCAB)] for i in range(len(base_words))]

    insert_groups = []
    for entry, count in cfg.filler_plan:
        insert_groups.extend([entry.split()] * count)
    insert_groups.extend([["the", "the"]] * cfg.false_start_count)

    n_base = len(tokens)
    positions = []
    tries = 0
    while len(positions) < len(insert_groups) and tries < 10_000:
        tries += 1
        p = int(rng.integers(1, max(2, n_base - 1)))
        if all(abs(p - q) >= 4 for q in positions):
            positions.append(p)
    order = sorted(range(len(positions)), key=lambda i: -positions[i])

    timed = [(tok, s, e) for tok, (s, e) in zip(tokens, base_words)]
    for gi in order:
        p = positions[gi]
        group = insert_groups[gi]
        anchor_start = timed[p][1]
        word_ms = 160
        inserted = []
        for k, g in enumerate(group):
            s = anchor_start + k * word_ms
            inserted.append((g, s, s + word_ms - 40))
        shift = len(group) * word_ms
        tail = [(tok, s + shift, e + shift) for tok, s, e in timed[p:]]
        timed = timed[:p] + inserted + tail

    words = [TranscriptWord(tok, s, e) for tok, s, e in timed]
    for a, b in zip(words, words[1:]):
        assert a.word != b.word or a.word == "the", "unexpected duplicate token"

    filler_counts = {entry: count for entry, count in cfg.filler_plan}
    truth = {
        "filler_counts": filler_counts,
        "false_starts": cfg.false_start_count,
        "long_pauses": sum(1 for _, _, is_long in silences if is_long),
        "word_count": len(words),
        "pitch_plan": [[s, e, f0] for s, e, f0 in sentences],
        "silences": [[s, e] for s, e, _ in silences],
    }
    return sentences, words, truth


def render_wav(sentences, cfg: SynthConfig) -> bytes:
    fs = cfg.audio_rate
    total = int(cfg.talk_ms * fs / 1000)
    signal = np.zeros(total, dtype=np.float64)
    fade = int(0.015 * fs)
    for s, e, f0 in sentences:
        i0 = int(s * fs / 1000)
        i1 = min(total, int(e * fs / 1000))
        n = i1 - i0
        if n <= 0:
            continue
        tt = np.arange(n) / fs
        seg = 0.25 * np.sin(2 * np.pi * f0 * tt)
        k = min(fade, n // 2)
        if k > 0:
            env = np.ones(n)
            ramp = 0.5 * (1 - np.cos(np.pi * np.arange(k) / k))
            env[:k] = ramp
            env[-k:] = ramp[::-1]
            seg *= env
        signal[i0:i1] = seg
    pcm = np.clip(signal * 32767, -32768, 32767).astype("<i2")
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(fs)
        wf.writeframes(pcm.tobytes())
    return buf.getvalue()


# --- events ---------------------------------------------------------------------

def gen_events(seed, cfg: SynthConfig, presenter_id, rubric):
    rng = _rng(seed, _RNG_EVENTS)
    events = []
    truth = {"slide_advance_times_ms": [], "focus_ms": {}, "premature": None}

    # presenter slide events: nine advances, one back + re-advance
    n_slides = 10
    base_gap = cfg.talk_ms / n_slides
    advance_times = []
    for i in range(1, n_slides):
        jitter = float(rng.uniform(-0.12, 0.12)) * base_gap
        advance_times.append(int(i * base_gap + jitter))
    advance_times.sort()
    for ts in advance_times:
        events.append(InteractionEvent(ts, presenter_id, "slide_advance"))
    back_ts = int((advance_times[6] + advance_times[7]) / 2)
    events.append(InteractionEvent(back_ts, presenter_id, "slide_back"))
    events.append(InteractionEvent(back_ts + 5_000, presenter_id, "slide_advance"))
    truth["slide_advance_times_ms"] = advance_times

    item_ids = rubric.item_ids()
    premature_actor = "peer1"
    premature_item = "conclusions"

    starts = {}
    for actor, _role in EVALUATORS:
        focus_truth = {}
        t0 = int(rng.uniform(30_000, 60_000))
        t0 = min(t0, max(2_000, cfg.span_ms // 15))  # keep tiny sessions sane
        starts[actor] = t0
        window = max(8_000.0, (cfg.span_ms - t0 - 60_000) / len(item_ids))
        dwell_lo, dwell_hi = (15_000, 25_000) if actor == "peer2" else (40_000, 60_000)
        for k, item in enumerate(item_ids):
            start = int(t0 + k * window + rng.uniform(0, 5_000))
            dwell = int(rng.uniform(dwell_lo, dwell_hi))
            dwell = max(5_000, min(dwell, int(window) - 6_000))
            events.append(InteractionEvent(start, actor, "item_focus", item))
            n_keys = int(rng.integers(3, 9))
            for j in range(n_keys):
                events.append(InteractionEvent(
                    start + 1_000 + j * 700, actor, "keypress", item, "letter"
                ))
            rate_ts = start + int(dwell * float(rng.uniform(0.5, 0.9)))
            score = int(rng.integers(2, 6))
            events.append(InteractionEvent(rate_ts, actor, "item_rated", item, score))
            events.append(InteractionEvent(start + dwell, actor, "item_blur", item))
            focus_truth[item] = dwell
        truth["focus_ms"][actor] = focus_truth

    # the scripted premature rating: an early extra visit to a conclusion-phase
    # item, placed before the evaluator's regular sequence so focus windows
    # never overlap and long before the mapped phase starts
    premature_ts = max(6_000, starts[premature_actor] - 12_000)
    events.append(InteractionEvent(premature_ts - 4_000, premature_actor, "item_focus", premature_item))
    events.append(InteractionEvent(premature_ts, premature_actor, "item_rated", premature_item, 3))
    events.append(InteractionEvent(premature_ts + 1_000, premature_actor, "item_blur", premature_item))
    truth["focus_ms"][premature_actor][premature_item] += 5_000
    truth["premature"] = {
        "actor_id": premature_actor,
        "item_id": premature_item,
        "ts_ms": premature_ts,
    }

    events.sort(key=lambda e: (e.ts_ms, e.actor_id, e.kind))
    return events, truth


# --- evaluations ------------------------------------------------------------------

_COMMENT_BANK = (
    "Confident delivery overall, with clear diagrams.",
    "Needs steadier eye contact during technical sections.",
    "Opening was crisp and set expectations well.",
    "Slides carried too much text in the middle section.",
    "Good recovery after the question on scaling.",
    "Spoke too fast when covering the benchmark results.",
    "Strong close that tied back to the motivation.",
    "ok", "fine", "solid",
)

_FIXED_SCORES = {
    "clarity_opening": {"prof1": 5, "peer1": 4, "peer2": 5},
    "eye_contact": {"prof1": 2, "peer1": 3, "peer2": 2},
}


def gen_evaluations(seed, presenter_id, rubric):
    rng = _rng(seed, _RNG_EVALS)
    evaluations = []
    matrix = {}
    for actor, role in EVALUATORS + ((presenter_id, "self"),):
        scores = {}
        comments = {}
        for item in rubric.item_ids():
            fixed = _FIXED_SCORES.get(item, {}).get(actor)
            if fixed is not None:
                score = fixed
            elif role == "self" and item == "eye_contact":
                score = 4  # scripted self-vs-external divergence
            else:
                score = int(rng.integers(2, 6))
            scores[item] = score
            comments[item] = _COMMENT_BANK[int(rng.integers(0, len(_COMMENT_BANK)))]
        evaluations.append(Evaluation(actor, role, scores, comments, version=1))
        matrix[actor] = {"role": role, "scores": scores}

    external_means = {}
    for item in rubric.item_ids():
        ext = [m["scores"][item] for m in matrix.values() if m["role"] != "self"]
        external_means[item] = sum(ext) / len(ext)
    truth = {"matrix": matrix, "external_means": external_means}
    return evaluations, truth


# --- annotations ------------------------------------------------------------------

ANNOTATION_LABELS = (
    "nervous_movement", "reading_notes", "eye_contact", "audience_question",
    "feedback_rating",
)


def gen_annotations(seed, cfg: SynthConfig):
    rng = _rng(seed, _RNG_ANNOTATIONS)
    anns = []
    counter = [0]

    def add(label, kind, ts):
        counter[0] += 1
        anns.append(Annotation(f"ann-{counter[0]:04d}", label, kind, int(ts), "observer_console"))

    add("phase:opening", "start", 0)
    add("phase:opening", "end", cfg.opening_end_ms)
    add("phase:body", "start", cfg.opening_end_ms)
    add("phase:body", "end", cfg.conclusion_start_ms)
    add("phase:conclusion", "start", cfg.conclusion_start_ms)
    add("phase:conclusion", "end", cfg.talk_ms)
    if cfg.qa_ms > 0:
        add("phase:qa", "start", cfg.talk_ms)
        add("phase:qa", "end", cfg.span_ms)

    instants = []
    for label, count, lo, hi in (
        ("nervous_movement", 2, cfg.opening_end_ms, cfg.conclusion_start_ms),
        ("eye_contact", 3, 0, cfg.talk_ms),
        ("reading_notes", 1, cfg.opening_end_ms, cfg.talk_ms),
        ("audience_question", 2, cfg.talk_ms, cfg.span_ms - 10_000),
    ):
        if hi <= lo:
            continue  # window absent (e.g. no Q&A period)
        for _ in range(count):
            ts = int(rng.uniform(lo, hi))
            instants.append((ts, label))
    for ts, label in sorted(instants):
        add(label, "instant", ts)

    anns.sort(key=lambda a: (a.ts_ms, a.id))
    truth = {"count": len(anns), "instants": [[ts, label] for ts, label in sorted(instants)]}
    return anns, truth


# --- deck -------------------------------------------------------------------------

def _body(words, pt=None):
    return [(" ".join(words), pt)]


def default_deck_specs():
    def lorem(n, start=0):
        return [_VOCAB[(start + i) % len(_VOCAB)] for i in range(n)]

    return [
        SlideSpec(title="Distributed Cache Invalidation Strategies",
                  body_runs=_body(["Final", "year", "presentation"], 24.0)),
        SlideSpec(title="Agenda", body_runs=_body(lorem(12)), image_count=2, slide_number=True),
        SlideSpec(title="Problem", body_runs=_body(lorem(20, 3)), slide_number=True),
        SlideSpec(title="Background", body_runs=_body(lorem(54, 5)), slide_number=True),
        SlideSpec(title="Architecture", body_runs=_body(lorem(15, 7)), image_count=1,
                  slide_number=True),
        SlideSpec(title="Benchmark Setup", body_runs=_body(lorem(18, 9), 12.0),
                  slide_number=True),
        SlideSpec(title="Results", body_runs=_body(lorem(22, 11)), slide_number=True),
        SlideSpec(title="Discussion", body_runs=_body(lorem(19, 13)), slide_number=True),
        SlideSpec(title=None, body_runs=_body(lorem(9, 15)), slide_number=True),
        SlideSpec(title="Conclusions", body_runs=_body(lorem(11, 17)), slide_number=True),
    ]


def gen_deck():
    specs = default_deck_specs()
    deck = build_deck(specs)
    truth = {
        "slide_count": len(specs),
        "word_counts": [len(s.words()) for s in specs],
        "image_counts": [s.image_count for s in specs],
        "small_font_slides": [6],
        "text_dense_slides": [4],
        "missing_title_slides": [9],
    }
    return deck, truth


# --- bundle assembly ---------------------------------------------------------------

def generate_session(seed, out_dir, cfg: SynthConfig | None = None):
    """Write a full bundle under out_dir and return the ground-truth manifest."""
    cfg = cfg or SynthConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    parts = set(cfg.parts)

    rng_off = _rng(seed, _RNG_OFFSETS)
    session_id = f"synth-{int(seed):04d}"
    presenter = f"presenter-{int(seed):04d}"

    manifest = {
        "seed": int(seed),
        "profile": cfg.profile,
        "session_id": session_id,
        "presenter_id": presenter,
        "talk_ms": cfg.talk_ms,
        "qa_ms": cfg.qa_ms,
        "clock_offsets": {},
        "stream_counts": {},
    }

    streams = {}
    sync_map = {}

    def offset_for(stream_id):
        off = int(rng_off.integers(-2_000, 2_001))
        sync_map[stream_id] = off
        manifest["clock_offsets"][stream_id] = off
        return off

    def write_stream(stream_id, kind, rel_path, samples, actor, shift_fn):
        off = offset_for(stream_id)
        raw = [shift_fn(s, -off) for s in samples]
        path = out / rel_path
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(ingest.serialize_stream(kind, raw))
        streams[stream_id] = {"kind": kind, "path": rel_path, "actor": actor}
        manifest["stream_counts"][stream_id] = len(samples)

    def shift_ts(s, delta):
        return replace(s, ts_ms=s.ts_ms + delta)

    def shift_word(s, delta):
        return replace(s, start_ms=s.start_ms + delta, end_ms=s.end_ms + delta)

    rubric = default_rubric()
    (out / "rubric.json").write_bytes(ingest.serialize_rubric(rubric))

    if "heart" in parts:
        presenter_hr, evaluator_hr, truth = gen_heart(seed, cfg)
        write_stream("heart_presenter", ingest.HEART_CSV,
                     "streams/heart_presenter.csv", presenter_hr, presenter, shift_ts)
        write_stream("heart_evaluator_prof1", ingest.HEART_CSV,
                     "streams/heart_evaluator_prof1.csv", evaluator_hr, "prof1", shift_ts)
        manifest["heart"] = truth

    if "headpose" in parts:
        frames, truth = gen_headpose(seed, cfg)
        write_stream("headpose_presenter", ingest.HEADPOSE_JSONL,
                     "streams/headpose_presenter.jsonl", frames, presenter, shift_ts)
        manifest["attention"] = truth

    if "landmarks" in parts:
        frames, truth = gen_landmarks(seed, cfg)
        write_stream("landmarks_presenter", ingest.LANDMARKS_JSONL,
                     "streams/landmarks_presenter.jsonl", frames, presenter, shift_ts)
        manifest["posture"] = truth

    aoi_config = []
    if "gaze" in parts:
        samples, truth = gen_gaze(seed, cfg)
        write_stream("gaze_observer", ingest.GAZE_JSONL,
                     "streams/gaze_observer.jsonl", samples, "obs1", shift_ts)
        manifest["gaze"] = truth
        aoi_config = truth["aoi_config"]

    sentences = None
    if "audio" in parts or "transcript" in parts:
        sentences, words, truth = gen_speech(seed, cfg)
        manifest["speech"] = truth
        if "transcript" in parts:
            off = offset_for("transcript")
            raw = [shift_word(w, -off) for w in words]
            (out / "transcript.jsonl").write_bytes(
                ingest.serialize_stream(ingest.TRANSCRIPT_JSONL, raw)
            )
            manifest["stream_counts"]["transcript"] = len(words)
        if "audio" in parts:
            sync_map["audio"] = 0
            manifest["clock_offsets"]["audio"] = 0
            audio_dir = out / "audio"
            audio_dir.mkdir(exist_ok=True)
            (audio_dir / "presentation.wav").write_bytes(render_wav(sentences, cfg))

    if "events" in parts:
        events, truth = gen_events(seed, cfg, presenter, rubric)
        sync_map["events"] = 0
        manifest["clock_offsets"]["events"] = 0
        events_dir = out / "events"
        events_dir.mkdir(exist_ok=True)
        (events_dir / "interactions.jsonl").write_bytes(
            ingest.serialize_stream(ingest.EVENTS_JSONL, events)
        )
        manifest["stream_counts"]["events"] = len(events)
        manifest["events"] = truth

    if "annotations" in parts:
        anns, truth = gen_annotations(seed, cfg)
        sync_map["annotations"] = 0
        manifest["clock_offsets"]["annotations"] = 0
        (out / "annotations.jsonl").write_bytes(
            ingest.serialize_stream(ingest.ANNOTATIONS_JSONL, anns)
        )
        manifest["stream_counts"]["annotations"] = len(anns)
        manifest["annotations"] = truth

    if "evaluations" in parts:
        evaluations, truth = gen_evaluations(seed, presenter, rubric)
        eval_dir = out / "evaluations"
        eval_dir.mkdir(exist_ok=True)
        for ev in evaluations:
            (eval_dir / f"{ev.evaluator_id}.json").write_bytes(
                ingest.serialize_evaluation(ev)
            )
        manifest["evaluations"] = truth

    if "deck" in parts:
        deck, truth = gen_deck()
        deck_dir = out / "slides"
        deck_dir.mkdir(exist_ok=True)
        (deck_dir / "deck.pptx").write_bytes(deck)
        manifest["deck"] = truth

    descriptor = {
        "id": session_id,
        "presenter_id": presenter,
        "evaluators": (
            [{"id": a, "role": r} for a, r in EVALUATORS]
            + [{"id": presenter, "role": "self"}]
        ),
        "observers": ["obs1"],
        "planned_duration_ms": cfg.talk_ms,
        "qa_duration_ms": cfg.qa_ms,
        "sync_map": {k: sync_map[k] for k in sorted(sync_map)},
        "streams": {k: streams[k] for k in sorted(streams)},
        "aoi_config": aoi_config,
        "annotation_labels": list(ANNOTATION_LABELS),
        "thresholds": {},
    }
    (out / "session.json").write_text(
        json.dumps(descriptor, indent=2, sort_keys=False) + "\n", "utf-8"
    )
    (out / "ground_truth.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", "utf-8"
    )
    return manifest
