"""Eye-tracking analysis: dispersion-threshold fixation detection, blink and
data-loss segmentation, and AOI attention mapping.

Scene coordinates are normalized [0,1]^2 and assumed quasi-static (seated
observer); head-motion compensation is out of scope and reported as a
limitation in the analysis metadata.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Fixation:
    start_ms: int
    end_ms: int
    centroid: tuple  # (x, y)
    dispersion: float
    sample_count: int

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms


@dataclass(frozen=True)
class Saccade:
    start_ms: int
    end_ms: int
    amplitude: float  # centroid distance between bounding fixations


@dataclass(frozen=True)
class Blink:
    start_ms: int
    end_ms: int


@dataclass
class FixationConfig:
    dispersion_threshold: float = 0.03  # (max x - min x) + (max y - min y)
    min_fixation_ms: int = 100


@dataclass
class BlinkConfig:
    min_ms: int = 70
    max_ms: int = 500


@dataclass(frozen=True)
class AoiRect:
    name: str
    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, x, y) -> bool:
        # closed boundaries: a centroid on the edge belongs to the rectangle
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1


def aoi_from_config(entries):
    """[{name, rect: [x0, y0, x1, y1]}, ...] -> ordered AoiRect list."""
    return [AoiRect(e["name"], *e["rect"]) for e in entries]


def detect_fixations(samples, cfg=None):
    """I-DT fixation identification.

    Grows a window while (max x - min x) + (max y - min y) stays within the
    dispersion threshold; emits a fixation when the window lasts at least the
    minimum duration. Invalid samples split windows. Saccades are the
    transitions between consecutive fixations.
    """
    cfg = cfg or FixationConfig()
    fixations = []

    # split into maximal valid runs; a fixation never spans invalid samples
    run = []
    runs = []
    for s in samples:
        if s.valid:
            run.append(s)
        elif run:
            runs.append(run)
            run = []
    if run:
        runs.append(run)

    for run in runs:
        i = 0
        n = len(run)
        while i < n:
            j = i
            min_x = max_x = run[i].x
            min_y = max_y = run[i].y
            while j + 1 < n:
                nx, ny = run[j + 1].x, run[j + 1].y
                n_min_x, n_max_x = min(min_x, nx), max(max_x, nx)
                n_min_y, n_max_y = min(min_y, ny), max(max_y, ny)
                if (n_max_x - n_min_x) + (n_max_y - n_min_y) > cfg.dispersion_threshold:
                    break
                min_x, max_x, min_y, max_y = n_min_x, n_max_x, n_min_y, n_max_y
                j += 1
            window = run[i:j + 1]
            if window[-1].ts_ms - window[0].ts_ms >= cfg.min_fixation_ms:
                cx = sum(s.x for s in window) / len(window)
                cy = sum(s.y for s in window) / len(window)
                fixations.append(Fixation(
                    start_ms=window[0].ts_ms,
                    end_ms=window[-1].ts_ms,
                    centroid=(cx, cy),
                    dispersion=(max_x - min_x) + (max_y - min_y),
                    sample_count=len(window),
                ))
                i = j + 1
            else:
                i += 1

    saccades = []
    for a, b in zip(fixations, fixations[1:]):
        amp = math.hypot(b.centroid[0] - a.centroid[0], b.centroid[1] - a.centroid[1])
        saccades.append(Saccade(a.end_ms, b.start_ms, amp))
    return fixations, saccades


def detect_blinks(samples, cfg=None):
    """Classify maximal invalid runs as blinks or data-loss segments.

    The gap is measured over the untracked interval (last valid sample before
    the run to first valid sample after); runs at the stream edge fall back
    to the invalid samples' own span. Returns (blinks, losses, rate_per_min)
    where the rate is computed over valid tracking time (stream span minus
    data-loss time).
    """
    cfg = cfg or BlinkConfig()
    blinks = []
    losses = []
    if not samples:
        return blinks, losses, 0.0

    n = len(samples)
    i = 0
    while i < n:
        if samples[i].valid:
            i += 1
            continue
        j = i
        while j + 1 < n and not samples[j + 1].valid:
            j += 1
        start = samples[i - 1].ts_ms if i > 0 else samples[i].ts_ms
        end = samples[j + 1].ts_ms if j + 1 < n else samples[j].ts_ms
        gap = end - start
        if cfg.min_ms <= gap <= cfg.max_ms:
            blinks.append(Blink(start, end))
        elif gap > cfg.max_ms:
            losses.append((start, end))
        i = j + 1

    span_ms = samples[-1].ts_ms - samples[0].ts_ms
    tracked_ms = span_ms - sum(e - s for s, e in losses)
    rate = len(blinks) / (tracked_ms / 60_000.0) if tracked_ms > 0 else 0.0
    return blinks, losses, rate


def map_aoi(fixations, aois, schedule=None):
    """Assign each fixation to the first containing AOI rectangle (closed
    boundaries) or "other"; shares are fixation time per AOI over total
    fixation time. Returns a dict with shares, per-phase shares, and the
    chronological AOI switch timeline."""
    def assign(fix):
        for rect in aois:
            if rect.contains(*fix.centroid):
                return rect.name
        return "other"

    labels = [assign(f) for f in fixations]

    def shares_of(pairs):
        acc = {}
        total = 0
        for fix, label in pairs:
            d = fix.duration_ms
            acc[label] = acc.get(label, 0) + d
            total += d
        if total == 0:
            return {}
        return {k: acc[k] / total for k in sorted(acc)}

    shares = shares_of(zip(fixations, labels))

    per_phase = {}
    if schedule is not None:
        for phase in schedule:
            acc = {}
            total = 0
            for fix, label in zip(fixations, labels):
                overlap = min(fix.end_ms, phase.end_ms) - max(fix.start_ms, phase.start_ms)
                if overlap > 0:
                    acc[label] = acc.get(label, 0) + overlap
                    total += overlap
            per_phase[phase.name] = (
                {k: acc[k] / total for k in sorted(acc)} if total else {}
            )

    switches = []
    prev = None
    for fix, label in zip(fixations, labels):
        if label != prev:
            switches.append((fix.start_ms, label))
            prev = label

    return {
        "shares": shares,
        "per_phase": per_phase,
        "switches": switches,
        "labels": labels,
        "total_fixation_ms": sum(f.duration_ms for f in fixations),
    }
