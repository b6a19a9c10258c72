"""Head-pose attention classification and body-posture analysis.

Angles follow an intrinsic yaw (vertical axis) -> pitch (lateral axis) ->
roll (frontal axis) rotation order: pitch positive looks up, yaw positive
turns toward the presenter's left, roll positive tilts clockwise from the
viewer. Landmarks are image coordinates with y increasing downward.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyStream, InsufficientLandmarks, NotARotation
from .model import JOINT_NAMES, LANDMARK_CONFIDENCE_MIN

ORTHONORMAL_TOL = 1e-6
GIMBAL_LOCK_DEG = 1e-6  # |pitch| within this of 90 deg collapses roll into yaw


@dataclass(frozen=True)
class HeadPose:
    pitch: float
    yaw: float
    roll: float


def rotation_from_euler(pitch, yaw, roll):
    """Compose the rotation matrix R = Ry(yaw) @ Rx(pitch) @ Rz(roll)."""
    b, a, g = map(math.radians, (pitch, yaw, roll))
    ca, sa = math.cos(a), math.sin(a)
    cb, sb = math.cos(b), math.sin(b)
    cg, sg = math.cos(g), math.sin(g)
    return np.array([
        [ca * cg + sa * sb * sg, -ca * sg + sa * sb * cg, sa * cb],
        [cb * sg, cb * cg, -sb],
        [-sa * cg + ca * sb * sg, sa * sg + ca * sb * cg, ca * cb],
    ])


def euler_from_rotation(R):
    """Recover (pitch, yaw, roll) degrees from a rotation matrix.

    At gimbal lock (|pitch| = 90 deg within tolerance) roll is set to 0 and
    yaw absorbs the remaining rotation, so recomposition still reproduces R.
    """
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise NotARotation(f"expected 3x3 matrix, got shape {R.shape}")
    if not np.allclose(R @ R.T, np.eye(3), atol=ORTHONORMAL_TOL):
        raise NotARotation("matrix is not orthonormal within 1e-6")
    if abs(np.linalg.det(R) - 1.0) > ORTHONORMAL_TOL:
        raise NotARotation("matrix determinant is not +1 within 1e-6")

    # |cos(pitch)| read from the middle row keeps the lock test and the
    # pitch angle well-conditioned where asin(-R[1][2]) loses precision
    cos_pitch = math.hypot(R[1][0], R[1][1])
    pitch = math.degrees(math.atan2(-R[1][2], cos_pitch))
    if cos_pitch <= math.radians(GIMBAL_LOCK_DEG):
        # yaw and roll axes coincide; only their combination is observable
        pitch = 90.0 if pitch > 0 else -90.0
        if pitch > 0:
            yaw = math.degrees(math.atan2(R[0][1], R[0][0]))
        else:
            yaw = math.degrees(math.atan2(-R[0][1], R[0][0]))
        return HeadPose(pitch, yaw, 0.0)
    yaw = math.degrees(math.atan2(R[0][2], R[2][2]))
    roll = math.degrees(math.atan2(R[1][0], R[1][1]))
    return HeadPose(pitch, yaw, roll)


def pose_of_frame(frame):
    """HeadPose for an ingested HeadPoseFrame, or None when absent."""
    if frame.euler is not None:
        p, y, r = frame.euler
        return HeadPose(float(p), float(y), float(r))
    if frame.matrix is not None:
        return euler_from_rotation(frame.matrix)
    return None


# --- attention cones ------------------------------------------------------

@dataclass(frozen=True)
class Cone:
    target: str
    yaw: tuple | None = None    # closed (lo, hi) degrees, None = any
    pitch: tuple | None = None

    def matches(self, pose) -> bool:
        if self.yaw is not None and not (self.yaw[0] <= pose.yaw <= self.yaw[1]):
            return False
        if self.pitch is not None and not (self.pitch[0] <= pose.pitch <= self.pitch[1]):
            return False
        return True


# Default presenter map; slides sit on the presenter's left (positive yaw).
# First matching entry wins; the final entry always matches.
PRESENTER_CONES = (
    Cone("audience", yaw=(-20.0, 20.0), pitch=(-15.0, 25.0)),
    Cone("slides", yaw=(25.0, 90.0), pitch=(-30.0, 30.0)),
    Cone("notes", yaw=(-25.0, 25.0), pitch=(-60.0, -20.0)),
    Cone("floor", pitch=(-90.0, -60.0)),
    Cone("other"),
)

EVALUATOR_CONES = (
    Cone("presenter", yaw=(-20.0, 20.0), pitch=(-15.0, 25.0)),
    Cone("screen", yaw=(-35.0, 35.0), pitch=(-70.0, -15.0)),
    Cone("distracted"),
)


def cone_map_from_config(entries):
    """Build a cone map from session.json entries; appends a catch-all."""
    cones = []
    for e in entries:
        cones.append(Cone(
            e["target"],
            tuple(e["yaw"]) if e.get("yaw") is not None else None,
            tuple(e["pitch"]) if e.get("pitch") is not None else None,
        ))
    if not cones or cones[-1].yaw is not None or cones[-1].pitch is not None:
        cones.append(Cone("other"))
    return tuple(cones)


def classify_attention(pose, cone_map=PRESENTER_CONES):
    for cone in cone_map:
        if cone.matches(pose):
            return cone.target
    return cone_map[-1].target


@dataclass
class AttentionSummary:
    shares: dict                     # target -> fraction of classified time
    eye_contact_ratio: float
    per_phase: dict                  # phase name -> shares dict
    longest_off_target: list         # (start_ms, end_ms, dominant target)
    classified_ms: int
    frame_count: int
    unclassified_count: int
    primary_target: str


def attention_summary(frames, cone_map=PRESENTER_CONES, schedule=None,
                      primary_target=None, top_intervals=5):
    """Time-weighted attention shares with per-phase breakdown.

    Each frame is weighted by the gap to the next frame (the last frame gets
    the median gap), so irregular sampling does not skew shares.
    """
    if not frames:
        raise EmptyStream("attention summary needs at least one head-pose frame")
    primary = primary_target or cone_map[0].target

    ts = [f.ts_ms for f in frames]
    gaps = [b - a for a, b in zip(ts, ts[1:])] or [0]
    tail_gap = sorted(gaps)[len(gaps) // 2] if gaps else 0
    weights = gaps + [tail_gap]

    targets = []
    unclassified = 0
    for f in frames:
        pose = pose_of_frame(f)
        if pose is None:
            targets.append(None)
            unclassified += 1
        else:
            targets.append(classify_attention(pose, cone_map))

    def shares_over(indices):
        acc = {}
        total = 0
        for i in indices:
            if targets[i] is None:
                continue
            w = weights[i]
            acc[targets[i]] = acc.get(targets[i], 0) + w
            total += w
        if total == 0:
            return {}, 0
        return {t: acc[t] / total for t in sorted(acc)}, total

    shares, classified_ms = shares_over(range(len(frames)))

    per_phase = {}
    if schedule is not None:
        for phase in schedule:
            idx = [i for i, t in enumerate(ts) if phase.contains(t)]
            ph_shares, _ = shares_over(idx)
            per_phase[phase.name] = ph_shares

    # longest contiguous spans away from the primary target
    runs = []
    run_start = None
    run_targets = {}
    for i, tgt in enumerate(targets):
        off = tgt is not None and tgt != primary
        if off:
            if run_start is None:
                run_start = ts[i]
                run_targets = {}
            run_targets[tgt] = run_targets.get(tgt, 0) + weights[i]
            run_end = ts[i] + weights[i]
        elif run_start is not None:
            dominant = max(sorted(run_targets), key=lambda t: run_targets[t])
            runs.append((run_start, run_end, dominant))
            run_start = None
    if run_start is not None:
        dominant = max(sorted(run_targets), key=lambda t: run_targets[t])
        runs.append((run_start, run_end, dominant))
    runs.sort(key=lambda r: (-(r[1] - r[0]), r[0]))

    return AttentionSummary(
        shares=shares,
        eye_contact_ratio=shares.get(primary, 0.0),
        per_phase=per_phase,
        longest_off_target=runs[:top_intervals],
        classified_ms=int(classified_ms),
        frame_count=len(frames),
        unclassified_count=unclassified,
        primary_target=primary,
    )


# --- body posture ---------------------------------------------------------

@dataclass
class PostureConfig:
    crossed_margin_torso: float = 0.1
    hunch_gap_torso: float = 0.25
    sustain_ms: int = 2_000
    pacing_amplitude_torso: float = 0.3
    pacing_window_ms: int = 10_000
    pacing_min_alternations: int = 3
    interp_max_gap_ms: int = 500
    min_joint_confidence: float = LANDMARK_CONFIDENCE_MIN


@dataclass
class PostureReport:
    torso_length: float
    openness_series: list            # (second_index, open flag)
    crossed_arm_intervals: list      # (start_ms, end_ms)
    hunched_intervals: list
    pacing_episodes: list
    movement_energy_series: list     # (second_index, torso-lengths per second)
    summary: dict = field(default_factory=dict)


def _interp_joint(frames, name, cfg):
    """Per-frame (x, y) for a joint, linearly interpolated across short
    confidence gaps; None where the joint stays unusable."""
    n = len(frames)
    known = []
    for i, f in enumerate(frames):
        pt = f.joint(name, cfg.min_joint_confidence)
        if pt is not None:
            known.append((i, f.ts_ms, pt[0], pt[1]))
    out = [None] * n
    if not known:
        return out
    for i, ts, x, y in known:
        out[i] = (x, y)
    for (i0, t0, x0, y0), (i1, t1, x1, y1) in zip(known, known[1:]):
        if i1 - i0 > 1 and (t1 - t0) <= cfg.interp_max_gap_ms:
            for j in range(i0 + 1, i1):
                tj = frames[j].ts_ms
                a = (tj - t0) / (t1 - t0)
                out[j] = (x0 + a * (x1 - x0), y0 + a * (y1 - y0))
    return out


def _mid(a, b):
    if a is None or b is None:
        return None
    return ((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)


def _sustained_intervals(ts, flags, sustain_ms, max_bridge_ms=1_000):
    """Maximal runs of True lasting >= sustain_ms. None flags are skipped but
    a long gap between defined frames breaks the run."""
    intervals = []
    start = None
    last_ts = None
    for t, flag in zip(ts, flags):
        if flag is None:
            continue
        if flag:
            if start is not None and last_ts is not None and t - last_ts > max_bridge_ms:
                if last_ts - start >= sustain_ms:
                    intervals.append((start, last_ts))
                start = None
            if start is None:
                start = t
            last_ts = t
        else:
            if start is not None and last_ts - start >= sustain_ms:
                intervals.append((start, last_ts))
            start = None
    if start is not None and last_ts - start >= sustain_ms:
        intervals.append((start, last_ts))
    return intervals


def _merge_intervals(intervals):
    merged = []
    for s, e in sorted(intervals):
        if merged and s <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], e))
        else:
            merged.append((s, e))
    return merged


def _detect_pacing(ts, hip_x, torso, cfg):
    """Pacing episodes from the detrended hip-centroid x series: at least
    cfg.pacing_min_alternations sign alternations between swings whose
    amplitude exceeds the torso-scaled threshold, inside any window."""
    pts = [(t, x) for t, x in zip(ts, hip_x) if x is not None]
    if len(pts) < 4:
        return []
    t_arr = np.array([p[0] for p in pts], dtype=float)
    x_arr = np.array([p[1] for p in pts], dtype=float)

    half = cfg.pacing_window_ms / 2.0
    trend = np.empty_like(x_arr)
    lo = 0
    hi = 0
    n = len(t_arr)
    for i in range(n):
        while t_arr[lo] < t_arr[i] - half:
            lo += 1
        if hi < lo:
            hi = lo
        while hi < n and t_arr[hi] <= t_arr[i] + half:
            hi += 1
        trend[i] = x_arr[lo:hi].mean()
    d = x_arr - trend

    # sign segments (zeros extend the current segment)
    swings = []  # (sign, start_ms, end_ms, amplitude)
    seg_start = 0
    seg_sign = 0
    for i in range(n):
        s = 0 if d[i] == 0 else (1 if d[i] > 0 else -1)
        if s == 0:
            continue
        if seg_sign == 0:
            seg_sign = s
            seg_start = i
        elif s != seg_sign:
            amp = float(np.max(np.abs(d[seg_start:i])))
            swings.append((seg_sign, int(t_arr[seg_start]), int(t_arr[i - 1]), amp))
            seg_sign = s
            seg_start = i
    if seg_sign != 0:
        amp = float(np.max(np.abs(d[seg_start:])))
        swings.append((seg_sign, int(t_arr[seg_start]), int(t_arr[n - 1]), amp))

    threshold = cfg.pacing_amplitude_torso * torso
    qual = [sw for sw in swings if sw[3] > threshold]
    if len(qual) < 2:
        return []

    # alternation between consecutive qualifying swings of opposite sign
    alternations = []  # (time, left swing idx, right swing idx)
    for i in range(len(qual) - 1):
        if qual[i][0] != qual[i + 1][0]:
            alternations.append((qual[i][2], i, i + 1))
    k = cfg.pacing_min_alternations
    if len(alternations) < k:
        return []

    marked = set()
    for i in range(len(alternations) - k + 1):
        if alternations[i + k - 1][0] - alternations[i][0] <= cfg.pacing_window_ms:
            for j in range(i, i + k):
                marked.add(alternations[j][1])
                marked.add(alternations[j][2])

    # temporally adjacent marked swings form one oscillation episode
    episodes = []
    prev_i = None
    for i in sorted(marked):
        adjacent = (
            prev_i is not None and i == prev_i + 1
            and qual[i][1] - qual[prev_i][2] <= 1_000
        )
        if adjacent:
            episodes[-1] = (episodes[-1][0], qual[i][2])
        else:
            episodes.append((qual[i][1], qual[i][2]))
        prev_i = i
    return _merge_intervals(episodes)


def posture_report(frames, cfg=None):
    """Body-language report from landmark frames (see module docstring for
    coordinate conventions). All geometry is normalized by torso length, so
    the output is invariant to uniform scaling and translation."""
    cfg = cfg or PostureConfig()
    if len(frames) < 2:
        raise InsufficientLandmarks("need at least 2 landmark frames")

    core = ("shoulder_l", "shoulder_r", "hip_l", "hip_r")
    core_ok = 0
    for f in frames:
        if all(f.joint(j, cfg.min_joint_confidence) is not None for j in core):
            core_ok += 1
    if core_ok < max(2, len(frames) * 0.5):
        raise InsufficientLandmarks(
            "shoulders and hips must be confident in at least half the frames"
        )

    ts = [f.ts_ms for f in frames]
    pos = {name: _interp_joint(frames, name, cfg) for name in JOINT_NAMES}

    mid_shoulder = [_mid(a, b) for a, b in zip(pos["shoulder_l"], pos["shoulder_r"])]
    mid_hip = [_mid(a, b) for a, b in zip(pos["hip_l"], pos["hip_r"])]
    mid_ear = [_mid(a, b) for a, b in zip(pos["ear_l"], pos["ear_r"])]

    torso_lengths = [
        math.hypot(s[0] - h[0], s[1] - h[1])
        for s, h in zip(mid_shoulder, mid_hip)
        if s is not None and h is not None
    ]
    torso = sum(torso_lengths) / len(torso_lengths)
    if torso <= 0:
        raise InsufficientLandmarks("degenerate torso length")

    crossed_flags = []
    hunched_flags = []
    for i in range(len(frames)):
        ms, mh = mid_shoulder[i], mid_hip[i]
        wl, wr = pos["wrist_l"][i], pos["wrist_r"][i]
        if ms is None or mh is None or wl is None or wr is None:
            crossed_flags.append(None)
        else:
            mid_x = (ms[0] + mh[0]) / 2.0
            margin = cfg.crossed_margin_torso * torso
            in_band = (ms[1] <= wl[1] <= mh[1]) and (ms[1] <= wr[1] <= mh[1])
            crossed_flags.append(
                wl[0] > mid_x + margin and wr[0] < mid_x - margin and in_band
            )
        me = mid_ear[i]
        if ms is None or me is None:
            hunched_flags.append(None)
        else:
            hunched_flags.append((ms[1] - me[1]) < cfg.hunch_gap_torso * torso)

    crossed = _sustained_intervals(ts, crossed_flags, cfg.sustain_ms)
    hunched = _sustained_intervals(ts, hunched_flags, cfg.sustain_ms)

    # movement energy: mean confident-joint displacement per second / torso
    buckets = {}
    for i in range(1, len(frames)):
        disp = []
        for name in JOINT_NAMES:
            a, b = pos[name][i - 1], pos[name][i]
            if a is not None and b is not None:
                disp.append(math.hypot(b[0] - a[0], b[1] - a[1]))
        if not disp:
            continue
        sec = ts[i] // 1000
        buckets[sec] = buckets.get(sec, 0.0) + (sum(disp) / len(disp)) / torso
    energy_series = [(sec, buckets[sec]) for sec in sorted(buckets)]

    hip_x = [(h[0] if h is not None else None) for h in mid_hip]
    pacing = _detect_pacing(ts, hip_x, torso, cfg)

    def covered(intervals, t):
        return any(s <= t < e for s, e in intervals)

    openness = []
    first_sec = ts[0] // 1000
    last_sec = ts[-1] // 1000
    for sec in range(first_sec, last_sec + 1):
        mid_t = sec * 1000 + 500
        openness.append((sec, not covered(crossed, mid_t) and not covered(hunched, mid_t)))

    span = max(1, ts[-1] - ts[0])
    report = PostureReport(
        torso_length=torso,
        openness_series=openness,
        crossed_arm_intervals=crossed,
        hunched_intervals=hunched,
        pacing_episodes=pacing,
        movement_energy_series=energy_series,
    )
    report.summary = {
        "crossed_ratio": sum(e - s for s, e in crossed) / span,
        "hunched_ratio": sum(e - s for s, e in hunched) / span,
        "pacing_ratio": sum(e - s for s, e in pacing) / span,
        "openness_ratio": (
            sum(1 for _, ok in openness if ok) / len(openness) if openness else 1.0
        ),
        "mean_energy": (
            sum(v for _, v in energy_series) / len(energy_series)
            if energy_series else 0.0
        ),
    }
    return report
