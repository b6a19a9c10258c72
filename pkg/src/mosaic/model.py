"""Shared domain types: session descriptor, timeline, and stream samples.

All timestamps are integer milliseconds on the unified session clock
(0 = presentation start) unless a field name says otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

JOINT_NAMES = (
    "nose", "eye_l", "eye_r", "ear_l", "ear_r",
    "shoulder_l", "shoulder_r", "elbow_l", "elbow_r",
    "wrist_l", "wrist_r", "hip_l", "hip_r",
    "knee_l", "knee_r", "ankle_l", "ankle_r",
)

EVALUATOR_ROLES = ("professor", "peer", "self")

PHASE_NAMES = ("opening", "body", "conclusion", "qa", "other")

ANNOTATION_KINDS = ("instant", "start", "end")

EVENT_KINDS = (
    "click", "keypress", "item_focus", "item_blur", "item_rated",
    "comment_edit", "slide_advance", "slide_back",
)

# Physiologic plausibility range for wearable heart-rate samples; values
# outside are kept but flagged as artifacts and excluded from statistics.
BPM_MIN = 20.0
BPM_MAX = 250.0

LANDMARK_CONFIDENCE_MIN = 0.3


@dataclass(frozen=True)
class HeartSample:
    ts_ms: int
    bpm: float

    @property
    def artifact(self) -> bool:
        return not (BPM_MIN <= self.bpm <= BPM_MAX)


@dataclass(frozen=True)
class GazeSample:
    ts_ms: int
    x: float | None
    y: float | None
    valid: bool


@dataclass(frozen=True)
class LandmarkFrame:
    ts_ms: int
    # joint name -> (x, y, confidence) in image coordinates, y down.
    joints: dict

    def joint(self, name, min_confidence=LANDMARK_CONFIDENCE_MIN):
        """Return (x, y) for a joint, or None when absent/low-confidence."""
        v = self.joints.get(name)
        if v is None or v[2] < min_confidence:
            return None
        return (v[0], v[1])


@dataclass(frozen=True)
class HeadPoseFrame:
    ts_ms: int
    # Either euler angles in degrees or a 3x3 row-major rotation matrix;
    # exactly one of the two is set.
    euler: tuple | None = None  # (pitch, yaw, roll)
    matrix: tuple | None = None  # ((r00, r01, r02), ..., (r20, r21, r22))


@dataclass(frozen=True)
class TranscriptWord:
    word: str
    start_ms: int
    end_ms: int


@dataclass(frozen=True)
class InteractionEvent:
    ts_ms: int
    actor_id: str
    kind: str
    item_id: str | None = None
    value: object = None
    client_ts_ms: int | None = None


@dataclass(frozen=True)
class Annotation:
    id: str
    label: str
    kind: str  # instant | start | end
    ts_ms: int
    source: str = ""


@dataclass(frozen=True)
class Phase:
    name: str
    start_ms: int
    end_ms: int  # exclusive

    def contains(self, ts_ms) -> bool:
        return self.start_ms <= ts_ms < self.end_ms

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms


@dataclass(frozen=True)
class PhaseSchedule:
    phases: tuple  # of Phase, sorted by start_ms, non-overlapping

    def __iter__(self):
        return iter(self.phases)

    def phase_at(self, ts_ms) -> Phase | None:
        for p in self.phases:
            if p.contains(ts_ms):
                return p
        return None

    def by_name(self, name) -> Phase | None:
        for p in self.phases:
            if p.name == name:
                return p
        return None

    def validate(self):
        prev_end = None
        prev_start = None
        for p in self.phases:
            if p.end_ms <= p.start_ms:
                raise ValueError(f"phase {p.name} has end <= start")
            if prev_start is not None and p.start_ms < prev_start:
                raise ValueError("phases not sorted by start_ms")
            if prev_end is not None and p.start_ms < prev_end:
                raise ValueError(f"phase {p.name} overlaps previous phase")
            prev_start = p.start_ms
            prev_end = p.end_ms
        return self


@dataclass(frozen=True)
class RubricItem:
    id: str
    title: str
    levels: tuple  # exactly five level descriptions
    phase: str | None = None       # maps the item to a presentation phase
    metric_link: str | None = None  # analysis metric id used as evidence


@dataclass(frozen=True)
class Rubric:
    version: str
    items: tuple  # of RubricItem

    def item_ids(self):
        return [it.id for it in self.items]

    def item(self, item_id) -> RubricItem | None:
        for it in self.items:
            if it.id == item_id:
                return it
        return None

    def item_phase_map(self) -> dict:
        return {it.id: it.phase for it in self.items if it.phase}


@dataclass(frozen=True)
class Evaluation:
    evaluator_id: str
    role: str  # professor | peer | self
    scores: dict  # item_id -> int in 1..5
    comments: dict  # item_id -> str (may be empty)
    version: int = 1

    def mean_score(self) -> float:
        return sum(self.scores.values()) / len(self.scores)


@dataclass
class Session:
    """Descriptor for one presentation session (contents of session.json)."""
    id: str
    presenter_id: str
    evaluators: list = field(default_factory=list)  # (id, role) pairs
    observers: list = field(default_factory=list)
    planned_duration_ms: int = 600_000
    qa_duration_ms: int = 300_000
    sync_map: dict = field(default_factory=dict)  # stream id -> offset ms
    streams: dict = field(default_factory=dict)   # stream id -> {kind, path, actor}
    aoi_config: list = field(default_factory=list)  # [{name, rect: [x0,y0,x1,y1]}]
    cone_map: list | None = None  # optional override, see vision.ConeMap
    thresholds: dict = field(default_factory=dict)  # per-analysis overrides
    rubric_path: str | None = None
    templates_path: str | None = None
    annotation_labels: list = field(default_factory=list)

    @property
    def span_ms(self) -> int:
        return self.planned_duration_ms + self.qa_duration_ms

    def evaluator_role(self, actor_id) -> str | None:
        for eid, role in self.evaluators:
            if eid == actor_id:
                return role
        return None

    def role_counts(self) -> dict:
        counts = {r: 0 for r in EVALUATOR_ROLES}
        for _, role in self.evaluators:
            counts[role] = counts.get(role, 0) + 1
        return counts
