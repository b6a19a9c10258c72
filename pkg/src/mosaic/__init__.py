"""Session analytics for instrumented oral presentations.

Loads multimodal session bundles (head pose, body landmarks, audio,
transcript, heart rate, gaze, interaction logs, slide decks, rubric
evaluations, live annotations), synchronizes them on one timeline, runs the
per-modality analyses, aggregates human assessments, and renders a
three-part feedback report with comparative statistics.
"""

__version__ = "0.1.0"

from .core import LoadedBundle, build_phase_schedule, load_bundle, to_session_time
from .errors import MosaicError, ValidationError
from .model import PhaseSchedule, Rubric, Session

__all__ = [
    "LoadedBundle",
    "MosaicError",
    "PhaseSchedule",
    "Rubric",
    "Session",
    "ValidationError",
    "build_phase_schedule",
    "load_bundle",
    "to_session_time",
    "__version__",
]
