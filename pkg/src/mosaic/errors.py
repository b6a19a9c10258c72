"""Exception types raised across the package.

Validation problems that should abort a bundle load derive from
``ValidationError``; analysis preconditions derive from ``AnalysisError``.
"""


class MosaicError(Exception):
    """Base class for all package errors."""


class ValidationError(MosaicError):
    """A bundle, stream, or document failed validation."""


class MissingDescriptor(ValidationError):
    def __init__(self, path):
        super().__init__(f"no session descriptor found at {path}")
        self.path = path


class StreamParseError(ValidationError):
    def __init__(self, file, line, reason):
        super().__init__(f"{file}:{line}: {reason}")
        self.file = file
        self.line = line
        self.reason = reason


class SchemaError(ValidationError):
    def __init__(self, line, field, reason=""):
        msg = f"line {line}: invalid field {field!r}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)
        self.line = line
        self.field = field


class EncodingError(ValidationError):
    pass


class NonMonotonicTimestamps(ValidationError):
    def __init__(self, stream):
        super().__init__(
            f"stream {stream!r} has non-monotonic timestamps "
            "(use sort_repair to stable-sort)"
        )
        self.stream = stream


class UnknownStream(ValidationError):
    def __init__(self, stream):
        super().__init__(f"stream {stream!r} has no sync_map entry")
        self.stream = stream


class UnpairedPhaseMarker(ValidationError):
    def __init__(self, label):
        super().__init__(f"phase marker {label!r} has no matching start/end")
        self.label = label


class MissingItem(ValidationError):
    def __init__(self, item_id):
        super().__init__(f"evaluation is missing rubric item {item_id!r}")
        self.item_id = item_id


class ScoreOutOfRange(ValidationError):
    def __init__(self, item_id, score):
        super().__init__(f"score {score!r} for item {item_id!r} outside 1..5")
        self.item_id = item_id
        self.score = score


class AnalysisError(MosaicError):
    """An analysis could not run on the given input."""


class NotARotation(AnalysisError):
    pass


class EmptyStream(AnalysisError):
    pass


class InsufficientLandmarks(AnalysisError):
    pass


class DegenerateSample(AnalysisError):
    pass


class NoVoicedFrames(AnalysisError):
    pass


class UnsupportedEncoding(ValidationError):
    pass


class CorruptHeader(ValidationError):
    pass


class NotAZip(ValidationError):
    pass


class NotAPresentation(ValidationError):
    pass


class MalformedSlideXml(ValidationError):
    def __init__(self, slide_number, reason=""):
        super().__init__(f"slide {slide_number}: malformed XML {reason}".rstrip())
        self.slide_number = slide_number


class NoExternalEvaluations(AnalysisError):
    pass


class SchemaViolation(MosaicError):
    """Internal guard: an assembled report does not match the published schema."""


class UnsupportedFormat(MosaicError):
    def __init__(self, fmt):
        super().__init__(f"unsupported output format {fmt!r}")
        self.fmt = fmt
