"""Exception types shared across the toolkit."""


class BoxevalError(Exception):
    """Base class for all boxeval errors."""


class ValidationError(BoxevalError):
    """A value violates a domain invariant (bad rotation, scale, camera...).

    Carries an optional input line number and a field path such as
    ``objects[0].box.scale`` so callers can point at the offending record.
    """

    def __init__(self, message, line=None, field=None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.field = field

    def __str__(self):
        parts = []
        if self.line is not None:
            parts.append(f"line {self.line}")
        if self.field is not None:
            parts.append(self.field)
        parts.append(self.message)
        return ": ".join(parts)


class SchemaError(ValidationError):
    """Structurally malformed input: missing field, wrong shape or type."""


class BehindCamera(BoxevalError):
    """A point to be projected has non-positive view-space depth."""


class DegenerateViewpoint(BoxevalError):
    """Camera center coincides with the box center; angles are undefined."""


class ShapeMismatch(BoxevalError):
    """Two keypoint sets (or similar paired arrays) differ in length."""


class InvalidRotation(BoxevalError):
    """A matrix that must be a rotation is not orthonormal."""


class FrameKeyMismatch(BoxevalError):
    """Ground-truth and prediction streams disagree on frame ids."""

    def __init__(self, missing, extra):
        self.missing = tuple(missing)
        self.extra = tuple(extra)
        msg = "frame ids differ between ground truth and predictions"
        if self.missing:
            msg += f"; missing from predictions: {list(self.missing[:5])}"
        if self.extra:
            msg += f"; unknown to ground truth: {list(self.extra[:5])}"
        super().__init__(msg)


class TooFewSamples(BoxevalError):
    """An aggregate statistic was requested over too few samples."""


class InvalidSpec(BoxevalError):
    """A synthetic-scene specification is inconsistent."""
