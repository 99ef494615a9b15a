"""Exception hierarchy shared across the pipeline."""


class AdRelightError(Exception):
    """Base class for all pipeline errors."""


class GeometryError(AdRelightError):
    """Dimension mismatch, degenerate quad, or out-of-bounds placement."""


class BackboneError(AdRelightError):
    """A relighting backbone call failed."""


class ProtocolError(BackboneError):
    """A remote backbone answered, but not with a valid protocol response."""


class StageError(AdRelightError):
    """Wraps the first failure inside a pipeline run with its stage tag."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
