"""Exception types shared across the engine and its analysis layers."""


class EngineError(Exception):
    """Base class for all engine-level failures."""


class DimensionMismatch(EngineError):
    """An input vector or matrix has a shape the receiving contract rejects."""


class IntegrationDiverged(EngineError):
    """The integrator produced a non-finite state."""

    def __init__(self, tick: int, what: str = "state"):
        self.tick = tick
        super().__init__(f"integration diverged at tick {tick}: non-finite {what}")


class UnsupportedKernel(EngineError):
    """Requested memory kernel is outside the supported library.

    Raised loudly instead of silently approximating the feedback.
    """


class UnderDetermined(EngineError):
    """Fewer samples than unknowns in a fit or relation search."""


class WindowTooShort(EngineError):
    """A window functional needs more ticks than the window contains."""


class EvaluationFailure(EngineError):
    """A user-supplied functional failed at a specific tick."""

    def __init__(self, name: str, tick: int, cause: Exception):
        self.name = name
        self.tick = tick
        super().__init__(f"evaluation of {name!r} failed at tick {tick}: {cause}")


class ReplayMismatch(EngineError):
    """A re-simulated session diverged from its log."""


class SchemaError(EngineError):
    """A scenario document or session log violates its declared schema."""
