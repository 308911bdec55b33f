"""Exception hierarchy shared by all qpot modules."""


class QpotError(Exception):
    """Base class for all qpot errors."""


class FieldError(QpotError):
    """Invalid grid/field construction or incompatible field operands."""


class NonFiniteSampleError(FieldError):
    """A field handed to an operator contains NaN/inf samples.

    Carries the first offending flat index for diagnostics.
    """

    def __init__(self, label: str, index):
        self.index = index
        super().__init__(f"non-finite sample in field {label!r} at index {index}")


class ConfigError(QpotError):
    """Scenario configuration is malformed (unknown key, bad value, ...)."""


class NumericalAbort(QpotError):
    """A solver produced non-finite values and aborted."""

    def __init__(self, message: str, step: int | None = None):
        self.step = step
        super().__init__(message if step is None else f"{message} (step {step})")


class ScenarioError(QpotError):
    """A scenario pipeline stage failed; names the failing stage."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"stage '{stage}' failed: {message}")
