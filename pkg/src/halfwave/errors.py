"""Exception types shared across the package."""


class HalfwaveError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(HalfwaveError, ValueError):
    """A field or parameter is outside the operation's domain."""


class DivergenceError(HalfwaveError):
    """A time integration left the admissible region.

    ``t`` and ``reason`` identify where and why the run was stopped.
    """

    def __init__(self, reason, t=None):
        self.reason = reason
        self.t = t
        where = "" if t is None else f" at t={t:.6g}"
        super().__init__(f"diverged{where}: {reason}")


class NonContractionError(HalfwaveError):
    """A fixed-point loop stopped contracting.

    ``level`` is ``"wavemap"``, ``"inner"`` or ``"outer"``; ``ratios`` holds the
    ratio history that triggered the stop.
    """

    def __init__(self, level, ratios, state=None):
        self.level = level
        self.ratios = list(ratios)
        self.state = state
        tail = ", ".join(f"{r:.3g}" for r in self.ratios[-5:])
        super().__init__(f"{level} iteration is not contracting (ratios: {tail})")


class InsufficientDataError(HalfwaveError, ValueError):
    """Too few frames for a time-difference or modulation computation."""


class BudgetError(HalfwaveError, ValueError):
    """A direct bilinear sum would exceed the configured mode-pair budget."""


class ConfigError(HalfwaveError):
    """A configuration key is missing or malformed; ``key`` is its dotted path."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
