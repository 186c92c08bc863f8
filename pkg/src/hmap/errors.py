"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration. ``key`` names the offending field."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class DomainError(ValueError):
    """An argument lies outside the domain of a physical model."""


class InfeasibleRoundError(RuntimeError):
    """No admissible pairing exists for a round.

    ``report`` is a JSON-serialisable dict describing the failure.
    """

    def __init__(self, message, report=None):
        self.report = report or {}
        super().__init__(message)


class NumericError(RuntimeError):
    """An iterative solver hit its cap without meeting tolerances."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)
