"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class KerrCatError(Exception):
    exit_code = 1
    kind = "error"

    def __init__(self, message, kind=None):
        super().__init__(message)
        if kind is not None:
            self.kind = kind


class PhysicsError(KerrCatError):
    """Invalid model or state, failed solve, or a violated physical invariant."""

    exit_code = 2
    kind = "physics-error"


class FitError(KerrCatError):
    """Least-squares or Monte-Carlo failure."""

    exit_code = 3
    kind = "fit-failure"


class ConfigError(KerrCatError):
    """Bad CLI usage or configuration content."""

    exit_code = 64
    kind = "usage-error"
