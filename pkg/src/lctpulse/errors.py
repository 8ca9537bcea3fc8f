"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Malformed or inconsistent configuration input."""


class UnknownLabelError(LookupError):
    """A bare-state label that does not exist in the spectrum."""


class DegenerateLevelsError(ValueError):
    """Operation undefined on a (near-)degenerate eigenvalue pair."""


class ConvergenceError(RuntimeError):
    """An optimization stage failed to reach its goal."""
