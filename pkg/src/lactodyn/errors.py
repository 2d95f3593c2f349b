"""Exception types shared across the package."""

__all__ = [
    "LactodynError",
    "PoleError",
    "InfeasibleEquilibrium",
    "IntegrationFailure",
    "AnalysisError",
    "ConfigError",
]


class LactodynError(Exception):
    """Base class for all package errors."""


class PoleError(LactodynError):
    """State too close to a pole of the saturating exchange flux."""


class InfeasibleEquilibrium(LactodynError):
    """No positive stationary point; carries the violated inequality."""

    def __init__(self, constraint: str):
        super().__init__(f"no positive equilibrium: {constraint}")
        self.constraint = constraint


class IntegrationFailure(LactodynError):
    """Time integration could not proceed; carries the last state reached."""

    def __init__(self, message: str, t: float | None = None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class AnalysisError(LactodynError):
    """Root finding, averaging, or shooting failed (named cause in message)."""


class ConfigError(LactodynError):
    """Malformed configuration file; carries a line number when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
