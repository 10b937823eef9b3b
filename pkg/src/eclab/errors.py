"""
eclab Errors

Exception hierarchy shared by the library and the command-line front end.
"""

from typing import List, Optional


class EclabError(Exception):
    """Base class for every error raised on purpose by eclab."""


class ConfigError(EclabError):
    """
    Invalid or unparseable experiment configuration.

    Carries every diagnostic found so the caller can report them all at once.
    """

    def __init__(self, message: str, diagnostics: Optional[List[str]] = None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])

    def __str__(self) -> str:
        if not self.diagnostics:
            return super().__str__()
        lines = [super().__str__()] + [f"  - {d}" for d in self.diagnostics]
        return "\n".join(lines)


class NumericalError(EclabError):
    """A numerical procedure failed to produce a trustworthy result."""


class DegenerateCovarianceError(NumericalError):
    """Covariance is singular where a nonsingular one is required."""


class QuadratureError(NumericalError):
    """An integral or series did not reach its tolerance."""


class InputError(EclabError, ValueError):
    """User-supplied data file is malformed or inconsistent."""
