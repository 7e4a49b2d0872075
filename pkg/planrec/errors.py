"""Exception types raised by the recognition engine."""

from typing import List, Optional


class PlanRecError(Exception):
    """Base class for every error the package raises on purpose."""


class ParseError(PlanRecError):
    """A knowledge base or value spec is not in the expected shape."""


class ValidationError(PlanRecError):
    """A knowledge base parsed but broke one or more invariants."""

    def __init__(self, diagnostics: List["object"]):
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0] if self.diagnostics else None
        message = str(first) if first is not None else "invalid knowledge base"
        if len(self.diagnostics) > 1:
            message += f" (and {len(self.diagnostics) - 1} more)"
        super().__init__(message)


class TranscriptError(PlanRecError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NoInterpretation(PlanRecError):
    """No operator of the library explains the predicate."""


class EmptySet(PlanRecError):
    """Every (interpretation, fragment, relation) combination was invalid."""


class DegenerateDomain(PlanRecError):
    """A parameter has no possible values (knowledge base bug)."""


class DegenerateNorm(PlanRecError):
    """ICNORM evaluated to 0, so there is nothing to discriminate."""
