"""Exception types shared across the workbench."""
from __future__ import annotations

from typing import Optional


class AsmError(Exception):
    """Base class for all workbench errors."""


class ModelSyntaxError(AsmError):
    """Raised when source text cannot be parsed."""

    def __init__(self, message: str, line: int, col: int, expected: Optional[str] = None):
        at = f"{line}:{col}"
        super().__init__(f"{at}: {message}" + (f" (expected {expected})" if expected else ""))
        self.line = line
        self.col = col
        self.expected = expected


class DuplicateDeclaration(AsmError):
    pass


class UnknownImport(AsmError):
    pass


class UnresolvedSymbol(AsmError):
    pass


class TypeMismatch(AsmError):
    pass


class MissingMonitoredInput(AsmError):
    def __init__(self, name: str):
        super().__init__(f"no value supplied for monitored function '{name}'")
        self.name = name


class InconsistentUpdateSet(AsmError):
    """A single step assigned two different values to one location."""

    def __init__(self, location: str, first, second):
        super().__init__(f"location '{location}' updated to both {first!r} and {second!r}")
        self.location = location
        self.first = first
        self.second = second


class ClockRegression(AsmError):
    pass


class StepError(AsmError):
    """Wraps an error raised while executing one step of a run."""

    def __init__(self, step_index: int, cause: AsmError):
        super().__init__(f"step {step_index}: {cause}")
        self.step_index = step_index
        self.cause = cause


class NotControlStateShaped(AsmError):
    pass


class StateSpaceBudgetExceeded(AsmError):
    def __init__(self, budget: int):
        super().__init__(f"state-space budget of {budget} states exceeded")
        self.budget = budget


class UnknownAtom(AsmError):
    pass


class EmptyGlue(AsmError):
    pass


class SetOnControlled(AsmError):
    def __init__(self, name: str):
        super().__init__(f"'set' may only target monitored functions, not '{name}'")
        self.name = name


class UnsupportedConstruct(AsmError):
    pass


class TraceMachineMismatch(AsmError):
    pass


class IncompletePinConfig(AsmError):
    pass


class PinConfigError(AsmError):
    pass


class BothValvesOpen(AsmError):
    pass


class ConfigError(AsmError):
    pass


class UnknownSession(AsmError):
    def __init__(self, session_id: str):
        super().__init__(f"no session '{session_id}'")
        self.session_id = session_id
