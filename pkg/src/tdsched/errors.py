"""Exception hierarchy shared by every module."""

from __future__ import annotations


class SchedulingError(Exception):
    """Base class for all library errors."""


class DomainError(SchedulingError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InvalidInstance(SchedulingError, ValueError):
    """A game or matching instance violates its structural invariants."""


class ClassMismatch(SchedulingError):
    """A solver or mechanism was applied outside the game class it supports."""

    def __init__(self, message: str, flag: str | None = None) -> None:
        super().__init__(message)
        self.flag = flag


class BudgetExceeded(SchedulingError):
    """An exhaustive search would exceed its configured size budget."""


class StepBudgetExceeded(SchedulingError):
    """Best-response dynamics ran out of steps without a verdict."""


class ParameterInfeasible(SchedulingError, ValueError):
    """Generator parameters admit no valid instance."""


class MalformedProfile(SchedulingError, ValueError):
    """A profile does not have the structure an analysis requires."""


class InfeasibleSpec(SchedulingError, ValueError):
    """A random-sampling request names an inconsistent set of class flags."""


class ParseError(SchedulingError, ValueError):
    """An input file or inline argument could not be decoded."""
