"""Exception hierarchy shared by all stopwalk modules.

The CLI maps these onto stable exit codes: ConfigError -> 2,
BudgetExceededError -> 3, ContractError (and subclasses) -> 4.
"""

from __future__ import annotations


class StopwalkError(Exception):
    """Base class for all errors raised by this package."""


class ContractError(StopwalkError):
    """A precondition of an operation was violated by the caller."""


class GroupMismatchError(ContractError):
    """Two objects built over different group specs were combined."""


class DivergenceError(ContractError):
    """A hitting rule whose target carries no mass (the stop time is infinite)."""


class UndecidablePrefixError(ContractError):
    """An infinite-word query needs more prefix data than was declared."""

    def __init__(self, message: str, needed: int = 0):
        super().__init__(message)
        self.needed = needed


class NotReachedError(ContractError):
    """A kernel denominator is still zero at the requested horizon."""


class EvaluationError(ContractError):
    """A user-supplied function evaluator failed or returned an invalid value."""

    def __init__(self, message: str, element=None):
        super().__init__(message)
        self.element = element


class BudgetExceededError(StopwalkError):
    """An enumeration exceeded its node budget; carries the depth reached."""

    def __init__(self, message: str, depth_reached: int = 0, nodes: int = 0):
        super().__init__(message)
        self.depth_reached = depth_reached
        self.nodes = nodes


class ConfigError(StopwalkError):
    """A run configuration failed to parse or validate."""
