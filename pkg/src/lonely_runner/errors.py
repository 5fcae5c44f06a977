"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: invalid input is 2, budget/partial is 3,
search failure is 4.
"""


class ToolkitError(Exception):
    exit_code = 1


class InvalidArgument(ToolkitError, ValueError):
    exit_code = 2


class OutOfRange(InvalidArgument):
    """A value lies beyond the sieve limit."""


class NotInvertible(InvalidArgument):
    pass


class PreconditionViolation(InvalidArgument):
    """The hypothesis of the requested computation does not hold."""


class DomainExceeded(InvalidArgument):
    """A table row is requested outside the range where its formula is defined."""


class Inapplicable(InvalidArgument):
    """The instance is outside the domain of the witness construction."""


class ResourceLimit(ToolkitError):
    exit_code = 3


class BudgetExceeded(ResourceLimit):
    """A long scan ran out of budget; ``partial`` holds what was computed."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class SearchFailed(ToolkitError):
    exit_code = 4

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []
