"""Exception types shared across the package.

The CLI maps these to exit codes: invalid parameters exit with 2,
capacity errors (an exhaustive computation requested above the
enumeration cap) exit with 3.
"""


class GroupTestError(Exception):
    """Base class for package-specific errors."""


class InvalidParameterError(GroupTestError, ValueError):
    """A parameter or input lies outside its documented domain."""


class CleanRequiredError(InvalidParameterError):
    """An operation that assumes all test sizes >= 2 saw a smaller test."""


class CapacityError(GroupTestError):
    """An exact enumeration was requested on an instance above the cap."""


class InfeasibleError(GroupTestError):
    """No defective set is consistent with the supplied outcomes."""


class UndefinedConditionalError(GroupTestError):
    """A conditional probability was requested on a zero-probability event."""
