"""Error taxonomy shared by every module.

UsageError marks a caller mistake (bad rank, mismatched variables, invalid
input).  IntegrityError marks an internal consistency failure: an exact
division that was supposed to be exact, a solver that stalls, a normalized
entry that should be an integer but is not.  Integrity failures mean a
convention or algorithm bug, never bad user input, and are never silently
papered over.
"""


class UsageError(ValueError):
    """The caller asked for something outside the supported contract."""


class IntegrityError(ArithmeticError):
    """An exactness or consistency invariant was violated internally."""
