"""Exception types shared across the package."""


class GroupEqnError(Exception):
    """Base class for all package errors."""


class InputError(GroupEqnError, ValueError):
    """A caller-supplied object violates a documented precondition."""


class GroupTooLarge(InputError):
    """Generator closure exceeded the configured element cap."""


class NotSolvable(InputError):
    """Operation requires a solvable group but the derived series stalls."""


class NotReadOnce(InputError):
    """Expression has a free variable occurring more than once."""


class BudgetExceeded(GroupEqnError):
    """An exhaustive search would exceed the allowed budget."""


class VerificationError(GroupEqnError):
    """An internal construction failed its built-in correctness check.

    This always indicates a bug (or a miscompiled certificate), never a
    legitimate negative answer.
    """


class TheoremInapplicable(GroupEqnError):
    """The hardness preprocessing hypotheses fail for this group.

    Covers the deliberately open case (Fitting length 3 with a 2-group
    top factor) as well as groups of Fitting length below 3.
    """

