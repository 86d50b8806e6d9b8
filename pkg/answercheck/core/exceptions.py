"""
Error hierarchy for answercheck.

Everything derives from ValueError so callers that only care about bad input
can catch one builtin.
"""


class AnswerCheckError(ValueError):
    """Base class for all answercheck errors."""


class ParseError(AnswerCheckError):
    """An input expression violates the grammar."""

    def __init__(self, offset: int, expected: str, found: str):
        self.offset = offset
        self.expected = expected
        self.found = found
        super().__init__(f"at offset {offset}: expected {expected}, found {found}")


class VariableMismatchError(AnswerCheckError):
    """Two expressions (or an expression and a config) disagree on the variable."""


class SegmentError(AnswerCheckError):
    """A segment is unusable where it was supplied (e.g. it straddles zero)."""


class GridExhaustedError(AnswerCheckError):
    """Every grid index of a segment has already been drawn."""


class InfeasiblePackingError(AnswerCheckError):
    """Requested disjoint segments do not fit in the placement range."""


class ProbabilityDomainError(AnswerCheckError):
    """Parameters lie outside the regime a probability formula is defined for."""


class UniverseTooLargeError(AnswerCheckError):
    """Exhaustive enumeration was requested for a universe that is too big."""
