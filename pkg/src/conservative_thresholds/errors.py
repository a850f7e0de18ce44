"""Exception hierarchy.

Every domain error carries a short machine-readable ``code`` that the CLI
prints as ``error: <code>: <message>``.
"""

from __future__ import annotations


class DomainError(ValueError):
    code = "domain"


class CostError(DomainError):
    """Non-positive profit or loss."""

    code = "cost"


class RangeError(DomainError):
    code = "range"


class DegenerateCostError(DomainError):
    """Therapeutic threshold at 0 or m: the symmetric-cost denominator vanishes."""

    code = "degenerate"


class InvalidPairError(DomainError):
    code = "pair"

    def __init__(self, violation):
        self.violation = violation
        super().__init__(str(violation))


class DataError(DomainError):
    code = "data"

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OracleBudgetError(DomainError):
    code = "budget"
