"""Exception hierarchy shared by every module."""


class SeclistError(Exception):
    """Base class for all library errors."""


class ValidationError(SeclistError, ValueError):
    pass


class NegativeEntry(ValidationError):
    pass


class RowSumInvalid(ValidationError):
    pass


class DuplicateRows(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class SymbolOutOfRange(ValidationError):
    pass


class AlphabetMismatch(ValidationError):
    pass


class RateOutOfRange(ValidationError):
    pass


class InsufficientTrials(ValidationError):
    pass


class UnknownPlayer(ValidationError):
    pass


class EmptyAuction(ValidationError):
    pass


class DegenerateEpsilon(ValidationError):
    pass


class InfiniteVariance(SeclistError, ArithmeticError):
    pass


class NonConvergence(SeclistError, RuntimeError):
    pass


class BudgetExceeded(SeclistError):
    """Exact enumeration would exceed the configured budget; use Monte-Carlo."""

    def __init__(self, what, size, budget):
        super().__init__(f"{what}: {size} exceeds enumeration budget {budget}; use Monte-Carlo mode")
        self.size = size
        self.budget = budget


class HypothesisViolated(SeclistError, ValueError):
    """Rate pair / prior outside the random-coding construction hypothesis."""

    def __init__(self, clause, detail=""):
        super().__init__(f"hypothesis violated: {clause}" + (f" ({detail})" if detail else ""))
        self.clause = clause
