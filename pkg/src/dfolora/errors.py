"""Exception types shared across the package."""


class BudgetExceededError(RuntimeError):
    """Raised when a candidate evaluation would exceed the forward-call budget."""


class DegenerateStatsError(ValueError):
    """Raised when hidden-state statistics collapse (std below tolerance)."""


class CorpusFormatError(ValueError):
    """Raised on malformed corpus files; message lists offending line numbers."""
