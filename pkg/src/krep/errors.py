"""Exception types shared across the package."""


class BudgetExceeded(RuntimeError):
    """An enumeration or search hit its configured size limit.

    ``best`` carries whatever partial answer the caller can still use
    (for the exact solver: the best cover found so far).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class InfeasibleRegime(ValueError):
    """Parameters fall outside the range where a construction makes sense."""


class PropertyViolation(AssertionError):
    """A proven invariant failed; indicates an implementation bug."""
