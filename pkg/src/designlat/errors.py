"""Shared exception types."""


class DesignlatError(Exception):
    pass


class ConstructionError(DesignlatError):
    """Inputs cannot produce the requested object."""


class ReductionError(DesignlatError):
    """A problem transformation's precondition failed."""


class BudgetExceeded(DesignlatError):
    """A configured work budget ran out; carries any partial report."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
