"""Error types shared across the package.

Invalid arguments raise plain ValueError; these classes cover the
numeric failure modes that deserve their own exit code.
"""


class NumericError(RuntimeError):
    """Non-finite values encountered during training or scoring."""


class FitError(NumericError):
    """Mixture EM failed; carries the log-likelihood trace seen so far."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class EnumerationBudgetError(ValueError):
    """An exhaustive enumeration would exceed the configured budget."""
