"""Exception types shared across the toolbox."""


class NumericalError(RuntimeError):
    """A computation left the valid numerical domain (NaN/Inf, non-PD matrix)."""


class DivergenceError(NumericalError):
    """An iterative solver diverged; carries the last state for debugging."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state
