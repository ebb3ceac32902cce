"""Exception types raised across the package."""

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain of a distribution or map."""


class ValidationError(ValueError):
    """Input data or configuration violates a documented invariant."""


class SingularityError(np.linalg.LinAlgError):
    """A matrix expected to be symmetric positive definite failed to factor."""

    def __init__(self, message, source=None):
        if source is not None:
            message = f"{message} (matrix built by {source})"
        super().__init__(message)
        self.source = source


class ConvergenceError(RuntimeError):
    """An iterative optimizer stopped before meeting its tolerance.

    The last iterate and gradient are kept on the exception so callers
    can inspect where the search stalled.
    """

    def __init__(self, message, last_iterate=None, gradient=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.gradient = gradient


class StateCorruptionError(RuntimeError):
    """Sampler state violates an invariant it must always satisfy."""


class ChainError(RuntimeError):
    """A chain aborted; ``state`` holds the sweep index and parameters."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state or {}


class SchemaError(ValueError):
    """A delimited input file does not match the recode mapping."""


class RecodeError(ValueError):
    """A raw survey value has no recoding rule."""
