"""Exception types raised across the package."""

import numpy as np


class SpaceGanError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(SpaceGanError, ValueError):
    pass


class InvalidKError(SpaceGanError, ValueError):
    pass


class ShapeError(SpaceGanError, ValueError):
    pass


class DegenerateInputError(SpaceGanError, ValueError):
    """Raised when a vector or column has zero spread where spread is required."""


class SchemaError(SpaceGanError, ValueError):
    pass


class ParseError(SpaceGanError, ValueError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class EmptyFoldError(SpaceGanError, ValueError):
    def __init__(self, message, axis=None, bin_index=None):
        super().__init__(message)
        self.axis = axis
        self.bin_index = bin_index


class NumericFault(SpaceGanError, FloatingPointError):
    """Raised when a network produces NaN or Inf."""


class MissingCacheError(SpaceGanError, RuntimeError):
    pass


class IllConditionedError(SpaceGanError, np.linalg.LinAlgError):
    pass
