"""Exception types raised across reservoircrowd."""
import numpy as np


class InvalidArgumentError(ValueError):
    pass


class DegenerateMatrixError(ValueError):
    pass


class ContractViolation(ValueError):
    pass


class PlacementCapacityError(ValueError):
    pass


class SingularAccumulatorError(np.linalg.LinAlgError):
    def __init__(self, message, condition=float('inf')):
        super().__init__(message)
        self.condition = condition


class MapParseError(ValueError):
    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class ConfigValidationError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"Invalid configuration '{key}': {message}")
        self.key = key


class TrajectoryLogMissingError(FileNotFoundError):
    pass
