"""
Error hierarchy for percnn-lab

Every failure raised by the library derives from PercnnError. The CLI maps
``exit_code`` to the process exit status.
"""

from typing import Optional


class PercnnError(Exception):
    """Base class for all library errors"""
    exit_code: int = 1


class SpecError(PercnnError, ValueError):
    """Raised when an argument violates an operation's contract"""
    pass


class ShapeError(SpecError):
    """Raised when channel counts or extents do not line up"""
    pass


class DimensionError(SpecError):
    """Raised when a grid is too small for the requested stencil or padding"""
    pass


class NonFiniteError(PercnnError, ArithmeticError):
    """Raised when a Field would hold NaN or Inf"""
    exit_code = 3


class InstabilityError(PercnnError, ArithmeticError):
    """Raised when the reference solver produces non-finite values"""
    exit_code = 3

    def __init__(self, message: str, step: int, last_stable: Optional[int] = None):
        super().__init__(message)
        self.step = step
        self.last_stable = step - 1 if last_stable is None else last_stable


class DivergenceError(PercnnError, ArithmeticError):
    """Raised when a model rollout leaves the admissible value range"""
    exit_code = 3

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class TrainingDivergedError(PercnnError):
    """Raised when training diverges again after the recovery policy ran"""
    exit_code = 3

    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


class InterpretationError(SpecError):
    """Raised when a filter cannot be mapped onto a symbol"""
    pass


class ConfigError(PercnnError):
    """Raised for invalid or unknown configuration"""
    exit_code = 2


class DatasetFormatError(PercnnError, IOError):
    """Raised when a PCNF dataset file is malformed"""
    exit_code = 4


class CheckpointMismatchError(PercnnError):
    """Raised when a checkpoint does not fit the configured model"""
    exit_code = 2

    def __init__(self, message: str, diff: Optional[dict] = None):
        super().__init__(message)
        self.diff = diff or {}
