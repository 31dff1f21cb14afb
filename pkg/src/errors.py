"""
Exception hierarchy shared by every stage of the pipeline.
"""
from typing import Any, Dict, Optional


class RadialensError(Exception):
    """Base class for all errors raised by this package"""


class InvalidParameterError(RadialensError, ValueError):
    """A parameter violates the documented precondition of an operation"""


class GridSizeError(InvalidParameterError):
    """A grid is too small to carry the requested structure"""


class SizingError(RadialensError):
    """A magnified mask shadow does not fit on the simulation grid"""


class DimensionMismatchError(RadialensError, ValueError):
    """Two arrays that must share a shape do not"""


class MaskOpaqueError(RadialensError):
    """The realized mask transmits no light, so its MTF is undefined"""


class MissingPsfError(RadialensError, KeyError):
    """A scene layer has no PSF simulated for its depth"""


class NonFiniteError(RadialensError, ArithmeticError):
    """An iterative routine produced NaN or infinity"""


class OperatorCheckError(RadialensError):
    """A forward/adjoint operator pair failed the inner-product test"""


class StageError(RadialensError):
    """
    An experiment stage failed.

    Args:
        stage: Name of the failing stage
        manifest: Artifacts produced before the failure
        cause: Underlying exception
    """

    def __init__(self, stage: str, manifest: Optional[Dict[str, Any]] = None, cause: Optional[BaseException] = None):
        self.stage = stage
        self.manifest = manifest or {}
        self.cause = cause
        message = f"stage '{stage}' failed"
        if cause is not None:
            message += f": {cause}"
        super().__init__(message)
