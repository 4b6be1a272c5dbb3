"""
semsplat - Exception Definitions

Complete exception hierarchy for the semantic splatting library.

All errors carry an ``error_code`` (stable string), a human message, an
optional ``details`` mapping and an ``exit_code`` the CLI returns.
"""

from typing import Optional, Dict, Any


class SemsplatError(Exception):
    """
    Base exception for all semsplat errors.

    All library exceptions inherit from this class.
    """
    error_code: str = "SEMSPLAT_ERROR"
    exit_code: int = 1

    def __init__(
        self,
        message: str,
        details: Optional[Dict[str, Any]] = None,
        cause: Optional[Exception] = None
    ):
        super().__init__(message)
        self.message = message
        self.details = details or {}
        self.cause = cause

    def to_dict(self) -> Dict[str, Any]:
        """Convert exception to dictionary for serialization"""
        return {
            "error_code": self.error_code,
            "message": self.message,
            "details": self.details,
            "cause": str(self.cause) if self.cause else None,
        }

    def __str__(self) -> str:
        if self.details:
            return f"{self.message} (details: {self.details})"
        return self.message


# Configuration Exceptions

class ConfigError(SemsplatError):
    """Raised when a configuration file or value is invalid"""
    error_code = "CONFIG_ERROR"
    exit_code = 2

    def __init__(self, message: str, field: Optional[str] = None, cause: Optional[Exception] = None):
        super().__init__(message, details={"field": field} if field else None, cause=cause)
        self.field = field


# Input Exceptions

class InputError(SemsplatError):
    """Base exception for malformed or missing inputs"""
    error_code = "INPUT_ERROR"
    exit_code = 3


class ParseError(InputError):
    """Raised when a text file row cannot be parsed"""
    error_code = "PARSE_ERROR"

    def __init__(self, path: str, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}", details={"path": path, "line": line})
        self.path = path
        self.line = line


class MissingFile(InputError):
    """Raised when a required file is absent"""
    error_code = "MISSING_FILE"

    def __init__(self, path: str, message: Optional[str] = None):
        super().__init__(message or f"Required file not found: {path}", details={"path": path})
        self.path = path


class UnsupportedCameraModel(InputError):
    """Raised for camera models other than PINHOLE / SIMPLE_PINHOLE"""
    error_code = "UNSUPPORTED_CAMERA_MODEL"

    def __init__(self, model: str, path: Optional[str] = None, line: Optional[int] = None):
        details: Dict[str, Any] = {"model": model}
        if path is not None:
            details["path"] = path
        if line is not None:
            details["line"] = line
        super().__init__(
            f"Camera model '{model}' is not supported; only PINHOLE and SIMPLE_PINHOLE are accepted",
            details=details,
        )
        self.model = model


class ShapeMismatch(InputError):
    """Raised when array shapes disagree"""
    error_code = "SHAPE_MISMATCH"

    def __init__(self, message: str, expected: Any = None, actual: Any = None, path: Optional[str] = None):
        details: Dict[str, Any] = {}
        if expected is not None:
            details["expected"] = expected
        if actual is not None:
            details["actual"] = actual
        if path is not None:
            details["path"] = path
        super().__init__(message, details=details)
        self.expected = expected
        self.actual = actual
        self.path = path


class CorruptCheckpoint(InputError):
    """Raised when a checkpoint file is truncated or malformed"""
    error_code = "CORRUPT_CHECKPOINT"

    def __init__(self, path: str, message: str):
        super().__init__(f"Corrupt checkpoint {path}: {message}", details={"path": path})
        self.path = path


class ImageTooSmall(InputError):
    """Raised when an image is smaller than a filter window"""
    error_code = "IMAGE_TOO_SMALL"

    def __init__(self, height: int, width: int, window: int):
        super().__init__(
            f"Image of {height}x{width} is smaller than the {window}x{window} window",
            details={"height": height, "width": width, "window": window},
        )


class InvalidInstanceMasks(InputError):
    """Raised when instance ids are not a contiguous range or maps disagree in size"""
    error_code = "INVALID_INSTANCE_MASKS"


# Geometry Exceptions

class GeometryError(SemsplatError):
    """Base exception for geometric precondition failures"""
    error_code = "GEOMETRY_ERROR"
    exit_code = 4


class BehindCamera(GeometryError):
    """Raised when a camera-space point is at or behind the near plane"""
    error_code = "BEHIND_CAMERA"

    def __init__(self, depth: float, near: float):
        super().__init__(
            f"Point depth {depth:g} is not beyond the near plane {near:g}",
            details={"depth": float(depth), "near": float(near)},
        )
        self.depth = depth
        self.near = near


class DegenerateCovariance(GeometryError):
    """Raised when a projected covariance is not invertible"""
    error_code = "DEGENERATE_COVARIANCE"

    def __init__(self, determinant: float):
        super().__init__(
            f"2D covariance determinant {determinant:g} is below 1e-12",
            details={"determinant": float(determinant)},
        )
        self.determinant = determinant


# Numerical Exceptions

class NumericalError(SemsplatError):
    """Base exception for numerical failures during optimization"""
    error_code = "NUMERICAL_ERROR"
    exit_code = 4


class NonFiniteLoss(NumericalError):
    """Raised when a loss term evaluates to NaN or infinity"""
    error_code = "NON_FINITE_LOSS"

    def __init__(self, parts: Dict[str, float], step: Optional[int] = None):
        where = f" at step {step}" if step is not None else ""
        super().__init__(f"Non-finite loss{where}", details={"parts": parts, "step": step})
        self.parts = parts
        self.step = step


class DegenerateFeatures(NumericalError):
    """Raised when a feature map has fewer than three principal directions"""
    error_code = "DEGENERATE_FEATURES"

    def __init__(self, rank: int):
        super().__init__(f"Feature covariance has rank {rank} < 3", details={"rank": rank})
        self.rank = rank


# Data Exceptions

class DataError(SemsplatError):
    """Base exception for invalid data values or counts"""
    error_code = "DATA_ERROR"
    exit_code = 5


class EmptyInput(DataError):
    """Raised when an operation needs at least one element"""
    error_code = "EMPTY_INPUT"


class LabelOutOfRange(DataError):
    """Raised when a label map holds a class outside [0, C) other than the ignore value"""
    error_code = "LABEL_OUT_OF_RANGE"

    def __init__(self, value: int, num_classes: int):
        super().__init__(
            f"Label {value} outside [0, {num_classes}) and not the ignore value 255",
            details={"value": int(value), "num_classes": int(num_classes)},
        )


class InvalidSampleCount(DataError):
    """Raised when sampling parameters cannot be satisfied"""
    error_code = "INVALID_SAMPLE_COUNT"


class TooFewPoints(DataError):
    """Raised when a cloud has too few points for a neighbourhood query"""
    error_code = "TOO_FEW_POINTS"

    def __init__(self, count: int, required: int):
        super().__init__(
            f"Cloud has {count} points; more than {required} are required",
            details={"count": count, "required": required},
        )


class KTooLarge(DataError):
    """Raised when more neighbours are requested than the index can supply"""
    error_code = "K_TOO_LARGE"

    def __init__(self, k: int, available: int):
        super().__init__(
            f"Requested k={k} neighbours but only {available} are available",
            details={"k": k, "available": available},
        )


class EmptyPool(DataError):
    """Raised when the view sampler has no views for a required pool"""
    error_code = "EMPTY_POOL"

    def __init__(self, pool: str):
        super().__init__(f"No views available in the '{pool}' pool", details={"pool": pool})
        self.pool = pool


class MissingReferenceLabel(DataError):
    """Raised when the pseudo-label reference view has no ground-truth label"""
    error_code = "MISSING_REFERENCE_LABEL"

    def __init__(self, view_id: str):
        super().__init__(f"Reference view '{view_id}' has no ground-truth label", details={"view_id": view_id})
        self.view_id = view_id


# Utility Functions

def wrap_exception(e: Exception, wrapper_class: type = SemsplatError) -> SemsplatError:
    """
    Wrap a standard exception in a SemsplatError.

    Args:
        e: The exception to wrap
        wrapper_class: The class to wrap with

    Returns:
        SemsplatError: Wrapped exception
    """
    if isinstance(e, SemsplatError):
        return e
    return wrapper_class(str(e), cause=e)
