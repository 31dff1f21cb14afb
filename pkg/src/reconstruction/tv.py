"""
First-order difference operators for total variation.
"""
import numpy as np

from src.errors import GridSizeError, InvalidParameterError

BOUNDARIES = ("neumann", "circular")


def tv_forward(image: np.ndarray, boundary: str = "neumann") -> np.ndarray:
    """
    Forward differences along rows and columns.

    With the Neumann boundary the difference at the last row/column is 0.
    The circular boundary wraps around and is diagonalized by the DFT.

    Args:
        image: 2D array, at least 2x2
        boundary: "neumann" or "circular"

    Returns:
        Array of shape (2, H, W) stacking (dx, dy)
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or min(image.shape) < 2:
        raise GridSizeError(f"TV needs a 2D image of at least 2x2, got shape {image.shape}")
    if boundary == "circular":
        dx = np.roll(image, -1, axis=1) - image
        dy = np.roll(image, -1, axis=0) - image
        return np.stack([dx, dy])
    if boundary != "neumann":
        raise InvalidParameterError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
    out = np.zeros((2,) + image.shape)
    out[0, :, :-1] = image[:, 1:] - image[:, :-1]
    out[1, :-1, :] = image[1:, :] - image[:-1, :]
    return out


def tv_adjoint(diffs: np.ndarray, boundary: str = "neumann") -> np.ndarray:
    """
    Adjoint of tv_forward (negative divergence).

    Args:
        diffs: Array of shape (2, H, W) stacking (dx, dy)
        boundary: "neumann" or "circular"

    Returns:
        Image-shaped array
    """
    dx, dy = np.asarray(diffs, dtype=np.float64)
    if boundary == "circular":
        return (np.roll(dx, 1, axis=1) - dx) + (np.roll(dy, 1, axis=0) - dy)
    if boundary != "neumann":
        raise InvalidParameterError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
    out = np.zeros(dx.shape)
    out[:, 1:] += dx[:, :-1]
    out[:, :-1] -= dx[:, :-1]
    out[1:, :] += dy[:-1, :]
    out[:-1, :] -= dy[:-1, :]
    return out


def tv_norm(image: np.ndarray, boundary: str = "neumann") -> float:
    """Anisotropic TV: l1 norm of the forward differences"""
    return float(np.abs(tv_forward(image, boundary)).sum())


def soft_threshold(x: np.ndarray, threshold: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)
