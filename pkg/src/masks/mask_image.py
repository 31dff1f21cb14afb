"""
Cartesian transmittance grids shared by every mask generator.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from config.config import APERTURE_FRACTION, MASK_PITCH_UM
from src.errors import GridSizeError, InvalidParameterError


def grid_center(n_y: int, n_x: int) -> Tuple[float, float]:
    """Optical axis position in pixel coordinates (between pixels on even grids)"""
    return (n_y - 1) / 2.0, (n_x - 1) / 2.0


def pixel_offsets(n_y: int, n_x: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Pixel offsets from the optical axis.

    Args:
        n_y: Grid height in pixels
        n_x: Grid width in pixels

    Returns:
        Tuple (dy, dx) of 2D arrays in pixel units
    """
    c_y, c_x = grid_center(n_y, n_x)
    dy, dx = np.meshgrid(np.arange(n_y) - c_y, np.arange(n_x) - c_x, indexing="ij")
    return dy, dx


def check_grid(n_y: int, n_x: int) -> None:
    if n_y < 2 or n_x < 2:
        raise GridSizeError(f"mask grid must be at least 2x2, got {n_y}x{n_x}")


def check_aperture_fraction(aperture_fraction: float) -> None:
    if not 0.0 < aperture_fraction <= 1.0:
        raise InvalidParameterError(f"aperture_fraction must lie in (0, 1], got {aperture_fraction}")


def aperture_radius_px(n_y: int, n_x: int, aperture_fraction: float) -> float:
    return aperture_fraction * min(n_y, n_x) / 2.0


def aperture_mask(n_y: int, n_x: int, aperture_fraction: float = APERTURE_FRACTION) -> np.ndarray:
    """
    Boolean disk of unshielded pixels.

    The disk is centered on the optical axis and has diameter
    aperture_fraction * min(n_y, n_x) pixels.

    Args:
        n_y: Grid height in pixels
        n_x: Grid width in pixels
        aperture_fraction: Diameter of the disk relative to the short grid side

    Returns:
        Boolean array, True inside the aperture
    """
    check_grid(n_y, n_x)
    check_aperture_fraction(aperture_fraction)
    dy, dx = pixel_offsets(n_y, n_x)
    radius = aperture_radius_px(n_y, n_x, aperture_fraction)
    return dy ** 2 + dx ** 2 <= radius ** 2


@dataclass(frozen=True)
class MaskImage:
    """
    Transmittance grid of a coded amplitude mask.

    Attributes:
        grid: 2D array of transmittance values in [0, 1], shape (n_y, n_x)
        pitch: Physical pixel pitch in micrometers
        aperture_fraction: Relative diameter of the unshielded central disk
    """

    grid: np.ndarray
    pitch: float = MASK_PITCH_UM
    aperture_fraction: float = APERTURE_FRACTION

    def __post_init__(self):
        grid = np.array(self.grid, dtype=np.float64)
        if grid.ndim != 2:
            raise InvalidParameterError(f"mask grid must be 2D, got shape {grid.shape}")
        check_grid(*grid.shape)
        check_aperture_fraction(self.aperture_fraction)
        if self.pitch <= 0:
            raise InvalidParameterError(f"mask pitch must be positive, got {self.pitch}")
        if not np.all(np.isfinite(grid)) or grid.min() < 0.0 or grid.max() > 1.0:
            raise InvalidParameterError("mask transmittance must lie in [0, 1]")
        outside = ~aperture_mask(grid.shape[0], grid.shape[1], self.aperture_fraction)
        if np.any(grid[outside] != 0.0):
            raise InvalidParameterError("mask pixels outside the aperture must be exactly 0")
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.grid.shape

    @property
    def aperture(self) -> np.ndarray:
        return aperture_mask(self.shape[0], self.shape[1], self.aperture_fraction)

    @property
    def mean_transmittance(self) -> float:
        """Average transmittance over the unshielded disk"""
        return float(self.grid[self.aperture].mean())

    @property
    def open_fraction(self) -> float:
        """Fraction of in-aperture pixels with transmittance above one half"""
        return float((self.grid[self.aperture] > 0.5).mean())

    @classmethod
    def shielded(cls, values: np.ndarray, pitch: float = MASK_PITCH_UM,
                 aperture_fraction: float = APERTURE_FRACTION) -> "MaskImage":
        """
        Apply the circular aperture to raw transmittance values.

        Args:
            values: 2D array of values in [0, 1]
            pitch: Pixel pitch in micrometers
            aperture_fraction: Relative diameter of the unshielded disk

        Returns:
            MaskImage with every pixel outside the aperture set to 0
        """
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise InvalidParameterError(f"mask values must be 2D, got shape {values.shape}")
        inside = aperture_mask(values.shape[0], values.shape[1], aperture_fraction)
        return cls(np.where(inside, values, 0.0), pitch=pitch, aperture_fraction=aperture_fraction)


def binarize(mask: MaskImage, threshold: float = 0.5) -> MaskImage:
    """
    Threshold a continuous mask to {0, 1}, as a binary display would show it.

    Args:
        mask: Mask to threshold
        threshold: Values at or above this become fully transparent

    Returns:
        Binary MaskImage with the same pitch and aperture
    """
    if not 0.0 < threshold < 1.0:
        raise InvalidParameterError(f"threshold must lie in (0, 1), got {threshold}")
    binary = (mask.grid >= threshold).astype(np.float64)
    return MaskImage.shielded(binary, pitch=mask.pitch, aperture_fraction=mask.aperture_fraction)
