"""
Depth-dependent PSFs as geometric shadows of the coded mask.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.ndimage import map_coordinates

from config.config import MASK_SENSOR_DIST_MM, SENSOR_PITCH_UM
from src.errors import (
    DimensionMismatchError,
    InvalidParameterError,
    MaskOpaqueError,
    SizingError,
)
from src.masks.mask_image import MaskImage, aperture_radius_px, pixel_offsets

logger = logging.getLogger(__name__)

UNIT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Psf:
    """
    Unit-sum PSF on the sensor grid.

    Attributes:
        kernel: 2D nonnegative array summing to one
        depth_z: Source distance in cm the PSF was simulated for
        mag: Geometric magnification of the mask shadow
        mask_sensor_dist_mm: Mask-to-sensor distance used in the simulation
    """

    kernel: np.ndarray
    depth_z: float = float("inf")
    mag: float = 1.0
    mask_sensor_dist_mm: Optional[float] = None

    def __post_init__(self):
        kernel = np.array(self.kernel, dtype=np.float64)
        if kernel.ndim != 2 or kernel.size == 0:
            raise InvalidParameterError(f"PSF kernel must be a non-empty 2D array, got shape {kernel.shape}")
        if not np.all(np.isfinite(kernel)) or kernel.min() < 0.0:
            raise InvalidParameterError("PSF kernel must be finite and nonnegative")
        if abs(kernel.sum() - 1.0) > UNIT_SUM_TOL:
            raise InvalidParameterError(f"PSF kernel must sum to 1, got {kernel.sum()!r}")
        kernel.setflags(write=False)
        object.__setattr__(self, "kernel", kernel)

    @property
    def shape(self):
        return self.kernel.shape

    @classmethod
    def from_kernel(cls, kernel: np.ndarray, depth_z: float = float("inf"), mag: float = 1.0,
                    mask_sensor_dist_mm: Optional[float] = None) -> "Psf":
        """
        Normalize an arbitrary nonnegative kernel to unit sum.

        Args:
            kernel: 2D nonnegative array
            depth_z: Source distance in cm
            mag: Geometric magnification
            mask_sensor_dist_mm: Mask-to-sensor distance in mm

        Returns:
            Psf carrying the normalized kernel
        """
        kernel = np.asarray(kernel, dtype=np.float64)
        total = kernel.sum()
        if not total > 0:
            raise MaskOpaqueError("PSF kernel has zero energy")
        return cls(kernel / total, depth_z=depth_z, mag=mag, mask_sensor_dist_mm=mask_sensor_dist_mm)

    @classmethod
    def impulse(cls, n_y: int = 1, n_x: int = 1, depth_z: float = float("inf")) -> "Psf":
        """Delta kernel placed where convolve-then-center-crop leaves an image in place"""
        kernel = np.zeros((n_y, n_x))
        kernel[(n_y - 1) // 2, (n_x - 1) // 2] = 1.0
        return cls(kernel, depth_z=depth_z)

    def sidecar(self) -> Dict[str, Any]:
        return {
            "depth_cm": float(self.depth_z),
            "mask_sensor_dist_mm": None if self.mask_sensor_dist_mm is None else float(self.mask_sensor_dist_mm),
            "mag": float(self.mag),
        }


def magnification(depth_z: float, mask_sensor_dist_mm: float = MASK_SENSOR_DIST_MM) -> float:
    """
    Shadow magnification of a point source at depth_z.

    Args:
        depth_z: Source-to-mask distance in cm
        mask_sensor_dist_mm: Mask-to-sensor distance in mm

    Returns:
        (z + d) / z
    """
    if not depth_z > 0:
        raise InvalidParameterError(f"depth must be positive, got {depth_z}")
    if not mask_sensor_dist_mm > 0:
        raise InvalidParameterError(f"mask-sensor distance must be positive, got {mask_sensor_dist_mm}")
    z_mm = depth_z * 10.0
    return (z_mm + mask_sensor_dist_mm) / z_mm


def project_psf(mask: MaskImage, depth_z: float,
                mask_sensor_dist: float = MASK_SENSOR_DIST_MM,
                sensor_ny: Optional[int] = None, sensor_nx: Optional[int] = None,
                sensor_pitch: float = SENSOR_PITCH_UM) -> Psf:
    """
    Simulate the PSF of a point source as the magnified shadow of the mask.

    Diffraction is ignored. Each sensor pixel samples the mask bilinearly
    at its position divided by mag * mask_pitch / sensor_pitch.

    Args:
        mask: Coded mask
        depth_z: Source distance in cm
        mask_sensor_dist: Mask-to-sensor distance in mm
        sensor_ny: PSF grid height (defaults to the mask height)
        sensor_nx: PSF grid width (defaults to the mask width)
        sensor_pitch: Sensor pixel pitch in micrometers

    Returns:
        Unit-sum Psf tagged with depth and magnification
    """
    mag = magnification(depth_z, mask_sensor_dist)
    if not sensor_pitch > 0:
        raise InvalidParameterError(f"sensor pitch must be positive, got {sensor_pitch}")
    sensor_ny = mask.shape[0] if sensor_ny is None else sensor_ny
    sensor_nx = mask.shape[1] if sensor_nx is None else sensor_nx

    scale = mag * mask.pitch / sensor_pitch
    shadow_radius = aperture_radius_px(*mask.shape, mask.aperture_fraction) * scale
    if shadow_radius > min(sensor_ny, sensor_nx) / 2.0:
        raise SizingError(
            f"shadow radius {shadow_radius:.1f} px at z={depth_z} cm exceeds the "
            f"{sensor_ny}x{sensor_nx} PSF grid"
        )

    # Sensor pixel positions expressed in mask pixel coordinates
    dy, dx = pixel_offsets(sensor_ny, sensor_nx)
    c_y, c_x = (mask.shape[0] - 1) / 2.0, (mask.shape[1] - 1) / 2.0
    coords = np.stack([dy / scale + c_y, dx / scale + c_x])
    shadow = map_coordinates(mask.grid, coords, order=1, mode="constant", cval=0.0)
    shadow = np.clip(shadow, 0.0, None)

    total = shadow.sum()
    if not total > 0:
        raise MaskOpaqueError("mask shadow carries no light")
    logger.debug("PSF at z=%.3f cm: mag=%.6f, scale=%.6f", depth_z, mag, scale)
    return Psf(shadow / total, depth_z=depth_z, mag=mag, mask_sensor_dist_mm=mask_sensor_dist)


def psf_scale_mae(psf_a: Psf, psf_b: Psf) -> float:
    """
    Mean absolute error between two unit-normalized PSFs.

    Args:
        psf_a: First PSF
        psf_b: Second PSF on the same grid

    Returns:
        mean(|a - b|)
    """
    if psf_a.shape != psf_b.shape:
        raise DimensionMismatchError(f"PSF grids differ: {psf_a.shape} vs {psf_b.shape}")
    return float(np.mean(np.abs(psf_a.kernel - psf_b.kernel)))


@dataclass(frozen=True)
class Geometry:
    """
    Physical layout of the camera used to simulate PSFs.

    Attributes:
        mask_sensor_dist_mm: Mask-to-sensor distance
        sensor_pitch_um: Sensor pixel pitch
        psf_shape: PSF grid (rows, cols); None uses the mask grid
    """

    mask_sensor_dist_mm: float = MASK_SENSOR_DIST_MM
    sensor_pitch_um: float = SENSOR_PITCH_UM
    psf_shape: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if not self.mask_sensor_dist_mm > 0 or not self.sensor_pitch_um > 0:
            raise InvalidParameterError("geometry distances and pitches must be positive")
        if self.psf_shape is not None:
            object.__setattr__(self, "psf_shape", (int(self.psf_shape[0]), int(self.psf_shape[1])))

    def psf(self, mask: MaskImage, depth_z: float) -> Psf:
        """Project the mask shadow for a source at depth_z (cm)"""
        shape = self.psf_shape or mask.shape
        return project_psf(mask, depth_z, self.mask_sensor_dist_mm, shape[0], shape[1], self.sensor_pitch_um)
