"""
Radial mask parameterization: one raw value per angular section.
"""
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from scipy.special import expit

from config.config import APERTURE_FRACTION, MASK_PITCH_UM
from src.errors import InvalidParameterError
from src.masks.mask_image import MaskImage, aperture_mask, check_grid, pixel_offsets


@dataclass(frozen=True)
class RadialMaskParams:
    """
    Dimensionally-reduced radial mask vector.

    Attributes:
        raw_values: Pre-sigmoid transmittance of each angular section
        n_sections: Number of angular sections
    """

    raw_values: np.ndarray
    n_sections: int

    def __post_init__(self):
        raw = np.array(self.raw_values, dtype=np.float64).reshape(-1)
        if self.n_sections < 1:
            raise InvalidParameterError(f"n_sections must be positive, got {self.n_sections}")
        if raw.size != self.n_sections:
            raise InvalidParameterError(
                f"expected {self.n_sections} raw values, got {raw.size}"
            )
        if not np.all(np.isfinite(raw)):
            raise InvalidParameterError("raw values must be finite")
        raw.setflags(write=False)
        object.__setattr__(self, "raw_values", raw)

    @classmethod
    def from_values(cls, raw_values) -> "RadialMaskParams":
        raw = np.asarray(raw_values, dtype=np.float64).reshape(-1)
        return cls(raw, raw.size)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RadialMaskParams":
        return cls(np.asarray(data["raw_values"], dtype=np.float64), int(data["n_sections"]))

    def to_dict(self) -> Dict[str, Any]:
        return {"n_sections": int(self.n_sections), "raw_values": [float(v) for v in self.raw_values]}

    def rolled(self, shift: int = 1) -> "RadialMaskParams":
        """Rotate the pattern by `shift` sections"""
        return RadialMaskParams(np.roll(self.raw_values, shift), self.n_sections)


def transmittance(params: RadialMaskParams) -> np.ndarray:
    """
    Section transmittances in (0, 1).

    Args:
        params: Radial mask parameters

    Returns:
        Logistic sigmoid of every raw value
    """
    return expit(params.raw_values)


def section_index_map(n_y: int, n_x: int, n_sections: int,
                      aperture_fraction: Optional[float] = None) -> np.ndarray:
    """
    Assign every pixel to an angular section.

    The polar angle of a pixel around the optical axis is wrapped to
    [0, 2*pi) and binned into n_sections equal wedges. The exact center
    pixel of an odd grid falls in section 0.

    Args:
        n_y: Grid height in pixels
        n_x: Grid width in pixels
        n_sections: Number of wedges
        aperture_fraction: When given, pixels outside the aperture get -1

    Returns:
        Integer array of section indices
    """
    check_grid(n_y, n_x)
    if n_sections < 1:
        raise InvalidParameterError(f"n_sections must be positive, got {n_sections}")
    dy, dx = pixel_offsets(n_y, n_x)
    phi = np.mod(np.arctan2(dy, dx), 2.0 * math.pi)
    index = np.floor(phi * n_sections / (2.0 * math.pi)).astype(np.int64)
    # angles that round up to 2*pi belong to the last wedge
    index = np.minimum(index, n_sections - 1)
    if aperture_fraction is not None:
        index = np.where(aperture_mask(n_y, n_x, aperture_fraction), index, -1)
    return index


def section_areas(n_y: int, n_x: int, n_sections: int,
                  aperture_fraction: float = APERTURE_FRACTION) -> np.ndarray:
    """Number of in-aperture pixels in each section"""
    index = section_index_map(n_y, n_x, n_sections, aperture_fraction)
    return np.bincount(index[index >= 0], minlength=n_sections)


def realize_radial(params: RadialMaskParams, n_y: int, n_x: int,
                   aperture_fraction: float = APERTURE_FRACTION,
                   pitch: float = MASK_PITCH_UM) -> MaskImage:
    """
    Map section transmittances onto a Cartesian grid.

    Args:
        params: Radial mask parameters
        n_y: Grid height in pixels
        n_x: Grid width in pixels
        aperture_fraction: Relative diameter of the unshielded disk
        pitch: Mask pixel pitch in micrometers

    Returns:
        MaskImage whose in-aperture pixels carry their section's transmittance
    """
    index = section_index_map(n_y, n_x, params.n_sections)
    values = transmittance(params)[index]
    return MaskImage.shielded(values, pitch=pitch, aperture_fraction=aperture_fraction)
