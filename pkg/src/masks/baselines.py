"""
Reference masks the optimized radial mask is compared against:
star charts, Fresnel zone apertures and random binary masks.
"""
import math

import numpy as np

from config.config import APERTURE_FRACTION, FZA_ZONES, MASK_PITCH_UM
from src.errors import InvalidParameterError
from src.masks.mask_image import (
    MaskImage,
    aperture_radius_px,
    check_aperture_fraction,
    check_grid,
    pixel_offsets,
)
from src.masks.radial import section_index_map


def gen_star_chart(n_sections: int, n_y: int, n_x: int,
                   aperture_fraction: float = APERTURE_FRACTION,
                   pitch: float = MASK_PITCH_UM) -> MaskImage:
    """
    Binary star chart with alternating transparent and opaque wedges.

    Args:
        n_sections: Total number of wedges (even)
        n_y: Grid height in pixels
        n_x: Grid width in pixels
        aperture_fraction: Relative diameter of the unshielded disk
        pitch: Mask pixel pitch in micrometers

    Returns:
        MaskImage with wedge k transparent for even k
    """
    if n_sections < 2 or n_sections % 2 != 0:
        raise InvalidParameterError(f"star chart needs an even number of sections >= 2, got {n_sections}")
    index = section_index_map(n_y, n_x, n_sections)
    values = (index % 2 == 0).astype(np.float64)
    return MaskImage.shielded(values, pitch=pitch, aperture_fraction=aperture_fraction)


def default_fza_beta(n_y: int, n_x: int, pitch: float = MASK_PITCH_UM,
                     aperture_fraction: float = APERTURE_FRACTION, zones: int = FZA_ZONES) -> float:
    """
    Zone-plate constant that fits `zones` transparent/opaque ring pairs in the aperture.

    Args:
        n_y: Grid height in pixels
        n_x: Grid width in pixels
        pitch: Mask pixel pitch in micrometers
        aperture_fraction: Relative diameter of the unshielded disk
        zones: Number of full ring pairs

    Returns:
        beta in micrometers
    """
    if zones < 1:
        raise InvalidParameterError(f"zones must be positive, got {zones}")
    radius_um = aperture_radius_px(n_y, n_x, aperture_fraction) * pitch
    # cos(pi r^2 / beta^2) completes one period every 2 beta^2 in r^2
    return radius_um / math.sqrt(2.0 * zones)


def gen_fza(beta: float, n_y: int, n_x: int,
            aperture_fraction: float = APERTURE_FRACTION,
            pitch: float = MASK_PITCH_UM) -> MaskImage:
    """
    Binary Fresnel zone aperture.

    Args:
        beta: Zone-plate constant in micrometers
        n_y: Grid height in pixels
        n_x: Grid width in pixels
        aperture_fraction: Relative diameter of the unshielded disk
        pitch: Mask pixel pitch in micrometers

    Returns:
        MaskImage equal to 1 where cos(pi r^2 / beta^2) >= 0
    """
    if not beta > 0:
        raise InvalidParameterError(f"FZA beta must be positive, got {beta}")
    check_grid(n_y, n_x)
    dy, dx = pixel_offsets(n_y, n_x)
    r_squared = (dy ** 2 + dx ** 2) * pitch ** 2
    values = (np.cos(math.pi * r_squared / beta ** 2) >= 0.0).astype(np.float64)
    return MaskImage.shielded(values, pitch=pitch, aperture_fraction=aperture_fraction)


def gen_random(density: float, seed: int, n_y: int, n_x: int,
               aperture_fraction: float = APERTURE_FRACTION,
               pitch: float = MASK_PITCH_UM) -> MaskImage:
    """
    Random binary mask with i.i.d. Bernoulli(density) pixels.

    Args:
        density: Probability of a transparent pixel
        seed: Seed of the pixel generator
        n_y: Grid height in pixels
        n_x: Grid width in pixels
        aperture_fraction: Relative diameter of the unshielded disk
        pitch: Mask pixel pitch in micrometers

    Returns:
        MaskImage, deterministic for a given seed
    """
    if not 0.0 <= density <= 1.0:
        raise InvalidParameterError(f"density must lie in [0, 1], got {density}")
    check_grid(n_y, n_x)
    check_aperture_fraction(aperture_fraction)
    rng = np.random.default_rng(seed)
    values = (rng.random((n_y, n_x)) < density).astype(np.float64)
    return MaskImage.shielded(values, pitch=pitch, aperture_fraction=aperture_fraction)
