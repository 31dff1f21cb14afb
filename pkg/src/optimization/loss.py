"""
Negated mean-MTF loss of a radial mask and its analytic gradient.
"""
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy import fft
from scipy.special import expit

from config.config import EPS_MAG
from src.errors import InvalidParameterError, MaskOpaqueError
from src.masks.radial import RadialMaskParams, section_index_map
from src.optimization.types import OptimConfig


@lru_cache(maxsize=16)
def _cached_sections(n_y: int, n_x: int, n_sections: int, aperture_fraction: float) -> np.ndarray:
    index = section_index_map(n_y, n_x, n_sections, aperture_fraction)
    index.setflags(write=False)
    return index


def _realize(params: RadialMaskParams, cfg: OptimConfig) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if params.n_sections != cfg.n_sections:
        raise InvalidParameterError(f"params carry {params.n_sections} sections, config expects {cfg.n_sections}")
    index = _cached_sections(cfg.grid_ny, cfg.grid_nx, cfg.n_sections, cfg.aperture_fraction)
    section_values = expit(params.raw_values)
    # shielded pixels (index -1) stay opaque
    grid = np.where(index >= 0, section_values[np.maximum(index, 0)], 0.0)
    return grid, index, section_values


def mean_mtf_loss_and_gradient(grid: np.ndarray, eps_mag: float = EPS_MAG) -> Tuple[float, np.ndarray]:
    """
    Loss -mean(MTF(grid)) and its gradient with respect to every pixel.

    The DFT magnitude is smoothed as sqrt(re^2 + im^2 + eps_mag). The
    gradient includes the dependence of the DC normalizer on the grid.

    Args:
        grid: 2D transmittance grid
        eps_mag: Magnitude smoothing constant

    Returns:
        Tuple (loss, dloss/dgrid)
    """
    grid = np.asarray(grid, dtype=np.float64)
    n = grid.size
    spectrum = fft.fft2(grid)
    magnitude = np.sqrt(spectrum.real ** 2 + spectrum.imag ** 2 + eps_mag)
    dc = spectrum[0, 0].real
    if not dc > np.sqrt(eps_mag):
        raise MaskOpaqueError("realized mask transmits no light (DC term vanished)")
    dc_magnitude = magnitude[0, 0]
    total = magnitude.sum()
    loss = -total / (n * dc_magnitude)

    # d(sum |F|)/dM = N * Re(IDFT(F / |F|)); d|F(0)|/dM = F(0) / |F(0)| for every pixel
    d_total = n * fft.ifft2(spectrum / magnitude).real
    gradient = -(d_total / dc_magnitude - total * dc / dc_magnitude ** 3) / n
    return float(loss), gradient


def mean_mtf_loss(grid: np.ndarray, eps_mag: float = EPS_MAG) -> float:
    """Loss -mean(MTF(grid)) with smoothed magnitudes"""
    return mean_mtf_loss_and_gradient(grid, eps_mag)[0]


def loss(params: RadialMaskParams, cfg: OptimConfig) -> float:
    """
    Negated mean MTF of the realized radial mask.

    Args:
        params: Radial mask parameters
        cfg: Grid, aperture and smoothing settings

    Returns:
        Loss value in [-1, 0)
    """
    grid, _, _ = _realize(params, cfg)
    return mean_mtf_loss(grid, cfg.eps_mag)


def loss_and_gradient(params: RadialMaskParams, cfg: OptimConfig) -> Tuple[float, np.ndarray]:
    """
    Loss and its exact gradient with respect to the raw section values.

    Args:
        params: Radial mask parameters
        cfg: Grid, aperture and smoothing settings

    Returns:
        Tuple (loss, gradient of length n_sections)
    """
    grid, index, section_values = _realize(params, cfg)
    value, pixel_gradient = mean_mtf_loss_and_gradient(grid, cfg.eps_mag)
    inside = index >= 0
    # adjoint of the section-to-pixel mapping
    section_gradient = np.bincount(index[inside], weights=pixel_gradient[inside], minlength=cfg.n_sections)
    return value, section_gradient * section_values * (1.0 - section_values)


def loss_gradient(params: RadialMaskParams, cfg: OptimConfig) -> np.ndarray:
    """Gradient of `loss` with respect to the raw section values"""
    return loss_and_gradient(params, cfg)[1]
