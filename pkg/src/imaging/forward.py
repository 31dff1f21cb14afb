"""
Convolve-and-crop forward model, its adjoint, and multi-depth capture.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import fft

from src.errors import DimensionMismatchError, InvalidParameterError, MissingPsfError
from src.imaging.scene import Scene
from src.optics.psf import Psf

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NoiseModel:
    """Optional sensor noise; both terms default to off"""

    gaussian_sigma: float = 0.0
    poisson_scale: Optional[float] = None

    def __post_init__(self):
        if self.gaussian_sigma < 0:
            raise InvalidParameterError(f"gaussian_sigma must be nonnegative, got {self.gaussian_sigma}")
        if self.poisson_scale is not None and not self.poisson_scale > 0:
            raise InvalidParameterError(f"poisson_scale must be positive, got {self.poisson_scale}")


@dataclass(frozen=True)
class SensorMeasurement:
    """
    Cropped sensor image.

    Attributes:
        channels: Array of shape (C, H, W), nonnegative
        bit_depth: Bit depth used when exporting to PNG
    """

    channels: np.ndarray
    bit_depth: int = 16

    def __post_init__(self):
        channels = np.array(self.channels, dtype=np.float64)
        if channels.ndim == 2:
            channels = channels[None]
        if channels.ndim != 3:
            raise InvalidParameterError(f"measurement must be (C, H, W), got shape {channels.shape}")
        if not np.all(np.isfinite(channels)) or channels.min() < 0:
            raise InvalidParameterError("measurement values must be finite and nonnegative")
        channels.setflags(write=False)
        object.__setattr__(self, "channels", channels)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.channels.shape[1:]

    @property
    def n_channels(self) -> int:
        return self.channels.shape[0]


def full_shape(image_shape: Tuple[int, int], kernel_shape: Tuple[int, int]) -> Tuple[int, int]:
    return image_shape[0] + kernel_shape[0] - 1, image_shape[1] + kernel_shape[1] - 1


def convolve_fft(image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """
    Full linear convolution through zero-padded FFTs.

    Args:
        image: 2D array
        kernel: 2D array

    Returns:
        Array of shape (H_i + H_k - 1, W_i + W_k - 1)
    """
    image = np.asarray(image, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    if image.size == 0 or kernel.size == 0:
        raise InvalidParameterError("convolution inputs must be non-empty")
    # scalar kernels are an exact gain
    if kernel.size == 1:
        return image * kernel[0, 0]
    out_shape = full_shape(image.shape, kernel.shape)
    fast = tuple(fft.next_fast_len(n, real=True) for n in out_shape)
    product = fft.rfft2(image, s=fast) * fft.rfft2(kernel, s=fast)
    return fft.irfft2(product, s=fast)[: out_shape[0], : out_shape[1]]


def crop_window(full: Tuple[int, int], ny: int, nx: int) -> Tuple[slice, slice]:
    """Central window; the extra row/column of an odd difference is dropped from the high side"""
    if ny > full[0] or nx > full[1] or ny < 1 or nx < 1:
        raise DimensionMismatchError(f"cannot crop {ny}x{nx} from {full[0]}x{full[1]}")
    top = (full[0] - ny) // 2
    left = (full[1] - nx) // 2
    return slice(top, top + ny), slice(left, left + nx)


def crop_center(full: np.ndarray, ny: int, nx: int) -> np.ndarray:
    """
    Central ny x nx window of a 2D array.

    Args:
        full: 2D array
        ny: Window height
        nx: Window width

    Returns:
        Cropped copy
    """
    rows, cols = crop_window(full.shape, ny, nx)
    return np.array(full[rows, cols])


def pad_adjoint(window: np.ndarray, full: Tuple[int, int]) -> np.ndarray:
    """
    Adjoint of crop_center: place the window back into a zero array.

    Args:
        window: Cropped 2D array
        full: Shape of the uncropped array

    Returns:
        Zero-padded array of shape `full`
    """
    rows, cols = crop_window(full, *window.shape)
    out = np.zeros(full)
    out[rows, cols] = window
    return out


def forward_apply(v: np.ndarray, psf: Psf, sensor_dims: Tuple[int, int]) -> np.ndarray:
    """
    Apply A = crop o convolve to one channel.

    Args:
        v: Scene channel
        psf: PSF of the scene plane
        sensor_dims: (ny, nx) of the sensor crop

    Returns:
        Sensor-plane image
    """
    return crop_center(convolve_fft(v, psf.kernel), *sensor_dims)


def forward_adjoint(b: np.ndarray, psf: Psf, scene_dims: Tuple[int, int]) -> np.ndarray:
    """
    Apply A^T = correlate o zero-pad to one channel.

    Args:
        b: Sensor-plane image
        psf: PSF used by the forward operator
        scene_dims: (H, W) of the scene plane

    Returns:
        Scene-plane image
    """
    k_y, k_x = psf.shape
    full = full_shape(scene_dims, psf.shape)
    if b.shape[0] > full[0] or b.shape[1] > full[1]:
        raise DimensionMismatchError(f"measurement {b.shape} larger than convolution support {full}")
    padded = pad_adjoint(np.asarray(b, dtype=np.float64), full)
    correlated = convolve_fft(padded, psf.kernel[::-1, ::-1])
    return correlated[k_y - 1: k_y - 1 + scene_dims[0], k_x - 1: k_x - 1 + scene_dims[1]]


def _psf_for(psfs: Dict[float, Psf], depth_z: float) -> Psf:
    if depth_z in psfs:
        return psfs[depth_z]
    for depth, psf in psfs.items():
        if np.isclose(depth, depth_z):
            return psf
    raise MissingPsfError(f"no PSF for scene depth {depth_z} cm")


def capture(scene: Scene, psfs: Dict[float, Psf], sensor_dims: Optional[Tuple[int, int]] = None,
            noise: Optional[NoiseModel] = None, seed: int = 0) -> SensorMeasurement:
    """
    Synthesize b = crop[sum_z h_z * v_z] for every color channel.

    Args:
        scene: Multi-depth scene
        psfs: PSF for each scene depth (cm); all on one grid
        sensor_dims: Crop size (defaults to the scene size)
        noise: Optional noise model, off by default
        seed: Seed of the noise generator

    Returns:
        Nonnegative SensorMeasurement
    """
    sensor_dims = scene.shape if sensor_dims is None else tuple(sensor_dims)
    layer_psfs = [_psf_for(psfs, layer.depth_z) for layer in scene.layers]
    if len({psf.shape for psf in layer_psfs}) != 1:
        raise DimensionMismatchError("all PSFs of a capture must share one grid")

    channels = np.zeros((scene.n_channels,) + tuple(sensor_dims))
    for layer, psf in zip(scene.layers, layer_psfs):
        logger.debug("capturing layer at %.2f cm (mag %.5f)", layer.depth_z, psf.mag)
        for c in range(scene.n_channels):
            channels[c] += forward_apply(layer.image[c], psf, sensor_dims)
    # FFT round-off can leave tiny negatives
    channels = np.maximum(channels, 0.0)

    if noise is not None:
        rng = np.random.default_rng(seed)
        if noise.poisson_scale is not None:
            channels = rng.poisson(channels * noise.poisson_scale) / noise.poisson_scale
        if noise.gaussian_sigma > 0:
            channels = np.maximum(channels + rng.normal(0.0, noise.gaussian_sigma, channels.shape), 0.0)
    return SensorMeasurement(channels)
