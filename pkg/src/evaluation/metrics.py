"""
PSNR, SSIM and MAE with per-channel averaging for color images.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from skimage.metrics import structural_similarity

from config.config import SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WIN_SIZE
from src.errors import DimensionMismatchError, GridSizeError, InvalidParameterError
from src.imaging.scene import as_channels

logger = logging.getLogger(__name__)

# PSNR of a zero-error pair
IDENTICAL = "identical"

PsnrValue = Union[float, str]


def _check_pair(a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"images differ in shape: {a.shape} vs {b.shape}")
    return a, b


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> PsnrValue:
    """
    Peak signal-to-noise ratio in dB.

    Args:
        a: Reference image
        b: Test image of the same shape
        peak: Peak signal value

    Returns:
        10 log10(peak^2 / MSE), or IDENTICAL when MSE is zero
    """
    a, b = _check_pair(a, b)
    if not peak > 0:
        raise InvalidParameterError(f"peak must be positive, got {peak}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return IDENTICAL
    return float(10.0 * np.log10(peak ** 2 / mse))


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """
    Mean SSIM of two single-channel images with an 11x11 Gaussian window.

    Args:
        a: First image, dynamic range 1.0
        b: Second image of the same shape

    Returns:
        Mean local SSIM
    """
    a, b = _check_pair(a, b)
    if a.ndim != 2:
        raise InvalidParameterError(f"ssim expects a single-channel 2D image, got shape {a.shape}")
    if min(a.shape) < SSIM_WIN_SIZE:
        raise GridSizeError(f"images smaller than the {SSIM_WIN_SIZE}x{SSIM_WIN_SIZE} SSIM window: {a.shape}")
    return float(structural_similarity(
        a, b,
        gaussian_weights=True,
        sigma=SSIM_SIGMA,
        use_sample_covariance=False,
        K1=SSIM_K1,
        K2=SSIM_K2,
        data_range=1.0,
    ))


def mae(a: np.ndarray, b: np.ndarray) -> float:
    a, b = _check_pair(a, b)
    return float(np.mean(np.abs(a - b)))


@dataclass(frozen=True)
class MetricReport:
    """
    Image-quality summary of one reconstruction.

    Attributes:
        psnr_db: PSNR in dB, or IDENTICAL
        ssim: Mean SSIM
        mae: Mean absolute error
    """

    psnr_db: PsnrValue
    ssim: float
    mae: float

    def to_dict(self) -> Dict[str, Any]:
        psnr_value = self.psnr_db if isinstance(self.psnr_db, str) else round(float(self.psnr_db), 6)
        return {"psnr_db": psnr_value, "ssim": round(float(self.ssim), 6), "mae": round(float(self.mae), 8)}


def match_gain(reference: np.ndarray, test: np.ndarray) -> np.ndarray:
    """Scale `test` by the least-squares gain that best fits `reference`"""
    energy = float(np.sum(test * test))
    if energy == 0.0:
        return test
    return test * (float(np.sum(reference * test)) / energy)


def evaluate(reference: np.ndarray, test: np.ndarray,
             region: Optional[Tuple[slice, slice]] = None,
             normalize: bool = True) -> MetricReport:
    """
    Compare a reconstruction against ground truth.

    With `normalize`, both images are divided by the reference maximum and
    the test image is matched to the reference by a least-squares gain
    inside the region. Color
    metrics are the mean of the per-channel values; a channel that matches
    exactly is left out of the PSNR average.

    Args:
        reference: Ground truth, (H, W), (H, W, C) or (C, H, W)
        test: Reconstruction of the same shape
        region: Optional (row slice, column slice) restricting the comparison
        normalize: Apply unit-max and gain matching first

    Returns:
        MetricReport
    """
    ref = as_channels(reference)
    out = as_channels(test)
    if ref.shape != out.shape:
        raise DimensionMismatchError(f"images differ in shape: {ref.shape} vs {out.shape}")
    if region is not None:
        ref = ref[:, region[0], region[1]]
        out = out[:, region[0], region[1]]
    if normalize:
        peak = float(ref.max())
        if peak > 0:
            ref = ref / peak
            out = out / peak
        out = match_gain(ref, out)

    psnrs = [psnr(r, t) for r, t in zip(ref, out)]
    finite = [value for value in psnrs if value != IDENTICAL]
    psnr_db: PsnrValue = float(np.mean(finite)) if finite else IDENTICAL
    ssim_value = float(np.mean([ssim(r, t) for r, t in zip(ref, out)]))
    mae_value = float(np.mean([mae(r, t) for r, t in zip(ref, out)]))
    logger.debug("metrics: psnr=%s ssim=%.4f mae=%.6f", psnr_db, ssim_value, mae_value)
    return MetricReport(psnr_db=psnr_db, ssim=ssim_value, mae=mae_value)
