"""
Modulation transfer functions of PSFs and masks.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
import pandas as pd
from scipy import fft

from src.errors import InvalidParameterError, MaskOpaqueError

logger = logging.getLogger(__name__)

NYQUIST = 0.5  # cycles per pixel


@dataclass(frozen=True)
class MtfSpectrum:
    """
    DFT magnitude normalized by its zero-frequency value.

    Attributes:
        values: Unshifted 2D spectrum, (0, 0) is DC and equals 1
        dc_value_pre_norm: Magnitude of the DC term before normalization
    """

    values: np.ndarray
    dc_value_pre_norm: float

    @property
    def mean(self) -> float:
        return float(self.values.mean())


def mtf(kernel: np.ndarray) -> MtfSpectrum:
    """
    Compute the MTF of a 2D kernel.

    Args:
        kernel: PSF or mask transmittance grid

    Returns:
        MtfSpectrum with |DFT| / |DFT(0, 0)|
    """
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2:
        raise InvalidParameterError(f"kernel must be 2D, got shape {kernel.shape}")
    magnitude = np.abs(fft.fft2(kernel))
    dc = magnitude[0, 0]
    if dc == 0.0:
        raise MaskOpaqueError("kernel has zero DC response; MTF normalization undefined")
    return MtfSpectrum(values=magnitude / dc, dc_value_pre_norm=float(dc))


def mean_mtf(kernel: np.ndarray) -> float:
    """Average MTF over every frequency bin, DC included"""
    return mtf(kernel).mean


def radial_frequency(shape) -> np.ndarray:
    """Radial spatial frequency of every unshifted DFT bin as a fraction of Nyquist"""
    f_y = fft.fftfreq(shape[0])
    f_x = fft.fftfreq(shape[1])
    rho = np.hypot(f_y[:, None], f_x[None, :])
    return rho / NYQUIST


def radial_mtf_profile(spectrum: MtfSpectrum, n_bins: int = 32) -> pd.DataFrame:
    """
    Annular average of an MTF from DC up to Nyquist.

    Frequencies beyond Nyquist (the corners of the spectrum) are excluded.
    Empty bins report NaN.

    Args:
        spectrum: MTF to profile
        n_bins: Number of equal-width annuli between 0 and Nyquist

    Returns:
        DataFrame with columns freq_over_nyquist (bin centers) and mean_mtf
    """
    if n_bins < 2:
        raise InvalidParameterError(f"n_bins must be at least 2, got {n_bins}")
    frac = radial_frequency(spectrum.values.shape)
    inside = frac <= 1.0
    index = np.minimum(np.floor(frac[inside] * n_bins).astype(np.int64), n_bins - 1)
    counts = np.bincount(index, minlength=n_bins)
    sums = np.bincount(index, weights=spectrum.values[inside], minlength=n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    centers = (np.arange(n_bins) + 0.5) / n_bins
    return pd.DataFrame({"freq_over_nyquist": centers, "mean_mtf": means})


def mtf_comparison(kernels: Dict[str, np.ndarray], n_bins: int = 32) -> pd.DataFrame:
    """
    Radial MTF profiles of several kernels side by side.

    Args:
        kernels: Mapping of label to kernel (mask grids or PSFs)
        n_bins: Number of radial bins

    Returns:
        DataFrame indexed by bin with one column per label
    """
    frame: Optional[pd.DataFrame] = None
    for label, kernel in kernels.items():
        profile = radial_mtf_profile(mtf(kernel), n_bins).rename(columns={"mean_mtf": label})
        frame = profile if frame is None else frame.merge(profile, on="freq_over_nyquist")
        logger.info("mean MTF of %s: %.6f", label, mean_mtf(kernel))
    return frame


def plot_mtf_profiles(frame: pd.DataFrame, path: str, title: str = "Radial MTF") -> None:
    """
    Plot profiles produced by mtf_comparison or radial_mtf_profile.

    Args:
        frame: Profile table with a freq_over_nyquist column
        path: Output image path
        title: Figure title
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for column in frame.columns:
        if column == "freq_over_nyquist":
            continue
        ax.plot(frame["freq_over_nyquist"], frame[column], label=column)
    ax.set_xlabel("frequency / Nyquist")
    ax.set_ylabel("MTF")
    ax.set_yscale("log")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
