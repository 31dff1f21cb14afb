"""
Digital refocusing: reconstruct one measurement under PSFs scaled for several depths.
"""
import logging
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple

from tqdm import tqdm

from config.config import SHOW_PROGRESS
from src.errors import InvalidParameterError
from src.imaging.forward import SensorMeasurement
from src.masks.mask_image import MaskImage
from src.optics.psf import Geometry
from src.reconstruction.admm import AdmmConfig, Reconstruction, admm_solve

logger = logging.getLogger(__name__)


def refocus_sweep(b: SensorMeasurement, mask: MaskImage, depths: Sequence[float], cfg: AdmmConfig,
                  geometry: Optional[Geometry] = None, scene_dims: Optional[Tuple[int, int]] = None,
                  progress: bool = SHOW_PROGRESS) -> List[Tuple[float, Reconstruction]]:
    """
    Run one reconstruction per assumed depth.

    Args:
        b: Sensor measurement
        mask: Mask the measurement was captured with
        depths: Assumed source depths in cm
        cfg: Solver settings; psf_depth_cm is overridden per depth
        geometry: Camera layout used to project the PSFs
        scene_dims: Size of the reconstructed scene

    Returns:
        List of (depth, Reconstruction) in the order of `depths`
    """
    if len(depths) == 0:
        raise InvalidParameterError("refocus needs at least one depth")
    geometry = geometry or Geometry()
    results = []
    for depth in tqdm(depths, desc="refocus", disable=not progress):
        logger.info("Refocusing at %.2f cm", depth)
        psf = geometry.psf(mask, depth)
        recon = admm_solve(b, psf, replace(cfg, psf_depth_cm=float(depth)), scene_dims=scene_dims,
                           progress=False)
        results.append((float(depth), recon))
    return results
