"""
Mask construction from a declarative description.
"""
import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Tuple

from config.config import APERTURE_FRACTION, FZA_ZONES, MASK_PITCH_UM, N_SECTIONS, RANDOM_DENSITY
from src.errors import InvalidParameterError
from src.masks.baselines import default_fza_beta, gen_fza, gen_random, gen_star_chart
from src.masks.mask_image import MaskImage, binarize
from src.masks.radial import RadialMaskParams, realize_radial

logger = logging.getLogger(__name__)

MASK_KINDS = ("radial", "star", "fza", "random", "impulse")


@dataclass(frozen=True)
class MaskSpec:
    """
    Which mask to build and with what parameters.

    Attributes:
        kind: One of MASK_KINDS; "impulse" stands for an ideal pinhole
        label: Name used for outputs (defaults to kind)
        sections: Section count of radial masks and star charts
        params_file: JSON file with optimized radial parameters
        optimize: Optimization settings used when no params_file is given
        density: Open fraction of random masks
        beta: FZA constant in micrometers (None picks one fitting `zones` rings)
        zones: Ring pairs of the default FZA
        binarize: Threshold the realized mask to {0, 1}
    """

    kind: str
    label: Optional[str] = None
    sections: int = N_SECTIONS
    params_file: Optional[str] = None
    optimize: Optional[Dict[str, Any]] = None
    density: float = RANDOM_DENSITY
    beta: Optional[float] = None
    zones: int = FZA_ZONES
    binarize: bool = False

    def __post_init__(self):
        if self.kind not in MASK_KINDS:
            raise InvalidParameterError(f"unknown mask kind {self.kind!r}; choose from {MASK_KINDS}")
        if self.label is None:
            object.__setattr__(self, "label", self.kind)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MaskSpec":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidParameterError(f"unknown mask settings: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def build_mask(spec: MaskSpec, shape: Tuple[int, int], seed: int,
               params: Optional[RadialMaskParams] = None,
               pitch: float = MASK_PITCH_UM,
               aperture_fraction: float = APERTURE_FRACTION) -> MaskImage:
    """
    Realize a mask on a grid.

    Args:
        spec: Mask description; "impulse" has no mask image and is rejected
        shape: Grid (rows, cols)
        seed: Seed for random masks
        params: Radial parameters, required for kind "radial"
        pitch: Mask pixel pitch in micrometers
        aperture_fraction: Relative diameter of the unshielded disk

    Returns:
        MaskImage
    """
    n_y, n_x = shape
    if spec.kind == "radial":
        if params is None:
            raise InvalidParameterError("radial masks need parameters")
        mask = realize_radial(params, n_y, n_x, aperture_fraction, pitch)
    elif spec.kind == "star":
        mask = gen_star_chart(spec.sections, n_y, n_x, aperture_fraction, pitch)
    elif spec.kind == "fza":
        beta = spec.beta if spec.beta is not None else default_fza_beta(n_y, n_x, pitch, aperture_fraction, spec.zones)
        mask = gen_fza(beta, n_y, n_x, aperture_fraction, pitch)
    elif spec.kind == "random":
        mask = gen_random(spec.density, seed, n_y, n_x, aperture_fraction, pitch)
    else:
        raise InvalidParameterError("impulse masks have no mask image")
    logger.debug("built %s mask %dx%d, mean transmittance %.3f", spec.label, n_y, n_x, mask.mean_transmittance)
    return binarize(mask) if spec.binarize else mask
