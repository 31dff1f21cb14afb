"""
Planar multi-depth scenes.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.errors import InvalidParameterError


def as_channels(image: np.ndarray) -> np.ndarray:
    """
    Bring an image to channel-first layout.

    Args:
        image: (H, W), (H, W, C) with C in {1, 3} or already (C, H, W)

    Returns:
        Float array of shape (C, H, W)
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        return image[None, :, :]
    if image.ndim == 3 and image.shape[-1] in (1, 3) and image.shape[0] not in (1, 3):
        return np.moveaxis(image, -1, 0)
    if image.ndim == 3:
        return image
    raise InvalidParameterError(f"unsupported image shape {image.shape}")


@dataclass(frozen=True)
class SceneLayer:
    """A planar intensity image at one depth (cm)"""

    depth_z: float
    image: np.ndarray


class Scene:
    """
    Ordered set of planar layers summed incoherently at the sensor.

    Args:
        layers: Sequence of (depth in cm, image) pairs; images share one shape
    """

    def __init__(self, layers: Sequence[Tuple[float, np.ndarray]]):
        if not layers:
            raise InvalidParameterError("a scene needs at least one layer")
        built: List[SceneLayer] = []
        for depth, image in layers:
            if not depth > 0:
                raise InvalidParameterError(f"layer depth must be positive, got {depth}")
            channels = as_channels(image)
            if not np.all(np.isfinite(channels)) or channels.min() < 0:
                raise InvalidParameterError(f"layer at {depth} cm has negative or non-finite intensities")
            channels.setflags(write=False)
            built.append(SceneLayer(float(depth), channels))
        depths = [layer.depth_z for layer in built]
        if len(set(depths)) != len(depths):
            raise InvalidParameterError(f"layer depths must be distinct, got {depths}")
        shapes = {layer.image.shape for layer in built}
        if len(shapes) != 1:
            raise InvalidParameterError(f"all layers must share one shape, got {sorted(shapes)}")
        self.layers = built

    @property
    def depths(self) -> List[float]:
        return [layer.depth_z for layer in self.layers]

    @property
    def n_channels(self) -> int:
        return self.layers[0].image.shape[0]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.layers[0].image.shape[1:]

    def layer(self, depth_z: float) -> SceneLayer:
        for layer in self.layers:
            if np.isclose(layer.depth_z, depth_z):
                return layer
        raise KeyError(f"no layer at {depth_z} cm")

    def flattened(self) -> np.ndarray:
        """All layers summed, as an all-in-focus reference image"""
        return np.sum([layer.image for layer in self.layers], axis=0)

    def region_of(self, depth_z: float) -> Optional[Tuple[slice, slice]]:
        """
        Bounding box of a layer's nonzero support.

        Args:
            depth_z: Layer depth in cm

        Returns:
            (row slice, column slice), or None for an all-dark layer
        """
        support = np.any(self.layer(depth_z).image > 0, axis=0)
        rows = np.flatnonzero(support.any(axis=1))
        cols = np.flatnonzero(support.any(axis=0))
        if rows.size == 0:
            return None
        return slice(int(rows[0]), int(rows[-1]) + 1), slice(int(cols[0]), int(cols[-1]) + 1)
