"""
Scene manifests and the bundled procedural test charts.
"""
import logging
import os
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from PIL import Image, ImageDraw
from scipy.ndimage import gaussian_filter

from config.config import DESK_SHAPE, FAR_DEPTH_CM, NEAR_DEPTH_CM
from src.errors import InvalidParameterError
from src.imaging.scene import Scene, as_channels
from src.utils.file_utils import load_image, load_json

logger = logging.getLogger(__name__)

BUILTIN_PREFIX = "builtin:"
BUILTIN_CHARTS = ("ou", "toy")


def _half(shape: Tuple[int, int], side: str) -> Tuple[slice, slice]:
    """Left or right half of the frame with a small margin"""
    height, width = shape
    margin_y, margin_x = height // 8, width // 16
    half = width // 2
    if side == "left":
        return slice(margin_y, height - margin_y), slice(margin_x, half - margin_x // 2)
    return slice(margin_y, height - margin_y), slice(half + margin_x // 2, width - margin_x)


def draw_ou_chart(height: int, width: int) -> np.ndarray:
    """
    High-contrast two-glyph chart: a ring and a U drawn side by side.

    Args:
        height: Chart height in pixels
        width: Chart width in pixels

    Returns:
        (H, W) array with values in {0, 1}
    """
    if height < 8 or width < 16:
        raise InvalidParameterError(f"glyph chart needs at least 8x16 pixels, got {height}x{width}")
    img = Image.new("L", (width, height), 0)
    draw = ImageDraw.Draw(img)
    stroke = max(2, min(height, width) // 10)
    glyph_w = width // 2 - stroke
    top, bottom = stroke, height - stroke - 1

    # O
    draw.ellipse([stroke // 2, top, stroke // 2 + glyph_w - 1, bottom], outline=255, width=stroke)
    # U: two stems joined by a half ring
    left = width // 2 + stroke // 2
    right = left + glyph_w - 1
    bowl = (right - left) // 2
    draw.rectangle([left, top, left + stroke - 1, bottom - bowl], fill=255)
    draw.rectangle([right - stroke + 1, top, right, bottom - bowl], fill=255)
    draw.arc([left, bottom - 2 * bowl, right, bottom], start=0, end=180, fill=255, width=stroke)
    return (np.asarray(img, dtype=np.float64) > 127).astype(np.float64)


def draw_toy_chart(height: int, width: int, seed: int = 0) -> np.ndarray:
    """
    Textured natural-image stand-in: a smooth colored blob with stripes and grain.

    Args:
        height: Chart height in pixels
        width: Chart width in pixels
        seed: Seed of the grain texture

    Returns:
        (3, H, W) array with values in [0, 1]
    """
    if height < 8 or width < 8:
        raise InvalidParameterError(f"toy chart needs at least 8x8 pixels, got {height}x{width}")
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    c_y, c_x = (height - 1) / 2.0, (width - 1) / 2.0
    body = ((y - c_y) / (0.45 * height)) ** 2 + ((x - c_x) / (0.42 * width)) ** 2 <= 1.0
    head = ((y - 0.25 * height) / (0.2 * height)) ** 2 + ((x - c_x) / (0.25 * width)) ** 2 <= 1.0
    support = gaussian_filter((body | head).astype(np.float64), sigma=1.0)

    rng = np.random.default_rng(seed)
    grain = gaussian_filter(rng.random((height, width)), sigma=1.5)
    grain = (grain - grain.min()) / max(grain.max() - grain.min(), 1e-12)
    stripes = 0.5 + 0.5 * np.sin(2.0 * np.pi * (x + 0.5 * y) / 9.0)

    red = 0.55 + 0.35 * stripes
    green = 0.35 + 0.45 * grain
    blue = 0.25 + 0.25 * (1.0 - stripes) + 0.2 * grain
    chart = np.stack([red, green, blue]) * support
    return np.clip(chart, 0.0, 1.0)


def builtin_layer(name: str, shape: Tuple[int, int] = DESK_SHAPE) -> np.ndarray:
    """
    Full-frame image of a bundled chart placed in its own half of the field.

    The toy occupies the left half, the glyph chart the right half, so the
    two layers of a dual-depth scene never overlap.

    Args:
        name: "ou" or "toy"
        shape: Frame (rows, cols)

    Returns:
        (3, H, W) array
    """
    frame = np.zeros((3,) + tuple(shape))
    if name == "toy":
        rows, cols = _half(shape, "left")
        frame[:, rows, cols] = draw_toy_chart(rows.stop - rows.start, cols.stop - cols.start)
    elif name == "ou":
        rows, cols = _half(shape, "right")
        frame[:, rows, cols] = draw_ou_chart(rows.stop - rows.start, cols.stop - cols.start)
    else:
        raise InvalidParameterError(f"unknown builtin chart {name!r}; choose from {BUILTIN_CHARTS}")
    return frame


def dual_depth_scene(shape: Tuple[int, int] = DESK_SHAPE, far_depth: float = FAR_DEPTH_CM,
                     near_depth: float = NEAR_DEPTH_CM) -> Scene:
    """Toy chart far away, glyph chart close to the mask"""
    return Scene([(far_depth, builtin_layer("toy", shape)), (near_depth, builtin_layer("ou", shape))])


def _resize(channels: np.ndarray, shape: Tuple[int, int]) -> np.ndarray:
    if channels.shape[1:] == tuple(shape):
        return channels
    resized = [
        np.asarray(Image.fromarray(c.astype(np.float32)).resize((shape[1], shape[0]), Image.BILINEAR))
        for c in channels
    ]
    return np.clip(np.stack(resized).astype(np.float64), 0.0, None)


def _layer_image(ref: str, shape: Tuple[int, int], base_dir: str) -> np.ndarray:
    if ref.startswith(BUILTIN_PREFIX):
        return builtin_layer(ref[len(BUILTIN_PREFIX):], shape)
    path = ref if os.path.isabs(ref) else os.path.join(base_dir, ref)
    if not os.path.exists(path):
        raise InvalidParameterError(f"scene image not found: {path}")
    return _resize(as_channels(load_image(path)), shape)


def load_scene_manifest(manifest: Union[str, Dict[str, Any]], shape: Optional[Tuple[int, int]] = None,
                        base_dir: Optional[str] = None) -> Scene:
    """
    Build a Scene from a JSON manifest.

    The manifest looks like {"layers": [{"depth_cm": 30.0, "image": "toy.png"}, ...]}.
    Images are either paths (relative to the manifest) or "builtin:ou" /
    "builtin:toy". Every layer is resized to `shape`; grayscale layers are
    broadcast to RGB when mixed with color ones.

    Args:
        manifest: Path to the manifest or its parsed content
        shape: Scene (rows, cols); defaults to the desk-scale sensor
        base_dir: Directory for relative image paths

    Returns:
        Scene
    """
    if isinstance(manifest, str):
        base_dir = base_dir or os.path.dirname(os.path.abspath(manifest))
        manifest = load_json(manifest)
    base_dir = base_dir or os.getcwd()
    shape = tuple(shape) if shape is not None else DESK_SHAPE

    entries = manifest.get("layers")
    if not entries:
        raise InvalidParameterError("scene manifest has no layers")
    layers: List[Tuple[float, np.ndarray]] = []
    for entry in entries:
        try:
            depth, ref = float(entry["depth_cm"]), str(entry["image"])
        except KeyError as e:
            raise InvalidParameterError(f"scene layer missing field {e}") from e
        layers.append((depth, _layer_image(ref, shape, base_dir)))

    n_channels = max(image.shape[0] for _, image in layers)
    layers = [(depth, np.repeat(image, n_channels, axis=0) if image.shape[0] == 1 else image)
              for depth, image in layers]
    logger.info("Loaded scene with %d layers at %s cm", len(layers), [d for d, _ in layers])
    return Scene(layers)
