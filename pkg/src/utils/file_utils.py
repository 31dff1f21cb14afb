"""
File formats and provenance for pipeline artifacts.

PFM holds lossless float32 images, PNG holds previews (8-bit through
Pillow, 16-bit through pypng), JSON holds configs, sidecars and reports,
CSV holds traces and profiles.
"""
import hashlib
import json
import logging
import os
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd
import png
from PIL import Image

from config.config import TOOL_NAME, TOOL_VERSION
from src.errors import InvalidParameterError
from src.imaging.scene import as_channels

logger = logging.getLogger(__name__)

SIDECAR_SUFFIX = ".json"


def ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(config: Dict[str, Any]) -> str:
    """sha256 of the canonical JSON form of a config"""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def provenance(config: Dict[str, Any], seed: Optional[int]) -> Dict[str, Any]:
    return {
        "config_hash": config_hash(config),
        "seed": seed,
        "tool": TOOL_NAME,
        "tool_version": TOOL_VERSION,
    }


def save_json(data: Dict[str, Any], path: str) -> None:
    """Write JSON with sorted keys so reruns produce identical bytes"""
    ensure_parent(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def load_json(path: str) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def sidecar_path(path: str) -> str:
    return path + SIDECAR_SUFFIX


def write_sidecar(path: str, config: Dict[str, Any], seed: Optional[int],
                  extra: Optional[Dict[str, Any]] = None) -> str:
    """
    Record provenance next to a binary artifact.

    Args:
        path: Artifact path; the sidecar is written to path + ".json"
        config: Configuration that produced the artifact
        seed: Seed used, if any
        extra: Additional fields (normalization, depth, ...)

    Returns:
        Path of the sidecar
    """
    data = provenance(config, seed)
    data["artifact"] = os.path.basename(path)
    if extra:
        data.update(extra)
    target = sidecar_path(path)
    save_json(data, target)
    return target


def save_csv(frame: pd.DataFrame, path: str) -> None:
    ensure_parent(path)
    frame.to_csv(path, index=False, lineterminator="\n")


# PFM
def save_pfm(image: np.ndarray, path: str) -> None:
    """
    Write a little-endian float32 PFM.

    Args:
        image: (H, W) grayscale, or (C, H, W) / (H, W, 3) color
        path: Output path
    """
    channels = as_channels(image)
    if channels.shape[0] == 1:
        header, data = "Pf", channels[0]
    elif channels.shape[0] == 3:
        header, data = "PF", np.moveaxis(channels, 0, -1)
    else:
        raise InvalidParameterError(f"PFM stores 1 or 3 channels, got {channels.shape[0]}")
    height, width = data.shape[:2]
    ensure_parent(path)
    with open(path, "wb") as f:
        # negative scale marks little-endian data
        f.write(f"{header}\n{width} {height}\n-1.0\n".encode("ascii"))
        f.write(np.flipud(data).astype("<f4").tobytes())


def load_pfm(path: str) -> np.ndarray:
    """
    Read a PFM file.

    Returns:
        Float64 array of shape (C, H, W)
    """
    with open(path, "rb") as f:
        header = f.readline().decode("ascii").strip()
        if header not in ("Pf", "PF"):
            raise InvalidParameterError(f"{path} is not a PFM file")
        width, height = (int(token) for token in f.readline().decode("ascii").split())
        scale = float(f.readline().decode("ascii").strip())
        dtype = "<f4" if scale < 0 else ">f4"
        n_channels = 3 if header == "PF" else 1
        data = np.frombuffer(f.read(), dtype=dtype, count=width * height * n_channels)
    data = np.flipud(data.reshape(height, width, n_channels)).astype(np.float64)
    return np.moveaxis(data, -1, 0)


# PNG
def _to_unit(channels: np.ndarray) -> Tuple[np.ndarray, float]:
    peak = float(channels.max())
    scale = peak if peak > 0 else 1.0
    return np.clip(channels / scale, 0.0, 1.0), scale


def save_png(image: np.ndarray, path: str, bit_depth: int = 8, normalize: bool = True) -> float:
    """
    Write an image as 8- or 16-bit PNG.

    Args:
        image: (H, W), (C, H, W) or (H, W, C) with 1 or 3 channels
        path: Output path
        bit_depth: 8 (Pillow) or 16 (pypng)
        normalize: Scale to unit maximum first; otherwise values are clipped to [0, 1]

    Returns:
        Normalization constant that maps stored values back to the input
    """
    channels = as_channels(image)
    if channels.shape[0] not in (1, 3):
        raise InvalidParameterError(f"PNG export needs 1 or 3 channels, got {channels.shape[0]}")
    if normalize:
        unit, scale = _to_unit(channels)
    else:
        unit, scale = np.clip(channels, 0.0, 1.0), 1.0
    pixels = np.moveaxis(unit, 0, -1)
    ensure_parent(path)

    if bit_depth == 8:
        data = np.round(pixels * 255.0).astype(np.uint8)
        mode = "L" if data.shape[-1] == 1 else "RGB"
        Image.fromarray(data[..., 0] if mode == "L" else data).save(path)
    elif bit_depth == 16:
        data = np.round(pixels * 65535.0).astype(np.uint16)
        height, width, n_channels = data.shape
        writer = png.Writer(width, height, greyscale=n_channels == 1, bitdepth=16)
        with open(path, "wb") as f:
            writer.write(f, data.reshape(height, width * n_channels).tolist())
    else:
        raise InvalidParameterError(f"bit depth must be 8 or 16, got {bit_depth}")
    return scale


def load_png(path: str) -> np.ndarray:
    """
    Read an 8- or 16-bit PNG.

    Returns:
        Float64 array of shape (C, H, W) with values in [0, 1]
    """
    width, height, rows, info = png.Reader(filename=path).asDirect()
    planes = info["planes"]
    data = np.vstack([np.asarray(row, dtype=np.float64) for row in rows]).reshape(height, width, planes)
    data /= float(2 ** info["bitdepth"] - 1)
    if info.get("alpha"):
        data = data[..., :-1]
    return np.moveaxis(data, -1, 0)


def load_image(path: str) -> np.ndarray:
    """
    Read a PFM, PNG or any other Pillow-readable image.

    Returns:
        Float64 array of shape (C, H, W)
    """
    extension = os.path.splitext(path)[1].lower()
    if extension == ".pfm":
        return load_pfm(path)
    if extension == ".png":
        return load_png(path)
    with Image.open(path) as img:
        data = np.asarray(img.convert("L" if img.mode == "L" else "RGB"), dtype=np.float64)
    return as_channels(data / 255.0)


def save_image(image: np.ndarray, path: str, bit_depth: int = 8, normalize: bool = True) -> Dict[str, Any]:
    """
    Write an image by extension (.pfm lossless, .png normalized).

    Transmittance grids pass normalize=False so that 255 stays transmittance 1.

    Returns:
        Fields to record in the sidecar
    """
    if path.lower().endswith(".pfm"):
        save_pfm(image, path)
        return {"format": "pfm"}
    scale = save_png(image, path, bit_depth=bit_depth, normalize=normalize)
    return {"format": "png", "bit_depth": bit_depth, "normalization": scale}
