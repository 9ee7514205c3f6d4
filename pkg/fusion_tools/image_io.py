"""PNG ingestion of RGB/IR pairs and PNG output of fused images and diagnostics."""

import logging
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import InputError, ShapeError
from .tensor import DTYPE, Tensor4

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
MAX_BYTE = 255.0


def _open(path: PathLike) -> Image.Image:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"image file not found: {path}")
    try:
        with Image.open(path) as image:
            image.load()
            if image.width == 0 or image.height == 0:
                raise InputError(f"image has zero dimensions: {path}")
            return image.copy()
    except (UnidentifiedImageError, OSError, SyntaxError) as err:
        raise InputError(f"cannot decode image {path}: {err}") from err


def _rgb_planes(image: Image.Image, path: PathLike) -> np.ndarray:
    if image.mode == "P":
        image = image.convert("RGB")
    if image.mode not in ("RGB", "RGBA"):
        raise InputError(f"expected an 8-bit RGB image, got mode {image.mode}: {path}")
    pixels = np.asarray(image, dtype=np.float64)[..., :3]
    return (pixels / MAX_BYTE).transpose(2, 0, 1)


def _ir_plane(image: Image.Image, path: PathLike) -> np.ndarray:
    if image.mode == "P":
        image = image.convert("RGB")
    if image.mode == "L":
        pixels = np.asarray(image, dtype=np.float64)
    elif image.mode in ("RGB", "RGBA"):
        # three-channel thermal exports are collapsed by their channel mean
        pixels = np.asarray(image, dtype=np.float64)[..., :3].mean(axis=-1)
    else:
        raise InputError(f"expected an 8-bit grayscale or RGB IR image, got mode {image.mode}: {path}")
    return (pixels / MAX_BYTE)[None]


def _resize(planes: np.ndarray, size: int) -> np.ndarray:
    """Bilinear resize of (C, H, W) float planes to (C, size, size); no-op at the target size."""
    if planes.shape[1:] == (size, size):
        return planes.astype(DTYPE)
    resized = [
        np.asarray(
            Image.fromarray(plane.astype(np.float32)).resize(
                (size, size), resample=Image.Resampling.BILINEAR
            ),
            dtype=np.float32,
        )
        for plane in planes
    ]
    return np.stack(resized).astype(DTYPE)


def load_pair(rgb_path: PathLike, ir_path: PathLike, size: int) -> Tensor4:
    """Read a registered RGB/IR pair as a (1, 4, size, size) tensor in [0, 1], ordered [R, G, B, IR].

    Raises:
        InputError: a file is missing, cannot be decoded, has zero dimensions
            or an unsupported mode. The message names the path.
    """
    if size < 1:
        raise ShapeError(f"size must be >= 1, got {size}")
    rgb = _rgb_planes(_open(rgb_path), rgb_path)
    ir = _ir_plane(_open(ir_path), ir_path)
    if rgb.shape[1:] != ir.shape[1:]:
        logger.info("RGB %s and IR %s differ in size; both are resized", rgb.shape[1:], ir.shape[1:])
    pair = np.concatenate([_resize(rgb, size), _resize(ir, size)], axis=0)
    return pair[None].astype(DTYPE)


def to_bytes(values: np.ndarray) -> np.ndarray:
    """Quantise [0, 1] values to uint8 with round-half-up."""
    scaled = np.floor(np.asarray(values, dtype=np.float64) * MAX_BYTE + 0.5)
    return np.clip(scaled, 0, MAX_BYTE).astype(np.uint8)


def _save(image: Image.Image, path: PathLike):
    path = Path(path)
    try:
        image.save(path, format="PNG")
    except (OSError, ValueError) as err:
        raise InputError(f"cannot write {path}: {err}") from err


def save_fused(t: Tensor4, path: PathLike):
    """Write a (1, 3, H, W) tensor in [0, 1] as an 8-bit RGB PNG."""
    t = np.asarray(t)
    if t.ndim != 4 or t.shape[:2] != (1, 3):
        raise ShapeError(f"save_fused expects a (1, 3, H, W) tensor, got {t.shape}")
    _save(Image.fromarray(np.ascontiguousarray(to_bytes(t[0]).transpose(1, 2, 0))), path)


def save_gray(plane: np.ndarray, path: PathLike, normalize: bool = True):
    """Write an (H, W) plane as an 8-bit grayscale PNG, min-max stretched when `normalize`."""
    values = np.asarray(plane, dtype=np.float64)
    if values.ndim != 2:
        raise ShapeError(f"save_gray expects an (H, W) plane, got {values.shape}")
    if normalize:
        low, high = float(values.min()), float(values.max())
        values = (values - low) / (high - low) if high > low else np.zeros_like(values)
    _save(Image.fromarray(to_bytes(values)), path)
