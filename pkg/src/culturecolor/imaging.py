"""Image ingest helpers: decoding, grayscale conversion, and resizing."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image

from culturecolor.colors import rgb_to_lab


def decode_image(data: bytes) -> np.ndarray:
    """PNG/JPEG bytes to (H, W, 3) float RGB in [0, 1]."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            return np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    except Exception as exc:
        raise ValueError(f"cannot decode image: {exc}") from exc


def load_image(path: str | Path) -> np.ndarray:
    return decode_image(Path(path).read_bytes())


def to_grayscale(rgb: np.ndarray) -> np.ndarray:
    """(H, W, 3) RGB to (H, W) normalized luminance (Lab L / 100)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[-1] != 3:
        raise ValueError(f"expected (H, W, 3) RGB array, got shape {rgb.shape}")
    return np.clip(rgb_to_lab(rgb)[..., 0] / 100.0, 0.0, 1.0)


def resize_gray(gray: np.ndarray, size: int | tuple[int, int]) -> np.ndarray:
    """Bilinear resize of a (H, W) grayscale array in [0, 1]."""
    gray = np.asarray(gray, dtype=np.float64)
    if gray.ndim != 2:
        raise ValueError(f"expected (H, W) grayscale array, got shape {gray.shape}")
    if isinstance(size, int):
        size = (size, size)
    img = Image.fromarray(np.clip(gray, 0.0, 1.0).astype(np.float32))
    resized = img.resize((size[1], size[0]), resample=Image.BILINEAR)
    return np.clip(np.asarray(resized, dtype=np.float64), 0.0, 1.0)


def resize_rgb(rgb: np.ndarray, size: int | tuple[int, int]) -> np.ndarray:
    """Bilinear resize of a (H, W, 3) RGB array in [0, 1], channel by channel."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[-1] != 3:
        raise ValueError(f"expected (H, W, 3) RGB array, got shape {rgb.shape}")
    return np.stack([resize_gray(rgb[..., i], size) for i in range(3)], axis=-1)


def upscale_nearest(plane: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbor upscale of a (h, w) or (h, w, C) array to ``shape``."""
    plane = np.asarray(plane, dtype=np.float64)
    rows = np.floor(np.arange(shape[0]) * plane.shape[0] / shape[0]).astype(int)
    cols = np.floor(np.arange(shape[1]) * plane.shape[1] / shape[1]).astype(int)
    return plane[rows][:, cols]


def encode_png(rgb_uint8: np.ndarray) -> bytes:
    """(H, W, 3) uint8 RGB to PNG bytes."""
    buf = io.BytesIO()
    Image.fromarray(rgb_uint8, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def gray_to_png(gray: np.ndarray) -> bytes:
    """(H, W) floats in [0, 1] to an 8-bit grayscale PNG."""
    buf = io.BytesIO()
    arr = (np.clip(np.asarray(gray, dtype=np.float64), 0.0, 1.0) * 255.0).round().astype(np.uint8)
    Image.fromarray(arr, mode="L").save(buf, format="PNG")
    return buf.getvalue()
