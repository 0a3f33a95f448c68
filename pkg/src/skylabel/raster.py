"""8-bit RGB raster I/O and normalized-box pixel cropping.

Images are numpy arrays of shape (height, width, 3), dtype uint8, row-major.
PNG is the only on-disk format; alpha channels are dropped on read.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from PIL import Image

from .labels import NormBox


def ensure_rgb8(img: np.ndarray) -> np.ndarray:
    if not isinstance(img, np.ndarray) or img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("image must be an (H, W, 3) array")
    if img.dtype != np.uint8:
        raise ValueError(f"image must be uint8, got {img.dtype}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be non-empty")
    return img


def read_png(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def write_png(img: np.ndarray, path: str | Path) -> None:
    ensure_rgb8(img)
    Image.fromarray(img, "RGB").save(Path(path), format="PNG")


def png_size(path: str | Path) -> tuple[int, int]:
    """(width, height) from the PNG header without decoding pixel data."""
    with Image.open(path) as im:
        return im.size


def crop_rect(box: NormBox, width: int, height: int) -> tuple[int, int, int, int]:
    """Pixel rectangle (x0, y0, x1, y1) covered by ``box`` on a width x height image.

    Floor on the min edge and ceil on the max edge, so boundary pixels are
    never lost; the result is clamped to the image. Raises if the clamped
    rectangle is empty.
    """
    x0 = math.floor((box.cx - box.w / 2.0) * width)
    x1 = math.ceil((box.cx + box.w / 2.0) * width)
    y0 = math.floor((box.cy - box.h / 2.0) * height)
    y1 = math.ceil((box.cy + box.h / 2.0) * height)
    x0, x1 = max(x0, 0), min(x1, width)
    y0, y1 = max(y0, 0), min(y1, height)
    if x0 >= x1 or y0 >= y1:
        raise ValueError(f"box {box} lies entirely outside a {width}x{height} image")
    return (x0, y0, x1, y1)


def extract_crop(img: np.ndarray, box: NormBox) -> np.ndarray:
    """Cut the pixel rectangle of ``box`` out of ``img`` (always >= 1x1)."""
    ensure_rgb8(img)
    h, w = img.shape[:2]
    x0, y0, x1, y1 = crop_rect(box, w, h)
    return img[y0:y1, x0:x1].copy()
