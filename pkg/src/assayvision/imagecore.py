"""Pixel raster conventions, color conversions and PNG I/O.

Images are plain numpy arrays, indexed ``[y, x]``:

* RGB image   -- ``uint8`` array of shape ``(H, W, 3)``, channels stored R, G, B
* HSV image   -- ``uint8`` array of shape ``(H, W, 3)``; H on [0, 179], S and V on [0, 255]
* gray image  -- ``uint8`` array of shape ``(H, W)``
* float image -- ``float64`` array of shape ``(H, W)``, finite values only
* binary mask -- ``uint8`` array of shape ``(H, W)`` holding exactly 0 or 1
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DimensionMismatch, ImageIOError, UnsupportedFormat

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"

# BT.601 luma, in thousandths
GRAY_WEIGHTS = (299, 587, 114)


def round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def check_rgb(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"expected an (H, W, 3) RGB image, got shape {img.shape}")
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 RGB data, got {img.dtype}")
    return img


def check_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"expected a 2-D mask, got shape {mask.shape}")
    if mask.dtype == bool:
        return mask.astype(np.uint8)
    if not np.isin(mask, (0, 1)).all():
        raise ValueError("mask values must be exactly 0 or 1")
    return mask.astype(np.uint8, copy=False)


def rgb_to_hsv(img: np.ndarray) -> np.ndarray:
    """Convert an RGB image to 8-bit HSV with hue halved onto [0, 179].

    Values are computed in floating point and rounded half away from zero.
    Achromatic pixels (R == G == B) get H = 0 and S = 0; V is always max(R, G, B).
    """
    rgb = check_rgb(img).astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = rgb.max(axis=2)
    delta = v - rgb.min(axis=2)

    chroma = delta > 0
    safe = np.where(chroma, delta, 1.0)
    h = np.where(
        v == r,
        60.0 * (g - b) / safe,
        np.where(v == g, 120.0 + 60.0 * (b - r) / safe, 240.0 + 60.0 * (r - g) / safe),
    )
    h = np.where(chroma, np.mod(h, 360.0), 0.0)
    s = np.where(v > 0, 255.0 * delta / np.where(v > 0, v, 1.0), 0.0)

    h8 = round_half_away(h / 2.0)
    h8[h8 >= 180] = 0  # 359.x degrees rounds up to 180 -> wraps to red
    out = np.empty(rgb.shape, dtype=np.uint8)
    out[..., 0] = h8
    out[..., 1] = np.clip(round_half_away(s), 0, 255)
    out[..., 2] = v
    return out


def rgb_to_gray(img: np.ndarray) -> np.ndarray:
    """BT.601 luma, round(0.299 R + 0.587 G + 0.114 B) with halves rounded up."""
    rgb = check_rgb(img).astype(np.int32)
    wr, wg, wb = GRAY_WEIGHTS
    # integer arithmetic keeps the .5 ties exact
    luma = (wr * rgb[..., 0] + wg * rgb[..., 1] + wb * rgb[..., 2] + 500) // 1000
    return np.clip(luma, 0, 255).astype(np.uint8)


def apply_mask(img: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Zero every pixel of ``img`` where ``mask`` is 0."""
    img = check_rgb(img)
    mask = check_mask(mask)
    if img.shape[:2] != mask.shape:
        raise DimensionMismatch(f"image {img.shape[:2]} vs mask {mask.shape}")
    return img * mask[..., None]


def _png_header(path: Path) -> tuple[int, int]:
    """Return (bit depth, color type) from the PNG IHDR chunk."""
    with open(path, "rb") as fh:
        head = fh.read(33)
    if len(head) < 33 or not head.startswith(PNG_SIGNATURE) or head[12:16] != b"IHDR":
        raise UnsupportedFormat(f"{path} is not a PNG file")
    bit_depth, color_type = struct.unpack(">BB", head[24:26])
    return bit_depth, color_type


def load_image(path: str | Path) -> np.ndarray:
    """Read an 8-bit PNG as an RGB array.

    Alpha is dropped, grayscale is expanded to three channels and palette
    images are expanded through their palette. 16-bit and sub-byte grayscale
    files raise :class:`UnsupportedFormat`.
    """
    path = Path(path)
    try:
        bit_depth, color_type = _png_header(path)
    except OSError as exc:
        raise ImageIOError(f"cannot read {path}: {exc}") from exc

    # color type 3 is palette; indices may be packed below 8 bits
    if bit_depth != 8 and not (color_type == 3 and bit_depth in (1, 2, 4)):
        raise UnsupportedFormat(f"{path}: {bit_depth}-bit PNG is not supported")

    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("P", "PA", "LA", "RGBA", "L"):
                im = im.convert("RGB")
            if im.mode != "RGB":
                raise UnsupportedFormat(f"{path}: unsupported PNG mode {im.mode}")
            return np.array(im, dtype=np.uint8)
    except UnsupportedFormat:
        raise
    except OSError as exc:
        raise ImageIOError(f"cannot decode {path}: {exc}") from exc


def save_image(img: np.ndarray, path: str | Path) -> None:
    img = check_rgb(img)
    try:
        Image.fromarray(img).save(path, format="PNG")
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc}") from exc


def save_gray(gray: np.ndarray, path: str | Path) -> None:
    try:
        Image.fromarray(np.asarray(gray, dtype=np.uint8)).save(path, format="PNG")
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc}") from exc


def save_mask(mask: np.ndarray, path: str | Path) -> None:
    """Write a binary mask as an 8-bit grayscale PNG with values {0, 255}."""
    save_gray(check_mask(mask) * 255, path)
