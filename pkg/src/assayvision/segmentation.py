"""Yellow-band HSV thresholding and binary morphology."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidParams
from .imagecore import check_mask

MORPH_ORDERS = ("open-close", "close-open")


@dataclass(frozen=True)
class SegmentationParams:
    """HSV band and structuring-element size for the yellow assay mask.

    ``morph_order`` selects whether the opening runs before the closing
    (the default) or after it.
    """

    lower_hsv: tuple[int, int, int] = (20, 150, 150)
    upper_hsv: tuple[int, int, int] = (30, 255, 255)
    kernel_size: int = 5
    morph_order: str = "open-close"

    def __post_init__(self):
        lower = tuple(int(v) for v in self.lower_hsv)
        upper = tuple(int(v) for v in self.upper_hsv)
        object.__setattr__(self, "lower_hsv", lower)
        object.__setattr__(self, "upper_hsv", upper)
        if len(lower) != 3 or len(upper) != 3:
            raise InvalidParams("HSV bounds must be (H, S, V) triplets")
        limits = (179, 255, 255)
        for lo, hi, top in zip(lower, upper, limits):
            if not 0 <= lo <= top or not 0 <= hi <= top:
                raise InvalidParams(f"HSV bound out of range: {lower} / {upper}")
            if lo > hi:
                # also rules out hue ranges wrapping through 179 -> 0
                raise InvalidParams(f"lower bound {lower} exceeds upper bound {upper}")
        if int(self.kernel_size) != self.kernel_size or self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise InvalidParams(f"kernel_size must be a positive odd integer, got {self.kernel_size}")
        if self.morph_order not in MORPH_ORDERS:
            raise InvalidParams(f"morph_order must be one of {MORPH_ORDERS}")


def threshold_hsv(hsv: np.ndarray, p: SegmentationParams) -> np.ndarray:
    """1 where every channel lies inside [lower, upper], bounds inclusive."""
    hsv = np.asarray(hsv)
    lower = np.array(p.lower_hsv, dtype=np.int32)
    upper = np.array(p.upper_hsv, dtype=np.int32)
    inside = (hsv >= lower) & (hsv <= upper)
    return inside.all(axis=2).astype(np.uint8)


def _window_reduce(mask: np.ndarray, k: int, reduce) -> np.ndarray:
    if k % 2 == 0 or k < 1:
        raise InvalidParams(f"kernel size must be a positive odd integer, got {k}")
    mask = check_mask(mask)
    r = k // 2
    # outside the image counts as 0 for both operations
    padded = np.pad(mask, r, mode="constant", constant_values=0)
    # square window is separable: reduce along rows, then columns
    rows = reduce(sliding_window_view(padded, k, axis=1), axis=-1)
    return reduce(sliding_window_view(rows, k, axis=0), axis=-1).astype(np.uint8)


def erode(mask: np.ndarray, kernel_size: int) -> np.ndarray:
    return _window_reduce(mask, kernel_size, np.min)


def dilate(mask: np.ndarray, kernel_size: int) -> np.ndarray:
    return _window_reduce(mask, kernel_size, np.max)


def opening(mask: np.ndarray, kernel_size: int) -> np.ndarray:
    return dilate(erode(mask, kernel_size), kernel_size)


def closing(mask: np.ndarray, kernel_size: int) -> np.ndarray:
    return erode(dilate(mask, kernel_size), kernel_size)


def clean_mask(mask: np.ndarray, p: SegmentationParams) -> np.ndarray:
    """Remove specks (opening) then fill small gaps (closing).

    The composition runs on a zero canvas padded by ``kernel_size`` so the
    intermediate dilation is not truncated at the image frame. Without this a
    region touching the border would be eroded by the closing and the filter
    would stop being idempotent.
    """
    k = p.kernel_size
    pad = k
    canvas = np.pad(check_mask(mask), pad, mode="constant", constant_values=0)
    if p.morph_order == "close-open":
        out = opening(closing(canvas, k), k)
    else:
        out = closing(opening(canvas, k), k)
    return out[pad:-pad, pad:-pad]
