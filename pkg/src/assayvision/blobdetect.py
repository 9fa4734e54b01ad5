"""Difference-of-Gaussians blob detection and contour extraction.

Coordinates exposed by this module are ``(x, y)`` with x the column and y the
row; arrays are still indexed ``[y, x]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy import ndimage

from .errors import InsufficientAssays, InvalidParams, InvalidSigma
from .imagecore import check_mask, check_rgb

DOG_SCALES = ("peak", "raw")

# clockwise in image coordinates (y grows downwards), starting west
_NEIGHBOURS = ((-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1))
_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class BlobParams:
    """DoG scales, blob threshold and the number of assays to keep.

    ``dog_scale="peak"`` rescales the DoG response so its largest positive
    value maps to 255 before ``t_blob`` is applied; ``"raw"`` thresholds the
    signed response as computed.
    """

    sigma1: float = 1.5
    sigma2: float = 3.0
    t_blob: float = 100.0
    expected_count: int = 4
    dog_scale: str = "peak"

    def __post_init__(self):
        for name in ("sigma1", "sigma2", "t_blob"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (0 < self.sigma1 < self.sigma2) or not math.isfinite(self.sigma2):
            raise InvalidParams(f"need 0 < sigma1 < sigma2, got {self.sigma1}, {self.sigma2}")
        if not math.isfinite(self.t_blob):
            raise InvalidParams("t_blob must be finite")
        if int(self.expected_count) != self.expected_count or self.expected_count < 1:
            raise InvalidParams(f"expected_count must be >= 1, got {self.expected_count}")
        if self.dog_scale not in DOG_SCALES:
            raise InvalidParams(f"dog_scale must be one of {DOG_SCALES}")


@dataclass(frozen=True)
class BoundingBox:
    x: int
    y: int
    w: int
    h: int

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.y, self.y + self.h), slice(self.x, self.x + self.w)

    def as_list(self) -> list[int]:
        return [self.x, self.y, self.w, self.h]


@dataclass(frozen=True, eq=False)
class Contour:
    """One connected foreground region.

    ``mask`` is the hole-filled region cropped to ``bbox``; ``boundary`` is the
    outer border as an ``(N, 2)`` array of ``(x, y)`` pixels in tracing order.
    """

    boundary: np.ndarray
    mask: np.ndarray
    bbox: BoundingBox
    filled_area: int
    centroid: tuple[float, float]


@dataclass(frozen=True)
class ContourSet:
    contours: list[Contour]
    shape: tuple[int, int]

    def __len__(self) -> int:
        return len(self.contours)

    def __iter__(self) -> Iterator[Contour]:
        return iter(self.contours)

    def __getitem__(self, i: int) -> Contour:
        return self.contours[i]


@dataclass(frozen=True)
class SquareCrop:
    image: np.ndarray
    rect: BoundingBox
    clamped: bool = field(default=False)


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    if not sigma > 0 or not math.isfinite(sigma):
        raise InvalidSigma(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _correlate_axis(img: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    r = len(kernel) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (r, r)
    padded = np.pad(img, pad, mode="edge")
    n = img.shape[axis]
    # accumulate offsets from the centre pixel so flat regions come out exact
    out = img.astype(np.float64, copy=True)
    for i, w in enumerate(kernel):
        if i != r:
            out += w * (np.take(padded, np.arange(i, i + n), axis=axis) - img)
    return out


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with radius ceil(3 sigma) and replicated edges."""
    kernel = gaussian_kernel1d(sigma)
    data = np.asarray(img, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {data.shape}")
    return _correlate_axis(_correlate_axis(data, kernel, 1), kernel, 0)


def difference_of_gaussians(img: np.ndarray, p: BlobParams) -> np.ndarray:
    return gaussian_blur(img, p.sigma1) - gaussian_blur(img, p.sigma2)


def scale_dog(dog: np.ndarray, p: BlobParams) -> np.ndarray:
    """Put the DoG response on the scale ``t_blob`` is expressed in."""
    if p.dog_scale == "raw":
        return dog
    peak = float(dog.max())
    if peak <= 0:
        return dog
    return dog * (255.0 / peak)


def threshold_blobs(dog: np.ndarray, p: BlobParams) -> np.ndarray:
    return (np.asarray(dog) > p.t_blob).astype(np.uint8)


def trace_boundary(mask: np.ndarray) -> list[tuple[int, int]]:
    """Moore-neighbour trace of the outer border of a single 8-connected region.

    Returns ``(x, y)`` pairs relative to ``mask``, starting at the top-most,
    left-most pixel and running clockwise.
    """
    h, w = mask.shape
    ys, xs = np.nonzero(mask)
    if len(ys) == 0:
        return []
    start = (int(xs[0]), int(ys[0]))

    def fg(x: int, y: int) -> bool:
        return 0 <= x < w and 0 <= y < h and bool(mask[y, x])

    def step(cur: tuple[int, int], back: int) -> tuple[tuple[int, int], int] | None:
        for i in range(1, 9):
            d = (back + i) % 8
            nx, ny = cur[0] + _NEIGHBOURS[d][0], cur[1] + _NEIGHBOURS[d][1]
            if fg(nx, ny):
                bx = cur[0] + _NEIGHBOURS[(d - 1) % 8][0] - nx
                by = cur[1] + _NEIGHBOURS[(d - 1) % 8][1] - ny
                return (nx, ny), _NEIGHBOURS.index((bx, by))
        return None

    # the west neighbour of the first raster pixel is always background
    first = step(start, 0)
    if first is None:
        return [start]
    boundary = [start]
    cur, back = first
    while True:
        nxt = step(cur, back)
        if cur == start and nxt[0] == first[0]:
            break
        boundary.append(cur)
        cur, back = nxt
    return boundary


def find_contours(mask: np.ndarray) -> ContourSet:
    """One contour per 8-connected component, holes filled, in label order."""
    mask = check_mask(mask)
    labels, n = ndimage.label(mask, structure=_EIGHT)
    contours = []
    for lab, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        region = ndimage.binary_fill_holes(labels[sl] == lab).astype(np.uint8)
        y0, x0 = sl[0].start, sl[1].start
        bbox = BoundingBox(x0, y0, sl[1].stop - x0, sl[0].stop - y0)
        ys, xs = np.nonzero(region)
        boundary = np.array(trace_boundary(region), dtype=np.int64).reshape(-1, 2)
        boundary += (x0, y0)
        contours.append(
            Contour(
                boundary=boundary,
                mask=region,
                bbox=bbox,
                filled_area=int(len(ys)),
                centroid=(float(xs.mean()) + x0, float(ys.mean()) + y0),
            )
        )
    return ContourSet(contours, mask.shape)


def select_top_k(cs: ContourSet, p: BlobParams) -> ContourSet:
    """Keep the ``expected_count`` largest contours by filled area."""
    k = p.expected_count
    if len(cs) < k:
        raise InsufficientAssays(len(cs), k)
    ranked = sorted(cs, key=lambda c: (-c.filled_area, c.centroid[1], c.centroid[0]))
    return ContourSet(ranked[:k], cs.shape)


def order_contours(cs: ContourSet) -> ContourSet:
    """Row-major canonical order: rows top to bottom, left to right inside a row.

    Two centroids share a row when their y distance to the row's first
    (top-most) centroid is at most the largest bounding-box height in the set.
    """
    if len(cs) == 0:
        return cs
    tol = max(c.bbox.h for c in cs)
    rows: list[list[Contour]] = []
    for c in sorted(cs, key=lambda c: (c.centroid[1], c.centroid[0])):
        if rows and abs(c.centroid[1] - rows[-1][0].centroid[1]) <= tol:
            rows[-1].append(c)
        else:
            rows.append([c])
    ordered = [c for row in rows for c in sorted(row, key=lambda c: (c.centroid[0], c.centroid[1]))]
    return ContourSet(ordered, cs.shape)


def contour_mask(c: Contour, shape: Sequence[int]) -> np.ndarray:
    out = np.zeros(tuple(shape[:2]), dtype=np.uint8)
    out[c.bbox.slices] = c.mask
    return out


def crop_assay(img: np.ndarray, c: Contour) -> np.ndarray:
    """Bounding-box crop with every pixel outside the contour zeroed."""
    img = check_rgb(img)
    return img[c.bbox.slices] * c.mask[..., None]


def crop_encompassing_square(img: np.ndarray, cs: ContourSet, margin: int = 10) -> SquareCrop:
    """Smallest square holding every bounding box plus ``margin``, clamped to the image."""
    img = check_rgb(img)
    if len(cs) == 0:
        raise ValueError("cannot crop around an empty contour set")
    x0 = min(c.bbox.x for c in cs)
    y0 = min(c.bbox.y for c in cs)
    x1 = max(c.bbox.x + c.bbox.w for c in cs)
    y1 = max(c.bbox.y + c.bbox.h for c in cs)
    side = max(x1 - x0, y1 - y0) + 2 * margin
    sx = x0 + ((x1 - x0) - side) // 2
    sy = y0 + ((y1 - y0) - side) // 2
    h, w = img.shape[:2]
    cx0, cy0 = max(sx, 0), max(sy, 0)
    cx1, cy1 = min(sx + side, w), min(sy + side, h)
    rect = BoundingBox(cx0, cy0, cx1 - cx0, cy1 - cy0)
    clamped = (cx0, cy0, cx1, cy1) != (sx, sy, sx + side, sy + side)
    return SquareCrop(img[rect.slices].copy(), rect, clamped)


def detect_contours(masked_gray: np.ndarray, p: BlobParams) -> tuple[np.ndarray, np.ndarray, ContourSet]:
    """DoG, threshold and contour extraction; returns (scaled DoG, blob mask, contours)."""
    dog = scale_dog(difference_of_gaussians(masked_gray, p), p)
    blobs = threshold_blobs(dog, p)
    return dog, blobs, find_contours(blobs)
