"""Per-assay channel means, base-to-exposed deltas and the full analysis pass."""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field

import numpy as np

from .blobdetect import (
    BlobParams,
    BoundingBox,
    ContourSet,
    SquareCrop,
    crop_assay,
    crop_encompassing_square,
    detect_contours,
    order_contours,
    select_top_k,
)
from .errors import EmptyMask, InsufficientAssays, InvalidParams
from .imagecore import apply_mask, check_mask, check_rgb, rgb_to_gray, rgb_to_hsv
from .segmentation import SegmentationParams, clean_mask, threshold_hsv

CHANNELS = ("blue", "green", "red")


@dataclass(frozen=True)
class ChannelMeans:
    blue: float
    green: float
    red: float

    @classmethod
    def from_rgb(cls, rgb) -> "ChannelMeans":
        r, g, b = (float(v) for v in rgb)
        return cls(blue=b, green=g, red=r)

    def as_dict(self) -> dict[str, float]:
        return {"blue": self.blue, "green": self.green, "red": self.red}


@dataclass(frozen=True)
class AssayMeasurement:
    index: int
    centroid: tuple[float, float]
    filled_area: int
    bbox: BoundingBox
    means: ChannelMeans


@dataclass(frozen=True)
class AssayDelta:
    index: int
    delta_blue: float
    delta_green: float
    delta_red: float

    def as_dict(self) -> dict[str, float]:
        return {"blue": self.delta_blue, "green": self.delta_green, "red": self.delta_red}


@dataclass(frozen=True)
class AssayResult:
    index: int
    base: AssayMeasurement
    exposed: AssayMeasurement
    delta: AssayDelta


@dataclass(frozen=True)
class PipelineParams:
    segmentation: SegmentationParams = field(default_factory=SegmentationParams)
    blob: BlobParams = field(default_factory=BlobParams)
    crop_margin: int = 10

    def __post_init__(self):
        if int(self.crop_margin) != self.crop_margin or self.crop_margin < 0:
            raise InvalidParams(f"crop_margin must be a non-negative integer, got {self.crop_margin}")

    def as_dict(self) -> dict:
        d = asdict(self)
        seg = d["segmentation"]
        seg["lower_hsv"] = list(seg["lower_hsv"])
        seg["upper_hsv"] = list(seg["upper_hsv"])
        return d


@dataclass
class AnalysisReport:
    assays: list[AssayResult]
    params: PipelineParams
    inputs: dict
    warnings: list[str] = field(default_factory=list)


@dataclass
class Detection:
    """Every intermediate raster of one detection pass, for inspection."""

    yellow_mask: np.ndarray
    clean_mask: np.ndarray
    masked: np.ndarray
    gray: np.ndarray
    dog: np.ndarray
    blob_mask: np.ndarray
    contours: ContourSet


def masked_channel_means(crop: np.ndarray, mask: np.ndarray) -> ChannelMeans:
    """Mean of each channel over pixels where ``mask`` is 1.

    Pixels are selected by the mask alone, so a true-black pixel inside the
    region still counts towards the mean.
    """
    crop = check_rgb(crop)
    mask = check_mask(mask)
    if crop.shape[:2] != mask.shape:
        raise ValueError(f"crop {crop.shape[:2]} vs mask {mask.shape}")
    n = int(mask.sum())
    if n == 0:
        raise EmptyMask("contour mask selects no pixels")
    sel = crop[mask.astype(bool)].astype(np.int64)
    r, g, b = sel.sum(axis=0)
    return ChannelMeans(blue=float(b) / n, green=float(g) / n, red=float(r) / n)


def channel_delta(base: ChannelMeans, exposed: ChannelMeans, index: int = 0) -> AssayDelta:
    return AssayDelta(
        index=index,
        delta_blue=exposed.blue - base.blue,
        delta_green=exposed.green - base.green,
        delta_red=exposed.red - base.red,
    )


def run_detection(img: np.ndarray, params: PipelineParams) -> Detection:
    img = check_rgb(img)
    yellow = threshold_hsv(rgb_to_hsv(img), params.segmentation)
    cleaned = clean_mask(yellow, params.segmentation)
    masked = apply_mask(img, cleaned)
    gray = rgb_to_gray(masked)
    dog, blobs, contours = detect_contours(gray, params.blob)
    return Detection(yellow, cleaned, masked, gray, dog, blobs, contours)


def locate_assays(
    img: np.ndarray, params: PipelineParams, name: str | None = None
) -> tuple[ContourSet, list[str]]:
    """Detect, keep the largest ``expected_count`` regions and order them canonically."""
    found = run_detection(img, params).contours
    try:
        kept = select_top_k(found, params.blob)
    except InsufficientAssays as exc:
        raise InsufficientAssays(exc.found, exc.expected, name) from None
    warnings = []
    if len(found) > len(kept):
        warnings.append(f"{name or 'image'}: {len(found)} regions found, kept the {len(kept)} largest")
    return order_contours(kept), warnings


def measure(img: np.ndarray, contours: ContourSet) -> list[AssayMeasurement]:
    out = []
    for i, c in enumerate(contours, start=1):
        means = masked_channel_means(crop_assay(img, c), c.mask)
        out.append(AssayMeasurement(i, c.centroid, c.filled_area, c.bbox, means))
    return out


def image_digest(img: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(repr(img.shape).encode())
    h.update(np.ascontiguousarray(img).tobytes())
    return h.hexdigest()


def analyze_pair(
    base: np.ndarray,
    exposed: np.ndarray,
    params: PipelineParams | None = None,
    inputs: dict | None = None,
) -> AnalysisReport:
    """Detect the assays in both captures and report channel means and deltas.

    Means are taken from the original images under each contour's filled mask;
    the yellow mask only drives detection. ``inputs`` overrides the default
    input description (a digest of each image's pixels).
    """
    params = params or PipelineParams()
    base, exposed = check_rgb(base), check_rgb(exposed)
    warnings: list[str] = []
    squares: dict[str, SquareCrop] = {}
    measured = {}
    for name, img in (("base", base), ("exposed", exposed)):
        contours, warns = locate_assays(img, params, name)
        warnings.extend(warns)
        square = crop_encompassing_square(img, contours, params.crop_margin)
        if square.clamped:
            warnings.append(f"{name}: assay square crop clamped to image bounds {square.rect.as_list()}")
        squares[name] = square
        measured[name] = measure(img, contours)

    assays = [
        AssayResult(b.index, b, e, channel_delta(b.means, e.means, b.index))
        for b, e in zip(measured["base"], measured["exposed"])
    ]
    if inputs is None:
        inputs = {"base": {"sha256": image_digest(base)}, "exposed": {"sha256": image_digest(exposed)}}
    inputs = {k: dict(v) for k, v in inputs.items()}
    for name, square in squares.items():
        inputs.setdefault(name, {})["square_crop"] = {
            "rect": square.rect.as_list(),
            "clamped": square.clamped,
        }
    return AnalysisReport(assays=assays, params=params, inputs=inputs, warnings=warnings)
