"""Colorimetric swab-assay analysis: detect four assay discs in base and
wound-exposed captures and report per-channel intensity changes."""

from .blobdetect import BlobParams, Contour, ContourSet
from .errors import (
    AssayVisionError,
    DimensionMismatch,
    EmptyMask,
    ImageIOError,
    InsufficientAssays,
    InvalidParams,
    InvalidSigma,
    InvalidSpec,
    UnsupportedFormat,
)
from .imagecore import load_image, save_image, save_mask
from .quantify import AnalysisReport, ChannelMeans, PipelineParams, analyze_pair
from .segmentation import SegmentationParams
from .synthgen import SceneSpec, default_spec, generate_pair

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "AssayVisionError",
    "BlobParams",
    "ChannelMeans",
    "Contour",
    "ContourSet",
    "DimensionMismatch",
    "EmptyMask",
    "ImageIOError",
    "InsufficientAssays",
    "InvalidParams",
    "InvalidSigma",
    "InvalidSpec",
    "PipelineParams",
    "SceneSpec",
    "SegmentationParams",
    "UnsupportedFormat",
    "analyze_pair",
    "default_spec",
    "generate_pair",
    "load_image",
    "save_image",
    "save_mask",
]
