"""Pipeline configuration files.

A config is a YAML (or JSON) mapping::

    segmentation:
      lower_hsv: [20, 150, 150]
      upper_hsv: [30, 255, 255]
      kernel_size: 5
      morph_order: open-close
    blob:
      sigma1: 1.5
      sigma2: 3.0
      t_blob: 100
      expected_count: 4
      dog_scale: peak
    crop_margin: 10
    output:
      format: json
      overlay: false
      figures: true
      out_dir: .

Every key is optional; omitted keys keep their defaults, unknown keys are an
error.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from .blobdetect import BlobParams
from .errors import AssayVisionError, InvalidParams
from .quantify import PipelineParams
from .segmentation import SegmentationParams

ENV_VAR = "ASSAYVISION_CONFIG"
FORMATS = ("json", "csv")


class ConfigError(AssayVisionError, ValueError):
    pass


@dataclass(frozen=True)
class OutputOptions:
    format: str = "json"
    overlay: bool = False
    figures: bool = True
    out_dir: str = "."

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ConfigError(f"output.format must be one of {FORMATS}, got {self.format!r}")
        for name in ("overlay", "figures"):
            if not isinstance(getattr(self, name), bool):
                raise ConfigError(f"output.{name} must be true or false")


@dataclass(frozen=True)
class Config:
    params: PipelineParams = field(default_factory=PipelineParams)
    output: OutputOptions = field(default_factory=OutputOptions)


def _section(cls, data, where: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")
    try:
        return cls(**data)
    except (InvalidParams, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid {where}: {exc}") from exc


def config_from_dict(data: dict | None) -> Config:
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(data) - {"segmentation", "blob", "crop_margin", "output"}
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {sorted(unknown)}")
    seg = _section(SegmentationParams, data.get("segmentation"), "segmentation")
    blob = _section(BlobParams, data.get("blob"), "blob")
    output = _section(OutputOptions, data.get("output"), "output")
    try:
        params = PipelineParams(seg, blob, data.get("crop_margin", 10))
    except (InvalidParams, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return Config(params, output)


def config_to_dict(cfg: Config) -> dict:
    d = cfg.params.as_dict()
    d["output"] = asdict(cfg.output)
    return d


def load_config(path: str | Path | None = None) -> Config:
    """Read ``path``, or the file named by ``$ASSAYVISION_CONFIG``, or return defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is None:
        return Config()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return config_from_dict(data)


def dump_config(cfg: Config) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)


def override(cfg: Config, **changes) -> Config:
    """Apply CLI-style overrides; ``None`` values are ignored.

    Recognised keys: any SegmentationParams / BlobParams / OutputOptions field,
    plus ``crop_margin``.
    """
    changes = {k: v for k, v in changes.items() if v is not None}
    seg_keys = {f.name for f in fields(SegmentationParams)}
    blob_keys = {f.name for f in fields(BlobParams)}
    out_keys = {f.name for f in fields(OutputOptions)}
    try:
        seg = replace(cfg.params.segmentation, **{k: v for k, v in changes.items() if k in seg_keys})
        blob = replace(cfg.params.blob, **{k: v for k, v in changes.items() if k in blob_keys})
        out = replace(cfg.output, **{k: v for k, v in changes.items() if k in out_keys})
        params = PipelineParams(seg, blob, changes.get("crop_margin", cfg.params.crop_margin))
    except InvalidParams as exc:
        raise ConfigError(str(exc)) from exc
    return Config(params, out)
