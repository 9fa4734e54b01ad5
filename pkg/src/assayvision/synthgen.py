"""Synthetic assay-post scenes with analytically known channel means.

Scene colors are given in R, G, B order. The default geometry uses 100 px per
cm: a 100 x 100 px post carrying four 2 mm (radius 10 px) discs in a 2 x 2 grid.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import InvalidSpec
from .quantify import AssayDelta, ChannelMeans, channel_delta

BASE_YELLOW = (220, 210, 40)
# blue -30, green -40, red -5
EXPOSED_YELLOW = (215, 170, 10)

AA_SAMPLES = 4
SWEEP_KEYS = ("radius", "blur_sigma", "noise_sigma", "illumination", "seed")


@dataclass(frozen=True)
class Disc:
    center: tuple[float, float]
    radius: float
    base_rgb: tuple[int, int, int] = BASE_YELLOW
    exposed_rgb: tuple[int, int, int] = EXPOSED_YELLOW


def _default_discs() -> tuple[Disc, ...]:
    return tuple(Disc((float(x), float(y)), 10.0) for y in (60, 100) for x in (60, 100))


@dataclass(frozen=True)
class SceneSpec:
    width: int = 160
    height: int = 160
    background_rgb: tuple[int, int, int] = (60, 60, 60)
    post_rect: tuple[int, int, int, int] = (30, 30, 100, 100)
    post_rgb: tuple[int, int, int] = (235, 235, 235)
    discs: tuple[Disc, ...] = field(default_factory=_default_discs)
    noise_sigma: float = 0.0
    illumination: tuple[float, float] = (1.0, 1.0)
    blur_sigma: float = 0.0
    anti_alias: bool = True
    seed: int = 0
    label: str = ""

    def validate(self) -> "SceneSpec":
        if self.width < 1 or self.height < 1:
            raise InvalidSpec("image dimensions must be positive")
        px, py, pw, ph = self.post_rect
        if pw < 1 or ph < 1 or px < 0 or py < 0 or px + pw > self.width or py + ph > self.height:
            raise InvalidSpec(f"post rect {self.post_rect} does not fit a {self.width}x{self.height} image")
        for name in ("background_rgb", "post_rgb"):
            _check_color(getattr(self, name), name)
        if not self.discs:
            raise InvalidSpec("scene needs at least one disc")
        for i, d in enumerate(self.discs):
            _check_color(d.base_rgb, f"disc {i} base color")
            _check_color(d.exposed_rgb, f"disc {i} exposed color")
            cx, cy = d.center
            if d.radius < 1:
                raise InvalidSpec(f"disc {i}: radius must be >= 1")
            if cx - d.radius < px or cy - d.radius < py or cx + d.radius > px + pw - 1 or cy + d.radius > py + ph - 1:
                raise InvalidSpec(f"disc {i} at {d.center} r={d.radius} leaves the post")
        for (i, a), (j, b) in itertools.combinations(enumerate(self.discs), 2):
            if math.dist(a.center, b.center) <= a.radius + b.radius:
                raise InvalidSpec(f"discs {i} and {j} overlap")
        if not self.noise_sigma >= 0 or not self.blur_sigma >= 0:
            raise InvalidSpec("noise_sigma and blur_sigma must be >= 0")
        if len(self.illumination) != 2 or min(self.illumination) <= 0:
            raise InvalidSpec("illumination gains must be a positive (min, max) pair")
        return self

    def gain(self) -> np.ndarray:
        """Multiplicative illumination per image column, linear in x."""
        g0, g1 = self.illumination
        if self.width == 1:
            return np.array([g0], dtype=np.float64)
        return g0 + (g1 - g0) * np.arange(self.width) / (self.width - 1)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["discs"] = [
            {k: list(v) if isinstance(v, tuple) else v for k, v in disc.items()} for disc in d["discs"]
        ]
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, data: dict) -> "SceneSpec":
        if not isinstance(data, dict):
            raise InvalidSpec("scene spec must be a mapping")
        allowed = set(cls.__dataclass_fields__)
        unknown = set(data) - allowed
        if unknown:
            raise InvalidSpec(f"unknown scene keys: {sorted(unknown)}")
        kw = dict(data)
        try:
            if "discs" in kw:
                discs = []
                for d in kw["discs"]:
                    extra = set(d) - set(Disc.__dataclass_fields__)
                    if extra:
                        raise InvalidSpec(f"unknown disc keys: {sorted(extra)}")
                    d = dict(d)
                    d["center"] = tuple(float(v) for v in d["center"])
                    d["radius"] = float(d["radius"])
                    for key in ("base_rgb", "exposed_rgb"):
                        if key in d:
                            d[key] = tuple(d[key])
                    discs.append(Disc(**d))
                kw["discs"] = tuple(discs)
            for key in ("background_rgb", "post_rgb", "post_rect", "illumination"):
                if key in kw:
                    kw[key] = tuple(kw[key])
            spec = cls(**kw)
        except (TypeError, ValueError, KeyError) as exc:
            if isinstance(exc, InvalidSpec):
                raise
            raise InvalidSpec(f"malformed scene spec: {exc}") from exc
        return spec.validate()


@dataclass(frozen=True)
class DiscTruth:
    center: tuple[float, float]
    radius: float
    base: ChannelMeans
    exposed: ChannelMeans
    delta: AssayDelta


@dataclass(frozen=True)
class GroundTruth:
    discs: list[DiscTruth]

    def to_dict(self) -> dict:
        return {
            "discs": [
                {
                    "index": i,
                    "center": list(d.center),
                    "radius": d.radius,
                    "base": d.base.as_dict(),
                    "exposed": d.exposed.as_dict(),
                    "delta": d.delta.as_dict(),
                }
                for i, d in enumerate(self.discs, start=1)
            ]
        }


def _check_color(rgb: Sequence[int], what: str) -> None:
    if len(rgb) != 3 or any(not 0 <= v <= 255 for v in rgb):
        raise InvalidSpec(f"{what} must be three values in [0, 255], got {rgb}")


def default_spec(**overrides) -> SceneSpec:
    return replace(SceneSpec(), **overrides).validate()


def disc_coverage(spec: SceneSpec, disc: Disc) -> np.ndarray:
    """Fraction of each pixel covered by ``disc``; pixel (x, y) is centred on integer coords."""
    cx, cy = disc.center
    r = disc.radius
    cov = np.zeros((spec.height, spec.width), dtype=np.float64)
    x0, x1 = max(int(math.floor(cx - r)) - 1, 0), min(int(math.ceil(cx + r)) + 2, spec.width)
    y0, y1 = max(int(math.floor(cy - r)) - 1, 0), min(int(math.ceil(cy + r)) + 2, spec.height)
    ys, xs = np.mgrid[y0:y1, x0:x1].astype(np.float64)
    if not spec.anti_alias:
        cov[y0:y1, x0:x1] = ((xs - cx) ** 2 + (ys - cy) ** 2 <= r * r).astype(np.float64)
        return cov
    offsets = (np.arange(AA_SAMPLES) + 0.5) / AA_SAMPLES - 0.5
    acc = np.zeros(xs.shape)
    for oy in offsets:
        for ox in offsets:
            acc += (xs + ox - cx) ** 2 + (ys + oy - cy) ** 2 <= r * r
    cov[y0:y1, x0:x1] = acc / AA_SAMPLES**2
    return cov


def render_scene(spec: SceneSpec, which: str = "base") -> np.ndarray:
    """Render the base or exposed capture of ``spec`` as an RGB array."""
    if which not in ("base", "exposed"):
        raise ValueError(f"which must be 'base' or 'exposed', got {which!r}")
    spec.validate()
    canvas = np.empty((spec.height, spec.width, 3), dtype=np.float64)
    canvas[:] = spec.background_rgb
    px, py, pw, ph = spec.post_rect
    canvas[py : py + ph, px : px + pw] = spec.post_rgb
    for disc in spec.discs:
        cov = disc_coverage(spec, disc)[..., None]
        color = np.array(disc.base_rgb if which == "base" else disc.exposed_rgb, dtype=np.float64)
        canvas = canvas * (1.0 - cov) + color * cov
    canvas *= spec.gain()[None, :, None]
    if spec.blur_sigma > 0:
        canvas = ndimage.gaussian_filter(canvas, sigma=(spec.blur_sigma, spec.blur_sigma, 0), mode="nearest")
    if spec.noise_sigma > 0:
        rng = np.random.default_rng([spec.seed, 0 if which == "base" else 1])
        canvas += rng.normal(0.0, spec.noise_sigma, canvas.shape)
    return np.clip(np.floor(canvas + 0.5), 0, 255).astype(np.uint8)


def _expected_means(spec: SceneSpec, disc: Disc, rgb: Sequence[int]) -> ChannelMeans:
    # linear gain is symmetric about the disc centre, so the mean gain is the centre gain
    g0, g1 = spec.illumination
    t = disc.center[0] / (spec.width - 1) if spec.width > 1 else 0.0
    gain = g0 + (g1 - g0) * t
    return ChannelMeans.from_rgb([min(max(v * gain, 0.0), 255.0) for v in rgb])


def canonical_disc_order(discs: Sequence[Disc]) -> list[int]:
    """Row-major order of disc indices, rows grouped within one bounding-box height."""
    tol = max(2 * math.floor(d.radius) + 1 for d in discs)
    rows: list[list[int]] = []
    for i in sorted(range(len(discs)), key=lambda i: (discs[i].center[1], discs[i].center[0])):
        if rows and abs(discs[i].center[1] - discs[rows[-1][0]].center[1]) <= tol:
            rows[-1].append(i)
        else:
            rows.append([i])
    return [i for row in rows for i in sorted(row, key=lambda i: discs[i].center[0])]


def ground_truth(spec: SceneSpec) -> GroundTruth:
    """Expected means and deltas, derived from the spec alone."""
    out = []
    for pos, i in enumerate(canonical_disc_order(spec.discs), start=1):
        d = spec.discs[i]
        base = _expected_means(spec, d, d.base_rgb)
        exposed = _expected_means(spec, d, d.exposed_rgb)
        out.append(DiscTruth(d.center, d.radius, base, exposed, channel_delta(base, exposed, pos)))
    return GroundTruth(out)


def generate_pair(spec: SceneSpec) -> tuple[np.ndarray, np.ndarray, GroundTruth]:
    spec.validate()
    return render_scene(spec, "base"), render_scene(spec, "exposed"), ground_truth(spec)


def rotate_layout(spec: SceneSpec, degrees: float) -> SceneSpec:
    """Rotate every disc centre about the post centre."""
    px, py, pw, ph = spec.post_rect
    ox, oy = px + (pw - 1) / 2, py + (ph - 1) / 2
    a = math.radians(degrees)
    discs = []
    for d in spec.discs:
        dx, dy = d.center[0] - ox, d.center[1] - oy
        center = (ox + dx * math.cos(a) - dy * math.sin(a), oy + dx * math.sin(a) + dy * math.cos(a))
        discs.append(replace(d, center=center))
    return replace(spec, discs=tuple(discs)).validate()


def sweep(spec: SceneSpec, ranges: dict[str, Sequence]) -> list[SceneSpec]:
    """Cartesian grid of scene variants.

    ``ranges`` maps any of ``radius``, ``blur_sigma``, ``noise_sigma``,
    ``illumination`` (a ``(min, max)`` gain pair) or ``seed`` to the values to
    try. Later keys in that list vary fastest.
    """
    if not ranges:
        raise ValueError("sweep needs at least one range")
    unknown = set(ranges) - set(SWEEP_KEYS)
    if unknown:
        raise ValueError(f"cannot sweep {sorted(unknown)}; choose from {SWEEP_KEYS}")
    keys = [k for k in SWEEP_KEYS if k in ranges]
    for k in keys:
        if len(ranges[k]) == 0:
            raise ValueError(f"range for {k!r} is empty")
    scenes = []
    for combo in itertools.product(*(ranges[k] for k in keys)):
        s = spec
        for k, v in zip(keys, combo):
            if k == "radius":
                s = replace(s, discs=tuple(replace(d, radius=float(v)) for d in s.discs))
            elif k == "illumination":
                s = replace(s, illumination=tuple(float(g) for g in v))
            else:
                s = replace(s, **{k: v})
        scenes.append(s.validate())
    return scenes
