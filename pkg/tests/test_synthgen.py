from dataclasses import replace

import numpy as np
import pytest

from assayvision.blobdetect import order_contours
from assayvision.errors import InvalidSpec
from assayvision.imagecore import rgb_to_hsv
from assayvision.quantify import PipelineParams, analyze_pair, run_detection
from assayvision.segmentation import SegmentationParams, threshold_hsv
from assayvision.synthgen import (
    BASE_YELLOW,
    EXPOSED_YELLOW,
    Disc,
    SceneSpec,
    default_spec,
    generate_pair,
    ground_truth,
    render_scene,
    rotate_layout,
    sweep,
)
from oracles import disc_interior_mean


def test_default_geometry():
    spec = default_spec()
    assert spec.post_rect[2:] == (100, 100)
    assert len(spec.discs) == 4 and all(d.radius == 10 for d in spec.discs)


@pytest.mark.parametrize("rgb", [BASE_YELLOW, EXPOSED_YELLOW])
def test_default_colors_inside_yellow_band(rgb):
    hsv = rgb_to_hsv(np.array([[rgb]], np.uint8))
    assert threshold_hsv(hsv, SegmentationParams())[0, 0] == 1


def test_disc_centres_exact_without_aa():
    spec = default_spec(anti_alias=False)
    img = render_scene(spec)
    for d in spec.discs:
        assert tuple(img[int(d.center[1]), int(d.center[0])]) == d.base_rgb


def test_seed_determinism():
    spec = default_spec(noise_sigma=5.0, seed=9)
    a, b = render_scene(spec, "exposed"), render_scene(spec, "exposed")
    assert np.array_equal(a, b)
    assert not np.array_equal(a, render_scene(replace(spec, seed=10), "exposed"))


def test_base_and_exposed_noise_independent():
    spec = default_spec(noise_sigma=5.0, seed=1)
    a, b = render_scene(spec, "base"), render_scene(spec, "exposed")
    bg = (slice(0, 20), slice(0, 20))
    assert not np.array_equal(a[bg], b[bg])


def test_invalid_specs():
    d = default_spec().discs
    with pytest.raises(InvalidSpec):
        default_spec(discs=(Disc((60.0, 60.0), 10.0), Disc((70.0, 60.0), 10.0)))
    with pytest.raises(InvalidSpec):
        default_spec(discs=(Disc((35.0, 60.0), 10.0),))
    with pytest.raises(InvalidSpec):
        default_spec(discs=(replace(d[0], radius=0.5),))
    with pytest.raises(InvalidSpec):
        default_spec(noise_sigma=-1.0)
    with pytest.raises(InvalidSpec):
        SceneSpec.from_dict({"bogus": 1})


def test_gt_delta_from_spec_arithmetic():
    # (B, G, R) base (40, 210, 220) -> exposed (35, 150, 170)
    disc = Disc((80.0, 80.0), 10.0, base_rgb=(220, 210, 40), exposed_rgb=(170, 150, 35))
    gt = ground_truth(default_spec(discs=(disc,)))
    d = gt.discs[0].delta
    assert (d.delta_blue, d.delta_green, d.delta_red) == (-5, -60, -50)


def test_flat_illumination_gt_equals_spec_colors():
    gt = ground_truth(default_spec())
    for t in gt.discs:
        assert (t.base.red, t.base.green, t.base.blue) == BASE_YELLOW


def test_gradient_gt_matches_rendered_interiors():
    spec = default_spec(illumination=(0.9, 1.1), anti_alias=False)
    base, exposed, gt = generate_pair(spec)
    # default discs are already listed in canonical order
    for t, d in zip(gt.discs, spec.discs):
        ref = disc_interior_mean(base, d.center, d.radius, inset=0)
        assert ref == pytest.approx([t.base.red, t.base.green, t.base.blue], abs=0.3)


def test_gt_order_matches_pipeline_order():
    spec = rotate_layout(default_spec(discs=tuple(reversed(default_spec().discs))), 4.0)
    base, _, gt = generate_pair(spec)
    detected = order_contours(run_detection(base, PipelineParams()).contours)
    for c, t in zip(detected, gt.discs):
        assert abs(c.centroid[0] - t.center[0]) < 1 and abs(c.centroid[1] - t.center[1]) < 1


def test_noise_mean_within_statistical_bound():
    # each (seed, disc, channel) mean must sit within 3 sigma / sqrt(n) of truth 99% of the time
    misses = total = 0
    for seed in range(100):
        spec = default_spec(noise_sigma=2.0, seed=seed)
        base, exposed, gt = generate_pair(spec)
        for a, t in zip(analyze_pair(base, exposed).assays, gt.discs):
            bound = 3 * 2.0 / np.sqrt(a.base.filled_area)
            for ch in ("blue", "green", "red"):
                total += 1
                misses += abs(getattr(a.base.means, ch) - getattr(t.base, ch)) > bound
    assert misses <= 0.01 * total


def test_sweep():
    spec = default_spec()
    scenes = sweep(spec, {"radius": [5, 10]})
    assert [s.discs[0].radius for s in scenes] == [5.0, 10.0]
    grid = sweep(spec, {"radius": [5, 10], "blur_sigma": [0.0, 2.0], "noise_sigma": [1.0]})
    assert len(grid) == 4
    assert [(s.discs[0].radius, s.blur_sigma) for s in grid] == [(5.0, 0.0), (5.0, 2.0), (10.0, 0.0), (10.0, 2.0)]
    assert grid == sweep(spec, {"radius": [5, 10], "blur_sigma": [0.0, 2.0], "noise_sigma": [1.0]})


@pytest.mark.parametrize("ranges", [{}, {"radius": []}, {"colour": [1]}])
def test_sweep_rejects_empty_or_unknown(ranges):
    with pytest.raises(ValueError):
        sweep(default_spec(), ranges)


def test_spec_dict_round_trip():
    spec = default_spec(noise_sigma=1.5, illumination=(0.8, 1.2), label="lactate 30mM")
    assert SceneSpec.from_dict(spec.to_dict()) == spec
