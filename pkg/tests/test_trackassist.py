import numpy as np
import pytest

from motionbox.boxopt import TargetMap
from motionbox.core import Box, DetectorConfig
from motionbox.evalharness import center_error
from motionbox.synthetic import occlusion_sequence, textured_background
from motionbox.trackassist import (
    assist_refine,
    baseline_track,
    make_state,
    refine_on_map,
    search_region,
)
from oracles import exhaustive_best_position


def test_search_region_clipped():
    r = search_region(Box(5, 5, 10, 10), 64, 64)
    assert r.left == -0.5 and r.top == -0.5
    assert r.w == r.right + 0.5


def test_uniform_map_identity():
    t = TargetMap.from_values(np.full((40, 40), 0.6))
    b = Box(20.3, 18.7, 10, 8)
    assert refine_on_map(t, b, DetectorConfig()) == b


def test_offset_block_recovered():
    values = np.zeros((50, 50))
    values[20:32, 26:38] = 1.0  # 12x12 block centred at (31.5, 25.5)
    tracker = Box(25.5, 25.5, 12, 12)  # 6 px to the left
    out = refine_on_map(TargetMap.from_values(values), tracker, DetectorConfig())
    c0, r0 = exhaustive_best_position(values, 12, 12)
    assert np.hypot(out.x - (c0 + 5.5), out.y - (r0 + 5.5)) <= 2
    assert (out.w, out.h) == (12, 12)


def test_no_motion_passthrough():
    img = textured_background(np.random.default_rng(0), 80, 80)
    prev = Box(40, 40, 12, 12)
    state = make_state(img, prev)
    tracker = Box(41.2, 39.7, 12, 12)
    assert assist_refine(img, img, state, tracker) == tracker


def test_preserves_size_and_stays_in_region():
    frames, boxes = occlusion_sequence(3)
    rng = np.random.default_rng(0)
    for k in range(20):
        i = int(rng.integers(0, len(frames) - 1))
        prev = boxes[i]
        state = make_state(frames[i], prev)
        tracker = Box(prev.x + rng.uniform(-4, 4), prev.y + rng.uniform(-4, 4), prev.w, prev.h)
        out = assist_refine(frames[i], frames[i + 1], state, tracker)
        assert (out.w, out.h) == (tracker.w, tracker.h)
        r = state.search_region
        assert r.left - 1e-9 <= out.left and out.right <= r.right + 1e-9


def test_static_scene_constant():
    img = textured_background(np.random.default_rng(1), 64, 64)
    init = Box(30, 30, 10, 10)
    for assist in (False, True):
        out = baseline_track([img] * 5, init, assist=assist)
        assert all(b == out[0] for b in out)


def test_translating_patch_tracked_without_occluder():
    frames, boxes = occlusion_sequence(0, occluder=False)
    for assist in (False, True):
        out = baseline_track(frames, boxes[0], assist=assist)
        assert max(center_error(a, b) for a, b in zip(out, boxes)) <= 3


@pytest.mark.parametrize("seed", range(4))
def test_assist_helps_through_occlusion(seed):
    frames, boxes = occlusion_sequence(seed)
    errs = {}
    for assist in (False, True):
        out = baseline_track(frames, boxes[0], assist=assist)
        errs[assist] = np.mean([center_error(a, b) for a, b in zip(out, boxes)])
    assert errs[True] <= errs[False]


def test_assist_off_is_pure_ncc():
    from motionbox.trackassist import ncc_match
    from motionbox.core import clamp_box

    frames, boxes = occlusion_sequence(5)
    out = baseline_track(frames, boxes[0], assist=False)
    box = boxes[0]
    for prev, img, got in zip(frames, frames[1:], out[1:]):
        c0, r0, c1, r1 = box.pixel_rect()
        x, y = ncc_match(img, prev[r0:r1, c0:c1], search_region(box, 128, 128))
        dx, dy = box.x - (c0 + c1 - 1) / 2.0, box.y - (r0 + r1 - 1) / 2.0
        box = clamp_box(Box(x + dx, y + dy, box.w, box.h), 128, 128)
        assert got == box
