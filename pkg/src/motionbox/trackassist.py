"""Tracking assist: refine a host tracker's box on a local target map.

Three changes relative to stand-alone detection: everything is computed
inside the tracker's search region, the colour posterior comes from the
previous box rather than the motion mask, and only the box position is
optimised. A small NCC template tracker is included as a host.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import appearance
from .boxopt import TargetMap, optimize_box
from .core import Box, DetectorConfig, ImageLike, MotionBoxError, as_rgb, clamp_box
from .features import FeatureBackendSpec
from .motion import extract_motion_mask

SEARCH_SCALE = 2.5


@dataclass(frozen=True)
class AssistState:
    previous_box: Box
    search_region: Box
    posterior: appearance.ColorPosterior


def search_region(box: Box, width: int, height: int, scale: float = SEARCH_SCALE) -> Box:
    """``box`` scaled about its centre, snapped to whole pixels and clipped to the frame."""
    region = Box(box.x, box.y, box.w * scale, box.h * scale)
    col0, row0, col1, row1 = region.pixel_rect()
    col0, row0 = max(col0, 0), max(row0, 0)
    col1, row1 = min(col1, width), min(row1, height)
    return Box.from_corner(col0 - 0.5, row0 - 0.5, col1 - col0, row1 - row0)


def _crop(image: np.ndarray, region: Box) -> np.ndarray:
    col0, row0, col1, row1 = region.pixel_rect()
    return image[row0:row1, col0:col1]


def _to_local(box: Box, region: Box) -> Box:
    return Box(box.x - (region.left + 0.5), box.y - (region.top + 0.5), box.w, box.h)


def _to_global(box: Box, region: Box) -> Box:
    return Box(box.x + (region.left + 0.5), box.y + (region.top + 0.5), box.w, box.h)


def make_state(frame: ImageLike, previous_box: Box) -> AssistState:
    """Colour posterior of the previous box against its search region."""
    image = as_rgb(frame)
    height, width = image.shape[:2]
    prev = clamp_box(previous_box, width, height)
    region = search_region(prev, width, height)
    crop = _crop(image, region)
    inner = np.zeros(crop.shape[:2], dtype=np.uint8)
    c0, r0, c1, r1 = _to_local(prev, region).pixel_rect()
    inner[max(r0, 0):r1, max(c0, 0):c1] = 1
    posterior = appearance.bayes_posterior(
        appearance.masked_histogram(crop, inner), appearance.masked_histogram(crop)
    )
    return AssistState(prev, region, posterior)


def refine_on_map(target: TargetMap, tracker_box: Box, cfg: DetectorConfig) -> Box:
    """Position-only ascent on a region-local target map; size is preserved."""
    region = Box.from_corner(-0.5, -0.5, target.width, target.height)
    box, _ = optimize_box(target, tracker_box, cfg, freeze_size=True, bounds=region)
    return Box(box.x, box.y, tracker_box.w, tracker_box.h)


def assist_refine(frame1: ImageLike, frame2: ImageLike, state: AssistState, tracker_box: Box,
                  cfg: DetectorConfig = DetectorConfig(),
                  spec: FeatureBackendSpec = FeatureBackendSpec.raw()) -> Box:
    """Nudge ``tracker_box`` toward the moving target inside the search region.

    Falls back to ``tracker_box`` unchanged when the region shows no motion.
    """
    image1, image2 = as_rgb(frame1), as_rgb(frame2)
    region = state.search_region
    crop1, crop2 = _crop(image1, region), _crop(image2, region)
    rh, rw = crop2.shape[:2]
    local = _to_local(tracker_box, region)
    if local.w > rw or local.h > rh:
        return tracker_box
    try:
        mm = extract_motion_mask(crop1, crop2, spec, cfg)
    except MotionBoxError:
        return tracker_box
    if mm.non_zero_count == 0:
        return tracker_box
    center = appearance.motion_center(mm.frame_mask)
    location = appearance.location_probability_map(center, rw, rh, cfg.gaussian_sigma_fraction)
    color = appearance.color_probability_map(crop2, state.posterior)
    target = TargetMap.from_maps(color, location)
    refined = refine_on_map(target, local, cfg)
    return _to_global(refined, region)


def ncc_match(frame: np.ndarray, template: np.ndarray, region: Box) -> tuple[float, float]:
    """Centre of the best normalised cross-correlation match inside ``region``."""
    import cv2

    crop = _crop(frame, region)
    th, tw = template.shape[:2]
    if crop.shape[0] < th or crop.shape[1] < tw:
        return region.x, region.y
    resp = cv2.matchTemplate(crop.astype(np.float32), template.astype(np.float32), cv2.TM_CCOEFF_NORMED)
    resp = np.nan_to_num(resp, nan=-1.0)
    r, c = np.unravel_index(int(np.argmax(resp)), resp.shape)
    col0, row0, _, _ = region.pixel_rect()
    return col0 + c + (tw - 1) / 2.0, row0 + r + (th - 1) / 2.0


def baseline_track(frames: Sequence[ImageLike], init_box: Box, assist: bool = False,
                   cfg: DetectorConfig = DetectorConfig(),
                   spec: FeatureBackendSpec = FeatureBackendSpec.raw()) -> list[Box]:
    """Fixed-scale NCC tracker; the template is re-cut from each previous frame."""
    images = [as_rgb(f) for f in frames]
    if not images:
        return []
    height, width = images[0].shape[:2]
    box = clamp_box(init_box, width, height)
    boxes = [box]
    for prev_img, img in zip(images, images[1:]):
        c0, r0, c1, r1 = box.pixel_rect()
        template = prev_img[r0:r1, c0:c1]
        region = search_region(box, width, height)
        x, y = ncc_match(img, template, region)
        # carry the box's sub-pixel offset from its template's centre
        dx, dy = box.x - (c0 + c1 - 1) / 2.0, box.y - (r0 + r1 - 1) / 2.0
        tracked = clamp_box(Box(x + dx, y + dy, box.w, box.h), width, height)
        if assist:
            state = make_state(prev_img, box)
            tracked = clamp_box(assist_refine(prev_img, img, state, tracked, cfg, spec), width, height)
        box = tracked
        boxes.append(box)
    return boxes
