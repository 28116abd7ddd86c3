"""Moving-area extraction from a pair of frames."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import features as feat
from .core import DetectorConfig, ImageLike, MotionBoxError, as_rgb, bicubic_resize
from .features import FeatureBackendSpec, FeatureMap


@dataclass(frozen=True)
class MotionMask:
    feature_mask: np.ndarray | None
    frame_mask: np.ndarray
    difference: np.ndarray | None = None
    grid: FeatureMap | None = None

    @property
    def non_zero_count(self) -> int:
        return int(np.count_nonzero(self.frame_mask))


def feature_difference(f1: FeatureMap, f2: FeatureMap, accumulation: str = "abs") -> np.ndarray:
    """Collapse ``f1 - f2`` over channels into a non-negative h x w map."""
    if f1.geometry != f2.geometry:
        raise MotionBoxError(f"feature maps differ in shape: {f1.geometry} vs {f2.geometry}")
    delta = f1.values - f2.values
    if accumulation == "abs":
        return np.abs(delta).sum(axis=2)
    if accumulation == "square":
        return np.square(delta).sum(axis=2)
    raise ValueError(f"unknown channel accumulation {accumulation!r}")


def binarize(diff: np.ndarray, ratio: float) -> np.ndarray:
    peak = float(np.max(diff)) if diff.size else 0.0
    if peak <= 0.0:
        return np.zeros(diff.shape, dtype=np.uint8)
    return (diff >= ratio * peak).astype(np.uint8)


def upsample(raster: np.ndarray, fmap: FeatureMap) -> np.ndarray:
    """Bicubic-resize a feature-grid raster to the frame that produced ``fmap``."""
    if fmap.resampled:
        return bicubic_resize(raster, fmap.frame_width, fmap.frame_height)
    s = fmap.stride
    if s == 1:
        up = np.asarray(raster, dtype=np.float64)
    else:
        up = bicubic_resize(raster, raster.shape[1] * s, raster.shape[0] * s)
    return up[: fmap.frame_height, : fmap.frame_width]


def rebinarize(up: np.ndarray, threshold: float) -> np.ndarray:
    return (np.clip(up, 0.0, 1.0) >= threshold).astype(np.uint8)


def _single_mask(image1, image2, spec: FeatureBackendSpec, cfg: DetectorConfig) -> MotionMask:
    f1 = feat.extract(image1, spec)
    f2 = feat.extract(image2, spec)
    diff = feature_difference(f1, f2, cfg.channel_accumulation)
    fmask = binarize(diff, cfg.binarization_ratio)
    frame_mask = rebinarize(upsample(fmask.astype(np.float64), f1), cfg.upsample_rebinarize_threshold)
    return MotionMask(fmask, frame_mask, diff, f1)


def extract_motion_mask(
    frame1: ImageLike,
    frame2: ImageLike,
    spec: FeatureBackendSpec | Sequence[FeatureBackendSpec],
    cfg: DetectorConfig = DetectorConfig(),
) -> MotionMask:
    """Binary moving area at frame resolution.

    Passing several backend specs fuses them by OR-ing their frame masks; the
    fused result has no single feature-resolution mask.
    """
    image1, image2 = as_rgb(frame1), as_rgb(frame2)
    if image1.shape != image2.shape:
        raise MotionBoxError(f"frame sizes differ: {image1.shape[:2]} vs {image2.shape[:2]}")
    if isinstance(spec, FeatureBackendSpec):
        return _single_mask(image1, image2, spec, cfg)
    specs = list(spec)
    if not specs:
        raise ValueError("at least one feature backend is required")
    if len(specs) == 1:
        return _single_mask(image1, image2, specs[0], cfg)
    fused = np.zeros(image1.shape[:2], dtype=np.uint8)
    for s in specs:
        fused |= _single_mask(image1, image2, s, cfg).frame_mask
    return MotionMask(None, fused)


def upsample_difference(mm: MotionMask) -> np.ndarray:
    """Difference map scaled by its maximum and resized to the frame, in [0, 1]."""
    if mm.difference is None or mm.grid is None:
        raise MotionBoxError("motion mask carries no difference map")
    peak = float(mm.difference.max())
    scaled = mm.difference / peak if peak > 0 else np.zeros_like(mm.difference)
    return np.clip(upsample(scaled, mm.grid), 0.0, 1.0)
