"""Colour and location probability maps for the moving area."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import ImageLike, MotionBoxError, NoMotionError, as_rgb, check_probability_map

N_BINS = 16
N_COLORS = N_BINS ** 3
_CROSS = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class ColorHistogram:
    bins: np.ndarray

    @property
    def total(self) -> int:
        return int(self.bins.sum())


@dataclass(frozen=True)
class ColorPosterior:
    probability: np.ndarray
    prior: float  # P(mot)


@dataclass(frozen=True)
class MotionCenter:
    x: int
    y: int


def color_index(image: ImageLike) -> np.ndarray:
    """Per-pixel 4096-bin colour index, ``R/16 * 256 + G/16 * 16 + B/16``."""
    rgb = as_rgb(image).astype(np.int64) >> 4
    return (rgb[..., 0] << 8) | (rgb[..., 1] << 4) | rgb[..., 2]


def masked_histogram(
    image: ImageLike, mask: np.ndarray | None = None, count_masked_out_as_black: bool = False
) -> ColorHistogram:
    idx = color_index(image)
    if mask is None:
        return ColorHistogram(np.bincount(idx.ravel(), minlength=N_COLORS))
    mask = np.asarray(mask)
    if mask.shape != idx.shape:
        raise MotionBoxError(f"mask shape {mask.shape} does not match image {idx.shape}")
    sel = mask.astype(bool)
    bins = np.bincount(idx[sel], minlength=N_COLORS)
    if count_masked_out_as_black:
        # literal reading of hist(I2 * mask): zeroed pixels land in bin 0
        bins[0] += int((~sel).sum())
    return ColorHistogram(bins)


def bayes_posterior(h_mot: ColorHistogram, h_full: ColorHistogram) -> ColorPosterior:
    """P(c | mot) P(mot) / P(c) per colour bin; 0 where the colour is absent."""
    if h_full.total <= 0:
        raise MotionBoxError("full-frame histogram is empty")
    if h_mot.total <= 0:
        raise NoMotionError("no motion evidence: the moving-area histogram is empty")
    mot = h_mot.bins.astype(np.float64)
    full = h_full.bins.astype(np.float64)
    p_mot = h_mot.total / h_full.total
    p_c_given_mot = mot / h_mot.total
    p_c = full / h_full.total
    post = np.zeros(N_COLORS)
    occupied = full > 0
    post[occupied] = p_c_given_mot[occupied] * p_mot / p_c[occupied]
    # only reachable with count_masked_out_as_black
    np.clip(post, 0.0, 1.0, out=post)
    return ColorPosterior(post, p_mot)


def color_probability_map(image: ImageLike, posterior: ColorPosterior) -> np.ndarray:
    return check_probability_map(posterior.probability[color_index(image)], "color map")


def erosion_steps(mask: np.ndarray):
    """Yield the mask and each successive cross erosion until it empties."""
    cur = np.asarray(mask).astype(bool)
    while cur.any():
        yield cur
        cur = ndimage.binary_erosion(cur, structure=_CROSS)


def motion_center(mask: np.ndarray) -> MotionCenter:
    """Erode with a 3x3 cross until one pixel remains.

    If erosion would empty the mask while more than one pixel survives, the
    rounded centroid of the last non-empty stage is returned instead.
    """
    mask = np.asarray(mask).astype(bool)
    if not mask.any():
        raise NoMotionError("cannot find the centre of an empty motion mask")
    last = mask
    for stage in erosion_steps(mask):
        last = stage
        if np.count_nonzero(stage) == 1:
            break
    rows, cols = np.nonzero(last)
    return MotionCenter(int(np.floor(cols.mean() + 0.5)), int(np.floor(rows.mean() + 0.5)))


def location_probability_map(
    center: MotionCenter, width: int, height: int, sigma_fraction: float = 0.2
) -> np.ndarray:
    """Anisotropic Gaussian with peak 1 at ``center``; sigma is a fraction of each side."""
    sx, sy = sigma_fraction * width, sigma_fraction * height
    gx = np.exp(-np.square(np.arange(width) - center.x) / (2.0 * sx * sx))
    gy = np.exp(-np.square(np.arange(height) - center.y) / (2.0 * sy * sy))
    return check_probability_map(np.outer(gy, gx), "location map")
