"""Constructed frame pairs and sequences with known ground truth."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .core import Box


def textured_background(rng: np.random.Generator, height: int, width: int,
                        low: int = 30, high: int = 80) -> np.ndarray:
    """Smoothed per-channel noise in a muted colour band."""
    noise = rng.random((height, width, 3))
    smooth = ndimage.gaussian_filter(noise, sigma=(1.5, 1.5, 0))
    smooth = (smooth - smooth.min()) / (np.ptp(smooth) + 1e-12)
    return (low + smooth * (high - low)).round().astype(np.uint8)


def paste(image: np.ndarray, patch: np.ndarray, left: int, top: int) -> np.ndarray:
    out = image.copy()
    ph, pw = patch.shape[:2]
    out[top:top + ph, left:left + pw] = patch
    return out


def patch_box(left: int, top: int, size_w: int, size_h: int) -> Box:
    """Box exactly covering pixels ``[left, left + w) x [top, top + h)``."""
    return Box.from_corner(left - 0.5, top - 0.5, size_w, size_h)


def moving_patch_pair(seed: int, size: int = 128, patch: int = 24, shift: int = 10,
                      color=(250, 235, 215), brightness_shift: int = 0):
    """Two frames with a uniquely coloured square moving ``shift`` px.

    Returns ``(frame1, frame2, box2)``; ``box2`` is the patch in frame 2.
    """
    rng = np.random.default_rng(seed)
    bg = textured_background(rng, size, size)
    angle = rng.uniform(0, 2 * np.pi)
    dx, dy = int(round(shift * np.cos(angle))), int(round(shift * np.sin(angle)))
    margin = shift + 4
    left1 = int(rng.integers(margin, size - patch - margin))
    top1 = int(rng.integers(margin, size - patch - margin))
    left2, top2 = left1 + dx, top1 + dy
    block = np.empty((patch, patch, 3), np.uint8)
    block[:] = color
    f1 = paste(bg, block, left1, top1)
    f2 = paste(bg, block, left2, top2)
    if brightness_shift:
        f2 = np.clip(f2.astype(int) + brightness_shift, 0, 255).astype(np.uint8)
    return f1, f2, patch_box(left2, top2, patch, patch)


def occlusion_sequence(seed: int, n_frames: int = 30, size: int = 128, patch: int = 20,
                       speed: int = 3, occluder: bool = True):
    """A textured target crossing the frame behind a static distractor block.

    Returns ``(frames, boxes)`` with the target's true box in every frame.
    """
    rng = np.random.default_rng(seed)
    bg = textured_background(rng, size, size)
    target = np.empty((patch, patch, 3), np.uint8)
    target[:] = (235, 200, 60)
    stripes = rng.integers(0, 2, size=(patch, patch)).astype(bool)
    target[stripes] = (200, 90, 30)
    distractor = textured_background(rng, patch + 6, patch + 10, low=90, high=230)
    top = int(rng.integers(size // 2 - patch, size // 2))
    start = 8
    occ_left = start + speed * (n_frames // 3)
    frames, boxes = [], []
    for t in range(n_frames):
        left = start + speed * t
        img = paste(bg, target, left, top)
        if occluder:
            img = paste(img, distractor, occ_left, top - 3)
        frames.append(img)
        boxes.append(patch_box(left, top, patch, patch))
    return frames, boxes
