"""Target map construction and bounding-box search.

The box score is the mean target probability inside the (rounded) box plus
a size reward ``lambda * (w + h) / (W + H)``. The optimizer is a
finite-difference ascent that moves one box edge at a time and never
accepts a move that lowers the score.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import appearance
from .core import (
    Box,
    DetectorConfig,
    ImageLike,
    MotionBoxError,
    NoMotionError,
    OutOfBoundsError,
    as_rgb,
    box_sum,
    check_probability_map,
    clamp_box,
    integral_image,
)
from .features import FeatureBackendSpec
from .motion import MotionMask, extract_motion_mask, upsample_difference

MAX_BACKTRACKS = 4
# score differences below this are integral-image rounding noise
SCORE_TOL = 1e-12


class Termination(str, enum.Enum):
    CONVERGED = "CONVERGED"
    MAX_ITERATIONS = "MAX_ITERATIONS"


@dataclass(frozen=True)
class TargetMap:
    values: np.ndarray
    integral: np.ndarray

    @classmethod
    def from_values(cls, values: np.ndarray) -> "TargetMap":
        values = check_probability_map(np.asarray(values, dtype=np.float64), "target map")
        return cls(values, integral_image(values))

    @classmethod
    def from_maps(cls, color_map: np.ndarray, location_map: np.ndarray) -> "TargetMap":
        return cls.from_values(np.asarray(color_map) * np.asarray(location_map))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass
class OptimizerTrace:
    boxes: list[Box] = field(default_factory=list)
    scores: list[float] = field(default_factory=list)
    termination: Termination = Termination.MAX_ITERATIONS

    @property
    def iterations(self) -> int:
        return len(self.boxes) - 1

    def rows(self):
        for i, (b, s) in enumerate(zip(self.boxes, self.scores)):
            yield (i, b.x, b.y, b.w, b.h, s)


def initial_box(center: appearance.MotionCenter, n: int, width: int | None = None,
                height: int | None = None) -> Box:
    """Square of side sqrt(2N) on the motion centre, clamped when a frame size is given."""
    if n <= 0:
        raise NoMotionError("no motion: the upsampled motion mask is empty")
    side = math.sqrt(2.0 * n)
    box = Box(float(center.x), float(center.y), side, side)
    if width is not None and height is not None:
        box = clamp_box(box, width, height)
    return box


def score(target: TargetMap, box: Box, lam: float) -> float:
    col0, row0, col1, row1 = box.pixel_rect()
    area = (col1 - col0) * (row1 - row0)
    if area <= 0:
        raise OutOfBoundsError(f"box {box} rounds to zero area")
    total = box_sum(target.integral, box)
    return total / area + lam * (box.w + box.h) / (target.width + target.height)


def _clamp(box: Box, target: TargetMap, min_side: float, bounds: Box | None) -> Box:
    if bounds is None:
        return clamp_box(box, target.width, target.height, min_side)
    w = min(max(box.w, min_side), bounds.w)
    h = min(max(box.h, min_side), bounds.h)
    x = min(max(box.x, bounds.left + w / 2.0), bounds.right - w / 2.0)
    y = min(max(box.y, bounds.top + h / 2.0), bounds.bottom - h / 2.0)
    return Box(x, y, w, h)


def _from_edges(left: float, top: float, right: float, bottom: float) -> Box:
    return Box((left + right) / 2.0, (top + bottom) / 2.0, right - left, bottom - top)


def _params(box: Box, freeze_size: bool) -> list[float]:
    if freeze_size:
        return [box.x, box.y]
    return [box.left, box.top, box.right, box.bottom]


def _to_box(params: Sequence[float], like: Box, freeze_size: bool) -> Box:
    if freeze_size:
        return Box(params[0], params[1], like.w, like.h)
    return _from_edges(*params)


def optimize_box(
    target: TargetMap,
    init: Box,
    cfg: DetectorConfig = DetectorConfig(),
    freeze_size: bool = False,
    bounds: Box | None = None,
) -> tuple[Box, OptimizerTrace]:
    """Finite-difference ascent of :func:`score` starting from ``init``.

    Each iteration visits the four box edges in turn (left, top, right,
    bottom), probes the score with a ``perturbation`` move of that edge and
    steps it by ``learning_rate`` times the difference quotient, capped at
    ``max_step`` px. A move is kept only if it raises the score, or leaves
    both score and rounded box unchanged. Rejected moves are retried at half
    length a few times. The loop stops once no edge moves.

    With ``freeze_size`` the centre coordinates are probed instead and
    ``w``/``h`` are returned untouched. ``bounds`` confines the box to a
    sub-rectangle of the map (edges in the pixel-centre convention, e.g.
    ``left = col0 - 0.5``).
    """
    c0, r0, c1, r1 = init.pixel_rect()
    if c1 <= c0 or r1 <= r0:
        raise OutOfBoundsError(f"initial box {init} rounds to zero area")
    lam, lr, d = cfg.penalty_lambda, cfg.learning_rate, cfg.perturbation
    min_side = 0.0 if freeze_size else cfg.min_box_side
    central = cfg.finite_difference == "central"

    def make(params, like):
        return _clamp(_to_box(params, like, freeze_size), target, min_side, bounds)

    box = _clamp(init, target, min_side, bounds)
    cur = score(target, box, lam)
    trace = OptimizerTrace([box], [cur])
    for _ in range(cfg.max_iterations):
        moved = False
        for i in range(2 if freeze_size else 4):
            params = _params(box, freeze_size)
            ahead = list(params)
            ahead[i] += d
            s_ahead = score(target, make(ahead, box), lam)
            if central:
                behind = list(params)
                behind[i] -= d
                change = s_ahead - score(target, make(behind, box), lam)
            else:
                change = s_ahead - cur
            if abs(change) <= SCORE_TOL:
                continue
            grad = change / ((2.0 if central else 1.0) * d)
            step, cap = lr, cfg.max_step
            for _attempt in range(MAX_BACKTRACKS + 1):
                cand_params = list(params)
                cand_params[i] += float(np.clip(step * grad, -cap, cap))
                cand = make(cand_params, box)
                if cand == box:
                    break
                cand_score = score(target, cand, lam)
                # a tie is only allowed while the rounded box stays put, so the
                # box cannot wander across a flat plateau
                gain = cand_score - cur
                if gain > SCORE_TOL or (gain >= -SCORE_TOL and cand.pixel_rect() == box.pixel_rect()):
                    box, cur, moved = cand, cand_score, True
                    break
                step *= 0.5
                cap *= 0.5
        if not moved:
            trace.termination = Termination.CONVERGED
            break
        trace.boxes.append(box)
        trace.scores.append(cur)
    return box, trace


@dataclass
class Diagnostics:
    motion: MotionMask
    center: appearance.MotionCenter | None = None
    posterior: appearance.ColorPosterior | None = None
    color_map: np.ndarray | None = None
    location_map: np.ndarray | None = None
    target: TargetMap | None = None
    init_box: Box | None = None
    trace: OptimizerTrace | None = None
    score: float | None = None


def detect(
    frame1: ImageLike,
    frame2: ImageLike,
    spec: FeatureBackendSpec | Sequence[FeatureBackendSpec] = FeatureBackendSpec.raw(),
    cfg: DetectorConfig = DetectorConfig(),
    use_color: bool = True,
    use_location: bool = True,
    use_sgd: bool = True,
    target_source: str = "appearance",
) -> tuple[Box, Diagnostics]:
    """Locate the single moving target between two frames.

    The keyword toggles switch off pipeline stages for ablations. With
    ``target_source="mask"`` the optimizer runs on the binary moving area;
    with ``"difference"`` the colour map is replaced by the upsampled
    difference map scaled to [0, 1].
    """
    image2 = as_rgb(frame2)
    height, width = image2.shape[:2]
    try:
        mm = extract_motion_mask(frame1, image2, spec, cfg)
    except NoMotionError:
        raise
    except MotionBoxError as exc:
        raise type(exc)(f"motion: {exc}") from exc
    diag = Diagnostics(mm)
    n = mm.non_zero_count
    if n == 0:
        raise NoMotionError("no motion: the frames show no difference")

    try:
        diag.center = appearance.motion_center(mm.frame_mask)
        if target_source == "mask":
            values = mm.frame_mask.astype(np.float64)
        elif target_source == "difference":
            if mm.difference is None:
                raise MotionBoxError("difference target map needs a single feature backend")
            values = upsample_difference(mm)
            if use_location:
                diag.location_map = appearance.location_probability_map(
                    diag.center, width, height, cfg.gaussian_sigma_fraction)
                values = values * diag.location_map
        elif target_source == "appearance":
            values = np.ones((height, width))
            if use_color:
                h_mot = appearance.masked_histogram(image2, mm.frame_mask, cfg.count_masked_out_as_black)
                h_full = appearance.masked_histogram(image2)
                diag.posterior = appearance.bayes_posterior(h_mot, h_full)
                diag.color_map = appearance.color_probability_map(image2, diag.posterior)
                values = values * diag.color_map
            if use_location:
                diag.location_map = appearance.location_probability_map(
                    diag.center, width, height, cfg.gaussian_sigma_fraction)
                values = values * diag.location_map
        else:
            raise ValueError(f"unknown target source {target_source!r}")
    except NoMotionError:
        raise
    except MotionBoxError as exc:
        raise type(exc)(f"appearance: {exc}") from exc

    diag.target = TargetMap.from_values(values)
    diag.init_box = initial_box(diag.center, n, width, height)
    if use_sgd:
        box, diag.trace = optimize_box(diag.target, diag.init_box, cfg)
        diag.score = diag.trace.scores[-1]
    else:
        box = diag.init_box
        diag.score = score(diag.target, box, cfg.penalty_lambda)
    return box, diag
