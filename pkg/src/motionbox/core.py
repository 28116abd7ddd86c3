"""Shared types and raster helpers.

Coordinates follow the pixel-center convention: pixel ``(row, col)`` covers
the continuous square ``[col - 0.5, col + 0.5] x [row - 0.5, row + 0.5]``.
A :class:`Box` is stored with a real-valued center and extent and is only
snapped to the pixel grid inside :func:`box_sum`.
"""

from __future__ import annotations

import configparser
import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from typing import Union

import numpy as np

MIN_FRAME_SIDE = 32


class MotionBoxError(Exception):
    """Base class for errors raised by this package."""


class NoMotionError(MotionBoxError):
    """Raised when a frame pair carries no motion evidence."""


class OutOfBoundsError(MotionBoxError, ValueError):
    pass


@dataclass(frozen=True)
class Frame:
    """An 8-bit RGB raster."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 2:
            data = np.repeat(data[:, :, None], 3, axis=2)
        if data.ndim != 3 or data.shape[2] != 3:
            raise ValueError(f"frame must have 3 channels, got shape {data.shape}")
        if data.shape[0] < MIN_FRAME_SIDE or data.shape[1] < MIN_FRAME_SIDE:
            raise ValueError(
                f"frame must be at least {MIN_FRAME_SIDE}x{MIN_FRAME_SIDE}, "
                f"got {data.shape[1]}x{data.shape[0]}"
            )
        data = np.ascontiguousarray(data, dtype=np.uint8)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


ImageLike = Union[Frame, np.ndarray]


def as_rgb(image: ImageLike) -> np.ndarray:
    """Return an H x W x 3 uint8 array for a Frame or raw array (no size check)."""
    if isinstance(image, Frame):
        return image.data
    arr = np.asarray(image)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an RGB image, got shape {arr.shape}")
    return arr.astype(np.uint8, copy=False)


def load_frame(path: str | os.PathLike) -> Frame:
    """Decode a PNG/JPEG into an RGB frame; grayscale files become 3 channels."""
    import cv2

    path = os.fspath(path)
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such image: {path}")
    raw = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise MotionBoxError(f"cannot decode image: {path}")
    if raw.dtype != np.uint8:
        raw = (raw / (np.iinfo(raw.dtype).max / 255.0)).round().astype(np.uint8)
    if raw.ndim == 2:
        return Frame(raw)
    if raw.shape[2] == 4:
        raw = raw[:, :, :3]
    return Frame(raw[:, :, ::-1])


def save_gray_png(path: str | os.PathLike, values: np.ndarray) -> None:
    """Write a [0, 1] raster (or a binary mask) as an 8-bit grayscale PNG."""
    import cv2

    img = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    cv2.imwrite(os.fspath(path), np.round(img * 255.0).astype(np.uint8))


def save_rgb_png(path: str | os.PathLike, image: ImageLike) -> None:
    import cv2

    cv2.imwrite(os.fspath(path), as_rgb(image)[:, :, ::-1])


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle given by center ``(x, y)`` and size ``(w, h)``."""

    x: float
    y: float
    w: float
    h: float

    @classmethod
    def from_corner(cls, left: float, top: float, w: float, h: float) -> "Box":
        return cls(left + w / 2.0, top + h / 2.0, w, h)

    @property
    def left(self) -> float:
        return self.x - self.w / 2.0

    @property
    def top(self) -> float:
        return self.y - self.h / 2.0

    @property
    def right(self) -> float:
        return self.x + self.w / 2.0

    @property
    def bottom(self) -> float:
        return self.y + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h

    def pixel_rect(self) -> tuple[int, int, int, int]:
        """Half-open pixel rectangle ``(col0, row0, col1, row1)``.

        Edges are rounded half-up, so a 9 px wide box centered on pixel 10
        covers columns 6..14.
        """
        return (_round(self.left), _round(self.top), _round(self.right), _round(self.bottom))

    def replace(self, **changes) -> "Box":
        return dataclasses.replace(self, **changes)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


def _round(v: float) -> int:
    # half-up; Python's round() is banker's rounding
    return int(math.floor(v + 0.5))


def clamp_box(box: Box, width: int, height: int, min_side: float = 0.0) -> Box:
    """Shrink/shift ``box`` so it lies inside a ``width`` x ``height`` frame."""
    w = min(max(box.w, min_side), float(width))
    h = min(max(box.h, min_side), float(height))
    x = min(max(box.x, w / 2.0 - 0.5), width - 0.5 - w / 2.0)
    y = min(max(box.y, h / 2.0 - 0.5), height - 0.5 - h / 2.0)
    return Box(x, y, w, h)


def box_inside(box: Box, width: int, height: int, tol: float = 1e-9) -> bool:
    return (
        box.left >= -0.5 - tol
        and box.top >= -0.5 - tol
        and box.right <= width - 0.5 + tol
        and box.bottom <= height - 0.5 + tol
    )


def check_probability_map(values: np.ndarray, name: str = "probability map") -> np.ndarray:
    if values.size and (not np.all(np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0):
        raise MotionBoxError(f"{name} has values outside [0, 1]")
    return values


def integral_image(values: np.ndarray) -> np.ndarray:
    """Summed-area table with a zero first row and column.

    ``ii[i, j]`` is the sum of ``values[:i, :j]``, so the table is one larger
    than the map along each axis.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("integral_image expects a 2-D map")
    ii = np.zeros((values.shape[0] + 1, values.shape[1] + 1), dtype=np.float64)
    np.cumsum(values, axis=0, out=ii[1:, 1:])
    np.cumsum(ii[1:, 1:], axis=1, out=ii[1:, 1:])
    return ii


def rect_sum(ii: np.ndarray, col0: int, row0: int, col1: int, row1: int) -> float:
    return float(ii[row1, col1] - ii[row0, col1] - ii[row1, col0] + ii[row0, col0])


def box_sum(ii: np.ndarray, box: Box) -> float:
    """Sum of the map under the rounded ``box`` using the integral table ``ii``."""
    col0, row0, col1, row1 = box.pixel_rect()
    rows, cols = ii.shape[0] - 1, ii.shape[1] - 1
    if col1 <= col0 or row1 <= row0:
        raise OutOfBoundsError(f"box {box} rounds to an empty pixel rectangle")
    if col0 < 0 or row0 < 0 or col1 > cols or row1 > rows:
        raise OutOfBoundsError(f"box {box} exceeds the {cols}x{rows} map; clamp it first")
    return rect_sum(ii, col0, row0, col1, row1)


def _cubic_weights(t: np.ndarray, a: float) -> np.ndarray:
    t = np.abs(t)
    t2, t3 = t * t, t * t * t
    near = (a + 2.0) * t3 - (a + 3.0) * t2 + 1.0
    far = a * t3 - 5.0 * a * t2 + 8.0 * a * t - 4.0 * a
    return np.where(t <= 1.0, near, np.where(t < 2.0, far, 0.0))


def _resample_matrix(n_src: int, n_dst: int, a: float) -> np.ndarray:
    if n_src == n_dst:
        return np.eye(n_dst)
    scale = n_src / n_dst
    # hold the edge value beyond the outermost sample centres instead of
    # extrapolating the cubic, which would overshoot at the borders
    centers = np.clip((np.arange(n_dst) + 0.5) * scale - 0.5, 0.0, n_src - 1.0)
    base = np.floor(centers).astype(int)
    mat = np.zeros((n_dst, n_src))
    rows = np.arange(n_dst)
    for k in range(-1, 3):
        idx = base + k
        w = _cubic_weights(centers - idx, a)
        np.add.at(mat, (rows, np.clip(idx, 0, n_src - 1)), w)
    return mat


def bicubic_resize(src: np.ndarray, dst_width: int, dst_height: int, a: float = -0.5) -> np.ndarray:
    """Separable cubic-convolution resize (Catmull-Rom by default).

    Taps past the border read the edge pixel, and output samples beyond the
    outermost source centres take the edge value.
    """
    src = np.asarray(src, dtype=np.float64)
    if src.ndim != 2 or src.size == 0:
        raise ValueError("bicubic_resize expects a non-empty 2-D raster")
    if dst_width < 1 or dst_height < 1:
        raise ValueError(f"destination size must be positive, got {dst_width}x{dst_height}")
    wy = _resample_matrix(src.shape[0], dst_height, a)
    wx = _resample_matrix(src.shape[1], dst_width, a)
    return wy @ src @ wx.T


@dataclass(frozen=True)
class DetectorConfig:
    binarization_ratio: float = 0.8
    histogram_bins_per_channel: int = 16
    gaussian_sigma_fraction: float = 0.2
    penalty_lambda: float = 0.5
    learning_rate: float = 300.0
    perturbation: float = 1.0
    max_step: float = 1.0
    finite_difference: str = "forward"
    max_iterations: int = 100
    upsample_rebinarize_threshold: float = 0.5
    min_box_side: float = 4.0
    # fidelity toggles for interpretation experiments
    channel_accumulation: str = "abs"
    count_masked_out_as_black: bool = False
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not 0.0 < self.binarization_ratio < 1.0:
            raise ValueError("binarization_ratio must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.penalty_lambda < 0:
            raise ValueError("penalty_lambda must be non-negative")
        if self.perturbation <= 0:
            raise ValueError("perturbation must be positive")
        if self.finite_difference not in ("forward", "central"):
            raise ValueError("finite_difference must be 'forward' or 'central'")
        if self.max_step <= 0:
            raise ValueError("max_step must be positive")
        if self.histogram_bins_per_channel != 16:
            raise ValueError("only 16 bins per channel are supported")
        if self.channel_accumulation not in ("abs", "square"):
            raise ValueError("channel_accumulation must be 'abs' or 'square'")

    def replace(self, **changes) -> "DetectorConfig":
        return dataclasses.replace(self, **changes)


_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(DetectorConfig) if f.name != "extra"}


def _camel_to_snake(name: str) -> str:
    out = []
    for ch in name:
        if ch.isupper():
            out.append("_" + ch.lower())
        else:
            out.append(ch)
    return "".join(out).lstrip("_").replace("-", "_")


def _coerce(name: str, raw):
    kind = type(_CONFIG_FIELDS[name].default)
    if kind is bool:
        if isinstance(raw, str):
            lowered = raw.strip().lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no", "on", "off"):
                raise ValueError(f"{name}: not a boolean: {raw!r}")
            return lowered in ("true", "1", "yes", "on")
        return bool(raw)
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    return str(raw).strip()


def config_from_mapping(mapping: dict) -> DetectorConfig:
    values = {}
    for key, raw in mapping.items():
        name = _camel_to_snake(key)
        if name not in _CONFIG_FIELDS:
            raise ValueError(f"unknown config key: {key}")
        values[name] = _coerce(name, raw)
    return DetectorConfig(**values)


def load_config(path: str | os.PathLike | None) -> DetectorConfig:
    """Read a config file; JSON objects and ``key = value`` lines are both accepted."""
    if path is None:
        return DetectorConfig()
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return config_from_mapping(json.loads(text))
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    parser.read_string("[detector]\n" + text)
    mapping = {}
    for section in parser.sections():
        mapping.update(parser.items(section))
    return config_from_mapping(mapping)
