"""Per-frame feature extraction behind a common ``FeatureMap`` contract."""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import ImageLike, MotionBoxError, as_rgb

HOG_CELL = 8
HOG_BINS = 9
HOG_BLOCK = 2


class FeatureKind(str, Enum):
    RAW = "raw"
    HOG = "hog"
    DEEP = "deep"


@dataclass(frozen=True)
class FeatureBackendSpec:
    kind: FeatureKind
    layer_tag: str = ""
    model_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", FeatureKind(self.kind))
        if self.kind is FeatureKind.DEEP and not self.model_path:
            raise ValueError("a DEEP feature backend needs a model_path")

    @classmethod
    def raw(cls) -> "FeatureBackendSpec":
        return cls(FeatureKind.RAW)

    @classmethod
    def hog(cls) -> "FeatureBackendSpec":
        return cls(FeatureKind.HOG)

    @classmethod
    def deep(cls, model_path: str, layer_tag: str = "layer14") -> "FeatureBackendSpec":
        return cls(FeatureKind.DEEP, layer_tag, os.fspath(model_path))


@dataclass(frozen=True)
class FeatureMap:
    """An h x w x C feature tensor with a pixel stride.

    ``resampled`` is set when the frame was resized (rather than padded) to
    fit the stride, in which case the grid spans exactly the source frame.
    """

    values: np.ndarray
    stride: int
    frame_width: int
    frame_height: int
    resampled: bool = False

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]

    @property
    def geometry(self) -> tuple[int, int, int, int]:
        return (self.height, self.width, self.channels, self.stride)


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def raw_features(image: np.ndarray) -> FeatureMap:
    h, w = image.shape[:2]
    return FeatureMap(image.astype(np.float64) / 255.0, 1, w, h)


def hog_features(image: np.ndarray, cell: int = HOG_CELL) -> FeatureMap:
    """Dalal-Triggs HOG folded back onto the cell grid.

    Each cell carries the mean of its L2-Hys normalised histograms over every
    2x2 block that contains it. The frame is edge-padded to a multiple of the
    cell size so the grid has ``ceil(H / cell)`` rows.
    """
    from skimage.feature import hog

    h, w = image.shape[:2]
    if h < cell * HOG_BLOCK or w < cell * HOG_BLOCK:
        raise MotionBoxError(f"image {w}x{h} is smaller than one HOG block")
    gray = image.astype(np.float64).mean(axis=2)
    ph, pw = _ceil_div(h, cell) * cell, _ceil_div(w, cell) * cell
    gray = np.pad(gray, ((0, ph - h), (0, pw - w)), mode="edge")
    blocks = hog(
        gray,
        orientations=HOG_BINS,
        pixels_per_cell=(cell, cell),
        cells_per_block=(HOG_BLOCK, HOG_BLOCK),
        block_norm="L2-Hys",
        feature_vector=False,
    )
    n_rows, n_cols = ph // cell, pw // cell
    acc = np.zeros((n_rows, n_cols, HOG_BINS))
    hits = np.zeros((n_rows, n_cols, 1))
    for dr in range(HOG_BLOCK):
        for dc in range(HOG_BLOCK):
            acc[dr:dr + blocks.shape[0], dc:dc + blocks.shape[1]] += blocks[:, :, dr, dc, :]
            hits[dr:dr + blocks.shape[0], dc:dc + blocks.shape[1]] += 1
    return FeatureMap(acc / hits, cell, w, h)


class DeepBackend:
    """Runs a serialized ONNX feature extractor through OpenCV's DNN module.

    A JSON sidecar next to the model (``<model>.json``) may record ``stride``,
    ``channels``, ``mean``, ``std`` and ``layer_tag``; missing entries fall back
    to ImageNet statistics and a stride inferred from the output shape.
    cv2.dnn networks are not re-entrant, so each thread lazily gets its own.
    """

    def __init__(self, model_path: str, layer_tag: str = ""):
        import cv2

        if not os.path.isfile(model_path):
            raise MotionBoxError(f"model file not found: {model_path}")
        self.model_path = model_path
        self.layer_tag = layer_tag
        meta = {}
        sidecar = os.path.splitext(model_path)[0] + ".json"
        if os.path.isfile(sidecar):
            with open(sidecar, encoding="utf-8") as fh:
                meta = json.load(fh)
        recorded = meta.get("layer_tag")
        if recorded and layer_tag and recorded != layer_tag:
            raise MotionBoxError(
                f"model {model_path} exports tap {recorded!r}, but {layer_tag!r} was requested"
            )
        self.stride = meta.get("stride")
        self.channels = meta.get("channels")
        self.mean = np.asarray(meta.get("mean", [0.485, 0.456, 0.406]), dtype=np.float32)
        self.std = np.asarray(meta.get("std", [0.229, 0.224, 0.225]), dtype=np.float32)
        self._local = threading.local()
        try:
            self._net()
        except cv2.error as exc:
            raise MotionBoxError(f"cannot load model {model_path}: {exc}") from exc

    def _net(self):
        net = getattr(self._local, "net", None)
        if net is None:
            import cv2

            net = cv2.dnn.readNetFromONNX(self.model_path)
            self._local.net = net
        return net

    def _infer_stride(self, image: np.ndarray) -> int:
        probe = self._forward(np.zeros((64, 64, 3), np.float32))
        return max(1, 64 // probe.shape[0])

    def _forward(self, image: np.ndarray) -> np.ndarray:
        import cv2

        x = (image.astype(np.float32) / 255.0 - self.mean) / self.std
        blob = np.ascontiguousarray(x.transpose(2, 0, 1)[None], dtype=np.float32)
        net = self._net()
        net.setInput(blob)
        try:
            out = net.forward()
        except cv2.error as exc:
            raise MotionBoxError(f"model inference failed: {exc}") from exc
        if out.ndim != 4:
            raise MotionBoxError(f"model output has rank {out.ndim}, expected N x C x h x w")
        return out[0].transpose(1, 2, 0)

    def extract(self, image: np.ndarray) -> FeatureMap:
        import cv2

        if self.stride is None:
            self.stride = self._infer_stride(image)
        s = int(self.stride)
        h, w = image.shape[:2]
        if h < s or w < s:
            raise MotionBoxError(f"image {w}x{h} is smaller than one {s}px cell")
        rh, rw = _ceil_div(h, s) * s, _ceil_div(w, s) * s
        resized = (rh, rw) != (h, w)
        if resized:
            image = cv2.resize(image, (rw, rh), interpolation=cv2.INTER_LINEAR)
        values = self._forward(image).astype(np.float64)
        if values.shape[:2] != (rh // s, rw // s):
            raise MotionBoxError(
                f"model tap returned a {values.shape[1]}x{values.shape[0]} grid, "
                f"expected {rw // s}x{rh // s} for stride {s}"
            )
        if self.channels is not None and values.shape[2] != self.channels:
            raise MotionBoxError(
                f"model tap returned {values.shape[2]} channels, expected {self.channels}"
            )
        return FeatureMap(values, s, w, h, resampled=resized)


_backend_cache: dict[tuple[str, str], DeepBackend] = {}
_cache_lock = threading.Lock()


def deep_backend(spec: FeatureBackendSpec) -> DeepBackend:
    key = (os.path.abspath(spec.model_path), spec.layer_tag)
    with _cache_lock:
        backend = _backend_cache.get(key)
        if backend is None:
            backend = DeepBackend(spec.model_path, spec.layer_tag)
            _backend_cache[key] = backend
    return backend


def extract(frame: ImageLike, spec: FeatureBackendSpec) -> FeatureMap:
    image = as_rgb(frame)
    if spec.kind is FeatureKind.RAW:
        fmap = raw_features(image)
    elif spec.kind is FeatureKind.HOG:
        fmap = hog_features(image)
    else:
        fmap = deep_backend(spec).extract(image)
    if not np.all(np.isfinite(fmap.values)):
        raise MotionBoxError("feature backend produced non-finite values")
    return fmap
