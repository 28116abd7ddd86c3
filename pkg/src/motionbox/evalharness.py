"""Detection metrics, success/precision curves and the ablation matrix."""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .boxopt import detect
from .core import Box, DetectorConfig, MotionBoxError, load_frame
from .dataset import PairRecord
from .features import FeatureBackendSpec

log = logging.getLogger(__name__)

IOU_THRESHOLDS = np.round(np.linspace(0.0, 1.0, 101), 2)
ERROR_THRESHOLDS = np.arange(0, 51, dtype=float)
PRECISION_AT = 30


def iou(a: Box, b: Box) -> float:
    if a.w <= 0 or a.h <= 0 or b.w <= 0 or b.h <= 0:
        raise ValueError("IOU needs boxes with positive area")
    iw = max(0.0, min(a.right, b.right) - max(a.left, b.left))
    ih = max(0.0, min(a.bottom, b.bottom) - max(a.top, b.top))
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def center_error(a: Box, b: Box) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def success_curve(ious: Sequence[float], thresholds=IOU_THRESHOLDS) -> np.ndarray:
    ious = np.asarray(ious, dtype=float)
    if ious.size == 0:
        return np.zeros(len(thresholds))
    return (ious[None, :] > np.asarray(thresholds)[:, None]).mean(axis=1)


def precision_curve(errors: Sequence[float], thresholds=ERROR_THRESHOLDS) -> np.ndarray:
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        return np.zeros(len(thresholds))
    return (errors[None, :] <= np.asarray(thresholds)[:, None]).mean(axis=1)


@dataclass
class PairResult:
    pair_id: str
    iou: float
    center_error: float
    box: Box | None = None
    error: str | None = None


@dataclass
class EvalResult:
    pairs: list[PairResult]
    success: np.ndarray = field(init=False)
    precision: np.ndarray = field(init=False)

    def __post_init__(self):
        self.success = success_curve([p.iou for p in self.pairs])
        self.precision = precision_curve([p.center_error for p in self.pairs])
        if np.any(np.diff(self.success) > 1e-12):
            raise AssertionError("success curve must be non-increasing")
        if np.any(np.diff(self.precision) < -1e-12):
            raise AssertionError("precision curve must be non-decreasing")

    @property
    def auc(self) -> float:
        # mean of the sampled success rates, the usual OTB convention
        return float(self.success.mean())

    @property
    def pre30(self) -> float:
        return float(self.precision[int(np.searchsorted(ERROR_THRESHOLDS, PRECISION_AT))])


Detector = Callable[[PairRecord], Box]


def _frame_diagonal(record: PairRecord) -> float:
    try:
        frame = load_frame(record.path_b)
        return math.hypot(frame.width, frame.height)
    except (OSError, MotionBoxError):
        return float("inf")


def evaluate_one(record: PairRecord, detector: Detector) -> PairResult:
    gt = record.ground_truth
    try:
        box = detector(record)
    except (MotionBoxError, OSError) as exc:
        # failures count against the method instead of shrinking its denominator
        log.info("pair %s failed: %s", record.pair_id, exc)
        return PairResult(record.pair_id, 0.0, _frame_diagonal(record), None, str(exc))
    return PairResult(record.pair_id, iou(box, gt), center_error(box, gt), box)


def evaluate(records: Sequence[PairRecord], detector: Detector, jobs: int = 1) -> EvalResult:
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(lambda r: evaluate_one(r, detector), records))
    else:
        results = [evaluate_one(r, detector) for r in records]
    results.sort(key=lambda r: r.pair_id)
    return EvalResult(results)


def pipeline_detector(spec, cfg: DetectorConfig = DetectorConfig(), **toggles) -> Detector:
    """Adapt :func:`detect` to read a pair's frames from disk."""

    def run(record: PairRecord) -> Box:
        f1, f2 = load_frame(record.path_a), load_frame(record.path_b)
        box, _ = detect(f1, f2, spec, cfg, **toggles)
        return box

    return run


# -- ablation ---------------------------------------------------------------

FEATURE_TAGS = ("LAYER3", "LAYER14", "HOG", "RAW")


@dataclass(frozen=True)
class AblationRow:
    method_id: int
    features: tuple[str, ...]
    bin: bool = True
    lpc: bool = False
    cpc: bool = False
    sgd: bool = False
    target_source: str = "appearance"


ABLATION_METHODS: dict[int, AblationRow] = {
    0: AblationRow(0, ("RAW",)),
    1: AblationRow(1, ("RAW",), lpc=True, cpc=True, sgd=True),
    2: AblationRow(2, ("LAYER14",), lpc=True, cpc=True, sgd=True),
    3: AblationRow(3, ("LAYER3",), lpc=True, cpc=True, sgd=True),
    4: AblationRow(4, ("HOG",), lpc=True, cpc=True, sgd=True),
    5: AblationRow(5, ("LAYER3", "LAYER14"), lpc=True, cpc=True, sgd=True),
    6: AblationRow(6, ("LAYER3", "LAYER14", "HOG"), lpc=True, cpc=True, sgd=True),
    7: AblationRow(7, ("LAYER14",), sgd=True, target_source="mask"),
    8: AblationRow(8, ("LAYER14",), cpc=True, sgd=True),
    9: AblationRow(9, ("LAYER14",), lpc=True, sgd=True, target_source="difference"),
    10: AblationRow(10, ("LAYER14",), lpc=True, cpc=True),
}


def parse_methods(text: str) -> list[int]:
    """Parse ``"0-10"`` or ``"0,2,7-9"`` into method ids."""
    ids: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            ids.extend(range(int(lo), int(hi) + 1))
        else:
            ids.append(int(part))
    for i in ids:
        if i not in ABLATION_METHODS:
            raise MotionBoxError(f"unknown ablation method id: {i}")
    return ids


def method_detector(row: AblationRow, backends: Mapping[str, FeatureBackendSpec],
                    cfg: DetectorConfig = DetectorConfig()) -> Detector:
    """Bind an ablation row to concrete feature backends.

    ``backends`` maps each feature tag (``RAW``, ``HOG``, ``LAYER3``,
    ``LAYER14``) to a backend spec; RAW and HOG default to the built-ins.
    """
    specs = []
    for tag in row.features:
        spec = backends.get(tag)
        if spec is None and tag == "RAW":
            spec = FeatureBackendSpec.raw()
        if spec is None and tag == "HOG":
            spec = FeatureBackendSpec.hog()
        if spec is None:
            raise MotionBoxError(f"method {row.method_id} needs a {tag} feature backend")
        specs.append(spec)
    spec = specs[0] if len(specs) == 1 else specs
    return pipeline_detector(
        spec, cfg,
        use_color=row.cpc, use_location=row.lpc, use_sgd=row.sgd, target_source=row.target_source,
    )


def run_ablation(records: Sequence[PairRecord], methods: Iterable[int],
                 backends: Mapping[str, FeatureBackendSpec] | None = None,
                 cfg: DetectorConfig = DetectorConfig(), jobs: int = 1) -> dict[int, EvalResult]:
    backends = dict(backends or {})
    out = {}
    for mid in methods:
        if mid not in ABLATION_METHODS:
            raise MotionBoxError(f"unknown ablation method id: {mid}")
        row = ABLATION_METHODS[mid]
        log.info("ablation method %d: %s", mid, row)
        out[mid] = evaluate(records, method_detector(row, backends, cfg), jobs=jobs)
    return out


# -- CSV output ---------------------------------------------------------------

def write_results_csv(path: str | os.PathLike, result: EvalResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pair_id", "iou", "center_error"])
        for p in result.pairs:
            w.writerow([p.pair_id, f"{p.iou:.6f}", f"{p.center_error:.6f}"])


def write_curves_csv(path: str | os.PathLike, curves: Mapping[str, EvalResult]) -> None:
    """Success and precision blocks, one column per labelled result."""
    labels = list(curves)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["threshold", *(f"success_rate:{k}" for k in labels)])
        for i, t in enumerate(IOU_THRESHOLDS):
            w.writerow([f"{t:.2f}", *(f"{curves[k].success[i]:.6f}" for k in labels)])
        w.writerow([])
        w.writerow(["threshold", *(f"precision:{k}" for k in labels)])
        for i, t in enumerate(ERROR_THRESHOLDS):
            w.writerow([f"{t:g}", *(f"{curves[k].precision[i]:.6f}" for k in labels)])


def read_curves_csv(path: str | os.PathLike) -> dict[str, dict[str, np.ndarray]]:
    """Inverse of :func:`write_curves_csv`: ``{label: {"success", "precision", ...}}``."""
    out: dict[str, dict[str, np.ndarray]] = {}
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    block_kind, labels, block = None, [], []

    def flush():
        if block_kind is None:
            return
        arr = np.asarray(block, dtype=float)
        for j, label in enumerate(labels):
            entry = out.setdefault(label, {})
            entry[f"{block_kind}_thresholds"] = arr[:, 0]
            entry[block_kind] = arr[:, j + 1]

    for row in rows:
        if not row:
            flush()
            block_kind, labels, block = None, [], []
        elif row[0] == "threshold":
            block_kind = "success" if row[1].startswith("success_rate") else "precision"
            labels = [c.split(":", 1)[1] if ":" in c else "result" for c in row[1:]]
        else:
            block.append(row)
    flush()
    return out


def write_table_csv(path: str | os.PathLike, results: Mapping[int, EvalResult]) -> None:
    """Table laid out like the ablation table: one column per method."""
    ids = sorted(results)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["Methods", *ids])
        for tag in FEATURE_TAGS:
            w.writerow([_tag_label(tag), *("x" if tag in ABLATION_METHODS[i].features else "" for i in ids)])
        w.writerow(["BIN", *("x" if ABLATION_METHODS[i].bin else "" for i in ids)])
        w.writerow(["LPC", *("x" if ABLATION_METHODS[i].lpc else "" for i in ids)])
        w.writerow(["CPC", *("x" if ABLATION_METHODS[i].cpc else "" for i in ids)])
        w.writerow(["SGD", *("x" if ABLATION_METHODS[i].sgd else "" for i in ids)])
        w.writerow(["SR", *(f"{results[i].auc:.3f}" for i in ids)])
        w.writerow(["PRE (30)", *(f"{results[i].pre30:.3f}" for i in ids)])


def _tag_label(tag: str) -> str:
    return {"LAYER3": "Layer3", "LAYER14": "Layer14"}.get(tag, tag)
