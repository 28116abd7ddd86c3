"""Build and check a pair-based detection dataset from tracking sequences.

Anchors sit every 50 frames starting at frame 1; each anchor is paired with
a frame 1-10 frames later, drawn from a seeded generator. Sequences listed
in an exclusion file are skipped, and corrected annotations replace the
originals when supplied.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import Box, MotionBoxError, box_inside

log = logging.getLogger(__name__)

ANCHOR_STRIDE = 50
MAX_INTERVAL = 10
IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png")
GT_NAMES = ("groundtruth_rect.txt", "groundtruth.txt", "gt.txt")


@dataclass
class SequenceManifest:
    name: str
    frame_paths: list[str]
    annotations: list[Box]
    excluded: str | None = None

    def __post_init__(self):
        if self.excluded is None and len(self.annotations) != len(self.frame_paths):
            raise MotionBoxError(
                f"sequence {self.name}: {len(self.frame_paths)} frames but "
                f"{len(self.annotations)} annotations"
            )


@dataclass(frozen=True)
class PairRecord:
    sequence: str
    index_a: int
    index_b: int
    ground_truth: Box
    path_a: str
    path_b: str

    @property
    def pair_id(self) -> str:
        return f"{self.sequence}:{self.index_a:06d}-{self.index_b:06d}"

    def to_json(self) -> dict:
        return {
            "sequence": self.sequence,
            "index_a": self.index_a,
            "index_b": self.index_b,
            "ground_truth": list(self.ground_truth.as_tuple()),
            "path_a": self.path_a,
            "path_b": self.path_b,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PairRecord":
        return cls(
            obj["sequence"], int(obj["index_a"]), int(obj["index_b"]),
            Box(*map(float, obj["ground_truth"])), obj["path_a"], obj["path_b"],
        )


def parse_box_line(line: str, one_based: bool = True) -> Box:
    """Corner-based ``x,y,w,h`` (or a VOT polygon) to a centre-based box.

    ``(x, y)`` is the top-left pixel; with ``one_based`` it is counted from 1
    as in OTB. Polygons are replaced by their axis-aligned bounding box.
    """
    vals = [float(v) for v in re.split(r"[,\s]+", line.strip()) if v]
    if len(vals) == 4:
        x, y, w, h = vals
    elif len(vals) >= 6 and len(vals) % 2 == 0:
        xs, ys = vals[0::2], vals[1::2]
        x, y = min(xs), min(ys)
        w, h = max(xs) - x, max(ys) - y
    else:
        raise MotionBoxError(f"cannot parse annotation line: {line!r}")
    offset = 1.0 if one_based else 0.0
    return Box.from_corner(x - offset - 0.5, y - offset - 0.5, w, h)


def read_annotations(path: str | os.PathLike, one_based: bool = True) -> list[Box]:
    with open(path, encoding="utf-8") as fh:
        return [parse_box_line(line, one_based) for line in fh if line.strip()]


def read_exclusions(path: str | os.PathLike | None) -> dict[str, str]:
    """``name reason...`` per line; ``#`` starts a comment."""
    if path is None:
        return {}
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            name, _, reason = line.partition(" ")
            out[name.strip().rstrip(",")] = reason.strip() or "excluded"
    return out


def _frame_dir(seq_dir: Path) -> Path:
    img = seq_dir / "img"
    return img if img.is_dir() else seq_dir


def load_sequence(seq_dir: str | os.PathLike, excluded: str | None = None,
                  reannotation_dir: str | os.PathLike | None = None,
                  one_based: bool = True) -> SequenceManifest:
    seq_dir = Path(seq_dir)
    frames = sorted(
        str(p) for p in _frame_dir(seq_dir).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES
    )
    gt_path = None
    if reannotation_dir is not None:
        candidate = Path(reannotation_dir) / f"{seq_dir.name}.txt"
        if candidate.is_file():
            gt_path = candidate
    if gt_path is None:
        for name in GT_NAMES:
            if (seq_dir / name).is_file():
                gt_path = seq_dir / name
                break
    if gt_path is None:
        raise MotionBoxError(f"sequence {seq_dir.name}: no ground-truth file")
    boxes = read_annotations(gt_path, one_based)
    return SequenceManifest(seq_dir.name, frames, boxes, excluded)


def build_pairs(manifest: SequenceManifest, seed: int | np.random.Generator) -> list[PairRecord]:
    """Anchor frames 1, 51, 101, ... each paired with a frame 1-10 later.

    One interval is drawn per anchor, even when the partner falls past the
    end and the pair is dropped, so later draws do not depend on sequence
    length.
    """
    if manifest.excluded is not None:
        raise MotionBoxError(f"sequence {manifest.name} is excluded: {manifest.excluded}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = len(manifest.frame_paths)
    records = []
    for anchor in range(1, n + 1, ANCHOR_STRIDE):
        partner = anchor + int(rng.integers(1, MAX_INTERVAL + 1))
        if partner > n:
            continue
        records.append(PairRecord(
            manifest.name, anchor, partner, manifest.annotations[partner - 1],
            manifest.frame_paths[anchor - 1], manifest.frame_paths[partner - 1],
        ))
    return records


def build_dataset(root: str | os.PathLike, seed: int, exclude: str | os.PathLike | None = None,
                  reannotation_dir: str | os.PathLike | None = None) -> list[PairRecord]:
    """Pairs for every sequence directory under ``root``, in name order."""
    exclusions = read_exclusions(exclude)
    rng = np.random.default_rng(seed)
    records: list[PairRecord] = []
    for seq_dir in sorted(p for p in Path(root).iterdir() if p.is_dir()):
        if seq_dir.name in exclusions:
            log.info("skipping %s: %s", seq_dir.name, exclusions[seq_dir.name])
            continue
        manifest = load_sequence(seq_dir, reannotation_dir=reannotation_dir)
        records.extend(build_pairs(manifest, rng))
    return records


@dataclass
class ValidationReport:
    violations: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, pair_id: str, message: str) -> None:
        self.violations.append((pair_id, message))


def _image_size(path: str) -> tuple[int, int] | None:
    import cv2

    img = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if img is None:
        return None
    return img.shape[1], img.shape[0]


def validate_dataset(records: Sequence[PairRecord], check_files: bool = True) -> ValidationReport:
    report = ValidationReport()
    last_anchor: dict[str, int] = {}
    for rec in records:
        pid = rec.pair_id
        if not 1 <= rec.index_b - rec.index_a <= MAX_INTERVAL:
            report.add(pid, "interval out of range")
        prev = last_anchor.get(rec.sequence)
        if prev is None:
            if (rec.index_a - 1) % ANCHOR_STRIDE:
                report.add(pid, "anchor off the 50-frame grid")
        elif rec.index_a - prev != ANCHOR_STRIDE:
            report.add(pid, "anchor stride is not 50")
        last_anchor[rec.sequence] = rec.index_a
        gt = rec.ground_truth
        if gt.w <= 0 or gt.h <= 0:
            report.add(pid, "box has non-positive size")
        if not check_files:
            continue
        for path in (rec.path_a, rec.path_b):
            if not os.path.isfile(path):
                report.add(pid, f"missing file {path}")
        if os.path.isfile(rec.path_b):
            size = _image_size(rec.path_b)
            if size is None:
                report.add(pid, f"cannot decode {rec.path_b}")
            elif not box_inside(gt, *size, tol=1e-6):
                report.add(pid, "box out of bounds")
    return report


def save_pairs(path: str | os.PathLike, records: Iterable[PairRecord], seed: int | None = None) -> None:
    payload = {"seed": seed, "pairs": [r.to_json() for r in records]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_pairs(path: str | os.PathLike) -> list[PairRecord]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    items = payload["pairs"] if isinstance(payload, dict) else payload
    return [PairRecord.from_json(obj) for obj in items]


def filter_by_tags(records: Sequence[PairRecord], tag_file: str | os.PathLike, tag: str) -> list[PairRecord]:
    """Keep pairs whose sequence carries ``tag`` in a ``name tag1 tag2 ...`` file."""
    tagged = set()
    with open(tag_file, encoding="utf-8") as fh:
        for line in fh:
            parts = line.replace(",", " ").split()
            if len(parts) >= 2 and tag in parts[1:]:
                tagged.add(parts[0])
    return [r for r in records if r.sequence in tagged]
