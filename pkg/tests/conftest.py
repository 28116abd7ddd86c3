import os
import sys
from pathlib import Path

import cv2
import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from motionbox.synthetic import moving_patch_pair, paste, textured_background  # noqa: E402


def write_rgb(path, image):
    cv2.imwrite(str(path), np.ascontiguousarray(image[:, :, ::-1]))


def make_sequence(root: Path, name: str, n_frames: int, seed: int, size: int = 64, patch: int = 12):
    """A tiny OTB-style sequence: ``img/0001.png``... and a 1-based corner GT file."""
    rng = np.random.default_rng(seed)
    seq = root / name
    (seq / "img").mkdir(parents=True)
    bg = textured_background(rng, size, size)
    block = np.full((patch, patch, 3), (250, 235, 215), np.uint8)
    lines = []
    for t in range(n_frames):
        left = 4 + (t * 2) % (size - patch - 8)
        top = size // 2 - patch // 2
        write_rgb(seq / "img" / f"{t + 1:04d}.png", paste(bg, block, left, top))
        lines.append(f"{left + 1},{top + 1},{patch},{patch}")
    (seq / "groundtruth_rect.txt").write_text("\n".join(lines) + "\n")
    return seq


@pytest.fixture
def pair_files(tmp_path):
    f1, f2, gt = moving_patch_pair(0)
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    write_rgb(a, f1)
    write_rgb(b, f2)
    return a, b, gt


@pytest.fixture
def otb_root(tmp_path):
    root = tmp_path / "otb"
    make_sequence(root, "Alpha", 120, 1)
    make_sequence(root, "Beta", 60, 2)
    make_sequence(root, "Gamma", 30, 3)
    return root


@pytest.fixture(scope="session")
def layer_models(tmp_path_factory):
    """Randomly initialised VGG16 taps exported to ONNX (plumbing only)."""
    pytest.importorskip("torch")
    pytest.importorskip("torchvision")
    pytest.importorskip("onnx")
    from motionbox.export_vgg16 import export

    d = tmp_path_factory.mktemp("models")
    return {
        "layer14": export(str(d / "vgg16_layer14.onnx"), "layer14", pretrained=False),
        "layer3": export(str(d / "vgg16_layer3.onnx"), "layer3", pretrained=False),
    }


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance")
        for line in lines:
            terminalreporter.write_line(line)
