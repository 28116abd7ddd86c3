"""Export a truncated VGG16 as an ONNX feature extractor for ``--features deep``.

Needs the ``export`` extra (torch, torchvision, onnx); detection itself only
needs OpenCV to run the exported file.

    python -m motionbox.export_vgg16 --layer layer14 --out vgg16_layer14.onnx

Layers are counted over VGG16's conv and pool modules in order (ReLUs are
folded into their conv), so ``layer3`` ends at the first pool (stride 2, 64
channels) and ``layer14`` at the fourth pool (stride 16, 512 channels).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

IMAGENET_MEAN = [0.485, 0.456, 0.406]
IMAGENET_STD = [0.229, 0.224, 0.225]

# tag -> (counted layer, stride, channels)
TAPS = {
    "layer3": (3, 2, 64),
    "layer14": (14, 16, 512),
}


def counted_layers(features) -> list[int]:
    """Indices into ``features`` that end each counted conv/pool layer."""
    import torch.nn as nn

    ends = []
    for i, m in enumerate(features):
        if isinstance(m, nn.Conv2d):
            ends.append(i + 2)  # keep the ReLU that follows
        elif isinstance(m, nn.MaxPool2d):
            ends.append(i + 1)
    return ends


def build(layer: str, pretrained: bool = True):
    import torch.nn as nn
    import torchvision

    if layer not in TAPS:
        raise ValueError(f"unknown layer tag {layer!r}; choose from {sorted(TAPS)}")
    weights = torchvision.models.VGG16_Weights.IMAGENET1K_V1 if pretrained else None
    vgg = torchvision.models.vgg16(weights=weights)
    n, _, _ = TAPS[layer]
    keep = counted_layers(vgg.features)[n - 1]
    return nn.Sequential(*list(vgg.features.children())[:keep]).eval()


def export(out_path: str, layer: str = "layer14", pretrained: bool = True) -> str:
    import torch

    model = build(layer, pretrained)
    os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
    _, stride, channels = TAPS[layer]
    dummy = torch.zeros(1, 3, 224, 224)
    torch.onnx.export(
        model, dummy, out_path,
        input_names=["image"], output_names=["features"],
        dynamic_axes={"image": {2: "height", 3: "width"}, "features": {2: "fh", 3: "fw"}},
        opset_version=17, dynamo=False,
    )
    meta = {
        "layer_tag": layer,
        "stride": stride,
        "channels": channels,
        "mean": IMAGENET_MEAN,
        "std": IMAGENET_STD,
        "pretrained": bool(pretrained),
    }
    with open(os.path.splitext(out_path)[0] + ".json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return out_path


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="python -m motionbox.export_vgg16", description=__doc__.split("\n")[0])
    p.add_argument("--layer", choices=sorted(TAPS), default="layer14")
    p.add_argument("--out", required=True)
    p.add_argument("--random-weights", action="store_true",
                   help="skip the ImageNet download (for plumbing tests only)")
    args = p.parse_args(argv)
    try:
        export(args.out, args.layer, pretrained=not args.random_weights)
    except ImportError as exc:
        print(f"error: export needs torch, torchvision and onnx ({exc})", file=sys.stderr)
        return 1
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
