"""Class-agnostic moving-target detection from image pairs."""

from .core import (
    Box,
    DetectorConfig,
    Frame,
    MotionBoxError,
    NoMotionError,
    bicubic_resize,
    box_sum,
    integral_image,
    load_config,
    load_frame,
)
from .features import FeatureBackendSpec, FeatureKind, FeatureMap, extract
from .motion import MotionMask, extract_motion_mask
from .boxopt import TargetMap, detect, initial_box, optimize_box, score

__version__ = "0.1.0"

__all__ = [
    "Box",
    "DetectorConfig",
    "FeatureBackendSpec",
    "FeatureKind",
    "FeatureMap",
    "Frame",
    "MotionBoxError",
    "MotionMask",
    "NoMotionError",
    "TargetMap",
    "bicubic_resize",
    "box_sum",
    "detect",
    "extract",
    "extract_motion_mask",
    "initial_box",
    "integral_image",
    "load_config",
    "load_frame",
    "optimize_box",
    "score",
]
