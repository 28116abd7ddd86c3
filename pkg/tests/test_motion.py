import numpy as np
import pytest

from motionbox.core import DetectorConfig, MotionBoxError
from motionbox.features import FeatureBackendSpec, FeatureMap
from motionbox.motion import binarize, extract_motion_mask, feature_difference, rebinarize, upsample
from motionbox.synthetic import paste, textured_background
from oracles import naive_feature_difference, naive_threshold


def fmap(values):
    values = np.asarray(values, dtype=float)
    return FeatureMap(values, 1, values.shape[1], values.shape[0])


def test_identical_features_give_zero():
    v = np.random.default_rng(0).random((5, 6, 4))
    assert not feature_difference(fmap(v), fmap(v)).any()


def test_single_cell_hand_value():
    f1 = np.zeros((3, 3, 2))
    f2 = np.zeros((3, 3, 2))
    f2[1, 2] = (3, -4)
    d = feature_difference(fmap(f1), fmap(f2))
    assert d[1, 2] == 7
    assert d.sum() == 7


def test_difference_matches_naive_loop():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(6, 7, 5)), rng.normal(size=(6, 7, 5))
    assert np.allclose(feature_difference(fmap(a), fmap(b)), naive_feature_difference(a, b), atol=1e-12)


def test_difference_shape_mismatch():
    with pytest.raises(MotionBoxError):
        feature_difference(fmap(np.zeros((3, 3, 2))), fmap(np.zeros((3, 4, 2))))


def test_binarize_hand_values():
    assert binarize(np.array([10.0, 8.0, 7.9]), 0.8).tolist() == [1, 1, 0]
    assert not binarize(np.zeros((4, 4)), 0.8).any()


def test_binarize_matches_naive():
    d = np.random.default_rng(2).random((9, 11))
    assert np.array_equal(binarize(d, 0.8), naive_threshold(d, 0.8))


def test_rebinarize_clips_overshoot():
    assert rebinarize(np.array([-0.2, 0.49, 0.5, 1.3]), 0.5).tolist() == [0, 0, 1, 1]


def test_upsample_crops_to_frame():
    grid = FeatureMap(np.zeros((7, 9, 1)), 8, 70, 50)
    up = upsample(np.ones((7, 9)), grid)
    assert up.shape == (50, 70)


def test_identical_frames_no_motion():
    img = textured_background(np.random.default_rng(0), 64, 64)
    assert extract_motion_mask(img, img, FeatureBackendSpec.raw()).non_zero_count == 0


def _shift_fixture(brightness=0):
    rng = np.random.default_rng(5)
    bg = textured_background(rng, 64, 64)
    patch = np.full((16, 16, 3), (255, 255, 255), np.uint8)
    f1 = paste(bg, patch, 16, 24)
    f2 = paste(bg, patch, 24, 24)
    if brightness:
        f2 = np.clip(f2.astype(int) + brightness, 0, 255).astype(np.uint8)
    # patch centres are (23.5, 31.5) and (31.5, 31.5)
    return f1, f2, (27.5, 31.5)


@pytest.mark.parametrize("spec", [FeatureBackendSpec.raw(), FeatureBackendSpec.hog()])
def test_moving_patch_mask_centred(spec):
    f1, f2, mid = _shift_fixture()
    mm = extract_motion_mask(f1, f2, spec)
    assert mm.non_zero_count > 0
    rows, cols = np.nonzero(mm.frame_mask)
    assert np.hypot(cols.mean() - mid[0], rows.mean() - mid[1]) <= 8
    # set pixels stay near the union of the two patch positions, dilated by
    # the bicubic support (two cells) at the feature stride
    pad = 2 * mm.grid.stride
    assert cols.min() >= 16 - pad and cols.max() < 40 + pad
    assert rows.min() >= 24 - pad and rows.max() < 40 + pad


def test_global_brightness_shift_still_centred():
    f1, f2, mid = _shift_fixture(brightness=10)
    mm = extract_motion_mask(f1, f2, FeatureBackendSpec.raw())
    rows, cols = np.nonzero(mm.frame_mask)
    assert np.hypot(cols.mean() - mid[0], rows.mean() - mid[1]) <= 8


def test_fused_specs_or_masks():
    f1, f2, _ = _shift_fixture()
    raw = extract_motion_mask(f1, f2, FeatureBackendSpec.raw()).frame_mask
    hog = extract_motion_mask(f1, f2, FeatureBackendSpec.hog()).frame_mask
    fused = extract_motion_mask(f1, f2, [FeatureBackendSpec.raw(), FeatureBackendSpec.hog()])
    assert fused.feature_mask is None
    assert np.array_equal(fused.frame_mask, raw | hog)


def test_frame_size_mismatch():
    with pytest.raises(MotionBoxError):
        extract_motion_mask(np.zeros((40, 40, 3), np.uint8), np.zeros((40, 48, 3), np.uint8),
                            FeatureBackendSpec.raw())


def test_deep_mask_runs(layer_models):
    f1, f2, _ = _shift_fixture()
    spec = FeatureBackendSpec.deep(layer_models["layer14"], "layer14")
    mm = extract_motion_mask(f1, f2, spec, DetectorConfig())
    assert mm.feature_mask.shape == (4, 4)
    assert mm.frame_mask.shape == (64, 64)
