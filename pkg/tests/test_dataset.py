import json

import numpy as np
import pytest

from motionbox.core import Box, MotionBoxError
from motionbox.dataset import (
    PairRecord,
    SequenceManifest,
    build_dataset,
    build_pairs,
    filter_by_tags,
    load_pairs,
    load_sequence,
    parse_box_line,
    read_exclusions,
    save_pairs,
    validate_dataset,
)


def manifest(n, name="seq"):
    return SequenceManifest(name, [f"{name}/{i:04d}.png" for i in range(1, n + 1)], [Box(10, 10, 4, 4)] * n)


def test_short_sequence():
    for seed in range(30):
        draw = int(np.random.default_rng(seed).integers(1, 11))
        pairs = build_pairs(manifest(4), seed)
        if draw <= 3:
            assert [(p.index_a, p.index_b) for p in pairs] == [(1, 1 + draw)]
        else:
            assert pairs == []


def test_anchor_pattern_200_frames():
    pairs = build_pairs(manifest(200), 0)
    assert [p.index_a for p in pairs] == [1, 51, 101, 151]
    assert all(1 <= p.index_b - p.index_a <= 10 for p in pairs)


def test_fixed_seed_reproducible():
    a = [p.to_json() for p in build_pairs(manifest(500), 42)]
    b = [p.to_json() for p in build_pairs(manifest(500), 42)]
    assert a == b
    c = [p.to_json() for p in build_pairs(manifest(500), 43)]
    assert a != c


def test_ground_truth_is_partner_frame():
    m = SequenceManifest("s", [f"{i}.png" for i in range(60)], [Box(i, i, 4, 4) for i in range(60)])
    for p in build_pairs(m, 1):
        assert p.ground_truth == m.annotations[p.index_b - 1]
        assert p.path_b == m.frame_paths[p.index_b - 1]


def test_parse_box_line_one_based_corner():
    b = parse_box_line("11,21,4,6")
    assert b.pixel_rect() == (10, 20, 14, 26)
    assert parse_box_line("11\t21\t4\t6") == b


def test_parse_polygon():
    b = parse_box_line("1,1,5,1,5,4,1,4", one_based=False)
    assert (b.w, b.h) == (4, 3)


def test_parse_garbage():
    with pytest.raises(MotionBoxError):
        parse_box_line("1,2,3")


def test_exclusions(tmp_path):
    f = tmp_path / "ex.txt"
    f.write_text("# header\nBeta camera shake\nGamma\n")
    assert read_exclusions(f) == {"Beta": "camera shake", "Gamma": "excluded"}


def test_build_dataset_and_roundtrip(otb_root, tmp_path):
    ex = tmp_path / "ex.txt"
    ex.write_text("Gamma too short\n")
    recs = build_dataset(otb_root, 7, ex)
    assert {r.sequence for r in recs} <= {"Alpha", "Beta"}
    assert [r.index_a for r in recs if r.sequence == "Alpha"] == [1, 51, 101][: len([r for r in recs if r.sequence == "Alpha"])]
    assert validate_dataset(recs).ok
    out = tmp_path / "pairs.json"
    save_pairs(out, recs, seed=7)
    assert json.loads(out.read_text())["seed"] == 7
    assert load_pairs(out) == recs
    again = tmp_path / "again.json"
    save_pairs(again, build_dataset(otb_root, 7, ex), seed=7)
    assert out.read_bytes() == again.read_bytes()


def test_reannotation_overrides(otb_root, tmp_path):
    re_dir = tmp_path / "re"
    re_dir.mkdir()
    (re_dir / "Beta.txt").write_text("\n".join(["1,1,5,5"] * 60) + "\n")
    m = load_sequence(otb_root / "Beta", reannotation_dir=re_dir)
    assert all(b.pixel_rect() == (0, 0, 5, 5) for b in m.annotations)


def test_frame_annotation_count_mismatch():
    with pytest.raises(MotionBoxError):
        SequenceManifest("s", ["a", "b"], [Box(1, 1, 2, 2)])


def test_validate_flags_bad_interval():
    rec = PairRecord("s", 1, 13, Box(10, 10, 4, 4), "a", "b")
    rep = validate_dataset([rec], check_files=False)
    assert ("s:000001-000013", "interval out of range") in rep.violations


def test_validate_flags_box_out_of_bounds(otb_root):
    img = str(otb_root / "Alpha" / "img" / "0001.png")
    rec = PairRecord("Alpha", 1, 3, Box(60, 30, 12, 12), img, img)
    rep = validate_dataset([rec])
    assert [m for _, m in rep.violations] == ["box out of bounds"]


def test_validate_flags_missing_file(tmp_path):
    rec = PairRecord("s", 1, 3, Box(10, 10, 4, 4), str(tmp_path / "a.png"), str(tmp_path / "b.png"))
    assert any("missing file" in m for _, m in validate_dataset([rec]).violations)


def test_filter_by_tags(tmp_path):
    recs = [PairRecord(s, 1, 2, Box(5, 5, 2, 2), "a", "b") for s in ("A", "B", "C")]
    tags = tmp_path / "tags.txt"
    tags.write_text("A occlusion fast\nB fast\nC occlusion\n")
    assert [r.sequence for r in filter_by_tags(recs, tags, "occlusion")] == ["A", "C"]
