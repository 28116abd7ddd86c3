import numpy as np
import pytest

from motionbox.core import Box, MotionBoxError, NoMotionError
from motionbox.dataset import PairRecord
from motionbox.evalharness import (
    ABLATION_METHODS,
    EvalResult,
    PairResult,
    center_error,
    evaluate,
    iou,
    method_detector,
    parse_methods,
    precision_curve,
    read_curves_csv,
    run_ablation,
    success_curve,
    write_curves_csv,
    write_results_csv,
    write_table_csv,
)


def test_iou_hand_cases():
    a = Box.from_corner(0, 0, 2, 2)
    assert iou(a, a) == 1.0
    assert iou(a, Box.from_corner(5, 5, 2, 2)) == 0.0
    assert iou(a, Box.from_corner(1, 0, 2, 2)) == pytest.approx(1 / 3, abs=1e-15)


def test_center_error_hand_cases():
    assert center_error(Box(1, 1, 2, 2), Box(1, 1, 5, 5)) == 0
    assert center_error(Box(0, 0, 2, 2), Box(3, 4, 2, 2)) == 5


def test_iou_random_against_formula():
    rng = np.random.default_rng(0)
    for _ in range(200):
        l1, t1, l2, t2 = rng.uniform(0, 20, 4)
        w1, h1, w2, h2 = rng.uniform(0.5, 15, 4)
        inter = max(0, min(l1 + w1, l2 + w2) - max(l1, l2)) * max(0, min(t1 + h1, t2 + h2) - max(t1, t2))
        want = inter / (w1 * h1 + w2 * h2 - inter)
        assert iou(Box.from_corner(l1, t1, w1, h1), Box.from_corner(l2, t2, w2, h2)) == pytest.approx(want, abs=1e-12)


def test_curves_monotone():
    rng = np.random.default_rng(1)
    for _ in range(20):
        s = success_curve(rng.random(50))
        p = precision_curve(rng.random(50) * 80)
        assert np.all(np.diff(s) <= 0) and np.all(np.diff(p) >= 0)


def _sanity_records(n=20):
    rng = np.random.default_rng(2)
    return [PairRecord("seq", 1 + 50 * i, 2 + 50 * i, Box(*rng.uniform(40, 80, 2), 20, 20), "a", "b")
            for i in range(n)]


def test_perfect_detector():
    res = evaluate(_sanity_records(), lambda r: r.ground_truth)
    assert np.all(res.success[:-1] == 1.0)
    assert res.auc >= 0.99
    assert res.pre30 == 1.0


def test_corner_detector():
    res = evaluate(_sanity_records(), lambda r: Box.from_corner(-0.5, -0.5, 2, 2))
    assert res.auc <= 0.01 and res.pre30 == 0.0


def test_failures_count_as_misses(tmp_path):
    def det(r):
        raise NoMotionError("no motion")

    res = evaluate(_sanity_records(3), det)
    assert all(p.iou == 0 and p.error == "no motion" for p in res.pairs)
    assert res.pre30 == 0


def test_parallel_matches_serial():
    recs = _sanity_records()
    det = lambda r: Box(r.ground_truth.x + 3, r.ground_truth.y, 20, 18)  # noqa: E731
    a, b = evaluate(recs, det, jobs=1), evaluate(recs, det, jobs=4)
    assert [p.iou for p in a.pairs] == [p.iou for p in b.pairs]
    assert np.array_equal(a.success, b.success)


def test_parse_methods():
    assert parse_methods("0-10") == list(range(11))
    assert parse_methods("0,2,7-9") == [0, 2, 7, 8, 9]
    with pytest.raises(MotionBoxError):
        parse_methods("11")


def test_method_rows_match_table():
    flags = {m: (r.lpc, r.cpc, r.sgd) for m, r in ABLATION_METHODS.items()}
    assert flags[0] == (False, False, False)
    assert flags[7] == (False, False, True) and ABLATION_METHODS[7].target_source == "mask"
    assert flags[8] == (False, True, True)
    assert flags[9] == (True, False, True)
    assert flags[10] == (True, True, False)
    assert ABLATION_METHODS[6].features == ("LAYER3", "LAYER14", "HOG")


def test_deep_methods_need_backend():
    with pytest.raises(MotionBoxError, match="LAYER14"):
        method_detector(ABLATION_METHODS[2], {})


def test_csv_roundtrip(tmp_path):
    res = EvalResult([PairResult("a", 0.7, 3.0), PairResult("b", 0.2, 40.0)])
    path = tmp_path / "curves.csv"
    write_curves_csv(path, {"raw": res, "hog": res})
    back = read_curves_csv(path)
    assert set(back) == {"raw", "hog"}
    assert np.allclose(back["raw"]["success"], res.success)
    assert np.allclose(back["hog"]["precision"], res.precision)
    write_results_csv(tmp_path / "r.csv", res)
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == "pair_id,iou,center_error"


def test_table_layout(tmp_path, pair_files):
    a, b, gt = pair_files
    recs = [PairRecord("s", 1, 11, gt, str(a), str(b))]
    results = run_ablation(recs, [0, 1, 4])
    path = tmp_path / "table.csv"
    write_table_csv(path, results)
    rows = [line.split(",") for line in path.read_text().splitlines()]
    assert rows[0] == ["Methods", "0", "1", "4"]
    assert [r[0] for r in rows] == ["Methods", "Layer3", "Layer14", "HOG", "RAW", "BIN", "LPC", "CPC", "SGD",
                                    "SR", "PRE (30)"]
    assert rows[4][1:] == ["x", "x", ""]
    assert rows[3][1:] == ["", "", "x"]
