import numpy as np

from motionbox.evalharness import EvalResult, PairResult, read_curves_csv, write_curves_csv
from motionbox.plotting import plot_curves


def test_plot_curves_writes_pngs(tmp_path):
    good = EvalResult([PairResult(str(i), 0.8, 4.0) for i in range(5)])
    bad = EvalResult([PairResult(str(i), 0.1, 60.0) for i in range(5)])
    write_curves_csv(tmp_path / "c.csv", {"good": good, "bad": bad})
    paths = plot_curves(read_curves_csv(tmp_path / "c.csv"), tmp_path / "out")
    for p in paths:
        with open(p, "rb") as fh:
            assert fh.read(8) == b"\x89PNG\r\n\x1a\n"
