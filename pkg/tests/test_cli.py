import json
import subprocess
import sys

import pytest

from boxfusion.cli import main
from boxfusion.io import load_ground_truth, load_predictions, read_fused, read_pr_curve
from boxfusion.pipeline import fuse_index, single_model
from boxfusion.evaluation import ap_report


@pytest.fixture
def two_box(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    g = tmp_path / "gt.csv"
    a.write_text("img1,0,0,10,10,0.8\n")
    b.write_text("img1,0,0,10,12,0.4\n")
    g.write_text("img1,0,0,10,10\n")
    return a, b, g


class TestFuse:
    def test_single_model_disjoint_identity(self, tmp_path):
        src = tmp_path / "p.csv"
        src.write_text("i1,0,0,1,1,0.9\ni1,5,5,6,6,0.4\ni2,2,2,3,4,0.7\n")
        out = tmp_path / "o.csv"
        assert main(["fuse", str(src), "--out", str(out)]) == 0
        assert out.read_text().splitlines()[1:] == ["i1,0,0,1,1,0.9", "i1,5,5,6,6,0.4", "i2,2,2,3,4,0.7"]

    def test_two_models_worked_example(self, two_box, tmp_path, capsys):
        a, b, _ = two_box
        out = tmp_path / "f.csv"
        assert main(["fuse", str(a), str(b), "--out", str(out)]) == 0
        d = read_fused(out)["img1"]
        assert len(d) == 1
        assert d[0].box.as_tuple() == pytest.approx((0, 0, 10, 10.6667), abs=1e-4)
        assert d[0].confidence == pytest.approx(0.6)
        assert "2 boxes in, 1 boxes out" in capsys.readouterr().out

    def test_nms(self, two_box, tmp_path):
        a, b, _ = two_box
        out = tmp_path / "f.csv"
        assert main(["fuse", str(a), str(b), "--method", "nms", "--out", str(out)]) == 0
        assert out.read_text().splitlines()[1:] == ["img1,0,0,10,10,0.8"]

    def test_soft_nms(self, two_box, tmp_path):
        a, b, _ = two_box
        out = tmp_path / "f.csv"
        assert main(["fuse", str(a), str(b), "--method", "soft-nms", "--out", str(out)]) == 0
        confs = [d.confidence for d in read_fused(out)["img1"]]
        assert confs == pytest.approx([0.8, 0.4 * (1 - 100 / 120)])

    def test_jsonl_format(self, two_box, tmp_path):
        a, b, _ = two_box
        out = tmp_path / "f.jsonl"
        assert main(["fuse", str(a), str(b), "--format", "csv", "--out", str(out)]) == 0
        # --format applies to all files, so the output is CSV too
        assert out.read_text().startswith("# image_id")
        out2 = tmp_path / "g.jsonl"
        assert main(["fuse", str(a), str(b), "--out", str(out2)]) == 0
        assert json.loads(out2.read_text().splitlines()[0])["score"] == 0.6

    def test_clamp(self, tmp_path):
        src = tmp_path / "p.csv"
        src.write_text("i,0,0,10,10,0.8\ni,0,0,10,10.5,0.8\ni,0,0,10,10.2,0.8\n")
        empty = tmp_path / "e.csv"
        empty.write_text("")
        out = tmp_path / "o.csv"
        main(["fuse", str(src), str(empty), "--out", str(out)])
        assert read_fused(out)["i"][0].confidence == pytest.approx(1.2)
        main(["fuse", str(src), str(empty), "--clamp", "--out", str(out)])
        assert read_fused(out)["i"][0].confidence == 1.0

    def test_bad_input_exit_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("img1,0,0,10,10,1.2\n")
        assert main(["fuse", str(bad), "--out", str(tmp_path / "o.csv")]) == 1
        err = capsys.readouterr().err
        assert "bad.csv:1" in err and "score" in err

    def test_missing_file_exit_1(self, tmp_path):
        assert main(["fuse", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o.csv")]) == 1

    @pytest.mark.parametrize("flag", [["--thr", "1.5"], ["--thr", "0"], ["--method", "vote"]])
    def test_bad_flags_exit_1(self, two_box, tmp_path, flag):
        a, _, _ = two_box
        assert main(["fuse", str(a), "--out", str(tmp_path / "o.csv"), *flag]) == 1

    def test_internal_error_exit_2(self, two_box, tmp_path, monkeypatch):
        import boxfusion.cli as cli

        def boom(*_a, **_k):
            raise RuntimeError("boom")

        monkeypatch.setattr(cli, "fuse_index", boom)
        a, _, _ = two_box
        assert main(["fuse", str(a), "--out", str(tmp_path / "o.csv")]) == 2


class TestEval:
    def test_perfect(self, two_box, tmp_path, capsys):
        a, _, g = two_box
        out = tmp_path / "m.json"
        assert main(["eval", str(a), "--gt", str(g), "--out", str(out)]) == 0
        m = json.loads(out.read_text())
        assert m == {"precision": 1.0, "recall": 1.0, "f1": 1.0, "ap50": 1.0, "ap75": 1.0, "ap": 1.0}
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].split() == ["Precision", "Recall", "F1", "AP_0.5", "AP_0.75", "AP"]
        assert lines[1].split() == ["1.0000"] * 6

    def test_ranked_example(self, tmp_path, capsys):
        p = tmp_path / "p.csv"
        p.write_text("a,0,0,10,10,0.9\na,50,50,60,60,0.8\na,20,20,30,30,0.7\n")
        g = tmp_path / "g.csv"
        g.write_text("a,0,0,10,10\na,20,20,30,30\n")
        assert main(["eval", str(p), "--gt", str(g)]) == 0
        row = capsys.readouterr().out.splitlines()[1].split()
        assert row[3] == "0.8350"

    def test_empty_predictions(self, tmp_path, capsys):
        p = tmp_path / "p.csv"
        p.write_text("")
        g = tmp_path / "g.csv"
        g.write_text("a,0,0,10,10\n")
        out = tmp_path / "m.json"
        assert main(["eval", str(p), "--gt", str(g), "--out", str(out)]) == 0
        m = json.loads(out.read_text())
        assert m["recall"] == 0 and m["ap50"] == 0 and m["ap"] == 0

    def test_score_threshold(self, tmp_path):
        p = tmp_path / "p.csv"
        p.write_text("a,0,0,10,10,0.9\na,50,50,60,60,0.3\n")
        g = tmp_path / "g.csv"
        g.write_text("a,0,0,10,10\n")
        out = tmp_path / "m.json"
        main(["eval", str(p), "--gt", str(g), "--out", str(out)])
        assert json.loads(out.read_text())["precision"] == 0.5
        main(["eval", str(p), "--gt", str(g), "--score-thr", "0.5", "--out", str(out)])
        m = json.loads(out.read_text())
        assert m["precision"] == 1.0 and m["ap50"] == 1.0

    def test_missing_gt_exit_1(self, two_box, tmp_path):
        a, _, _ = two_box
        assert main(["eval", str(a), "--gt", str(tmp_path / "none.csv")]) == 1

    def test_warning_to_stderr(self, two_box, tmp_path, capsys):
        a, _, _ = two_box
        g = tmp_path / "g.csv"
        g.write_text("other,0,0,1,1\n")
        assert main(["eval", str(a), "--gt", str(g)]) == 0
        assert "warning" in capsys.readouterr().err


class TestCurve:
    def test_csv(self, two_box, tmp_path):
        a, _, g = two_box
        out = tmp_path / "c.csv"
        assert main(["curve", str(a), "--gt", str(g), "--out", str(out)]) == 0
        assert read_pr_curve(out) == [(1.0, 1.0)]

    def test_svg_multi(self, scene, tmp_path):
        g, (m0, m1) = scene
        out = tmp_path / "c.svg"
        assert main(["curve", str(m0), str(m1), "--gt", str(g), "--out", str(out)]) == 0
        svg = out.read_text()
        assert svg.count("<polyline") == 3
        for name in ("model0", "model1", "wbf"):
            assert f">{name}<" in svg

    def test_csv_multi(self, scene, tmp_path):
        g, (m0, m1) = scene
        out = tmp_path / "c.csv"
        assert main(["curve", str(m0), str(m1), "--gt", str(g), "--out", str(out)]) == 0
        for name in ("model0", "model1", "wbf"):
            assert (tmp_path / f"c_{name}.csv").exists()


class TestSweep:
    def test_single_thr_matches_fuse_eval(self, scene, tmp_path):
        g, models = scene
        table = tmp_path / "s.csv"
        assert main(["sweep", *map(str, models), "--gt", str(g), "--thr", "0.6", "--out", str(table)]) == 0
        row = [float(v) for v in table.read_text().splitlines()[1].split(",")]
        fused = tmp_path / "f.csv"
        metrics = tmp_path / "m.json"
        main(["fuse", *map(str, models), "--thr", "0.6", "--out", str(fused)])
        main(["eval", str(fused), "--gt", str(g), "--out", str(metrics)])
        m = json.loads(metrics.read_text())
        assert row == pytest.approx([0.6, m["ap50"], m["ap75"], m["ap"]], abs=1e-8)

    def test_identical_models_rows_identical(self, tmp_path):
        g = tmp_path / "g.csv"
        g.write_text("a,0,0,10,10\na,30,30,45,40\n")
        a = tmp_path / "a.csv"
        a.write_text("a,0,0,10,11,0.9\na,31,30,45,40,0.6\na,80,80,90,90,0.2\n")
        b = tmp_path / "b.csv"
        b.write_text(a.read_text())
        table = tmp_path / "s.csv"
        assert main(["sweep", str(a), str(b), "--gt", str(g), "--out", str(table)]) == 0
        rows = [line.split(",")[1:] for line in table.read_text().splitlines()[1:]]
        assert len(rows) == 6
        assert all(r == rows[0] for r in rows)

    def test_rerun_oracle(self, scene, tmp_path):
        g, models = scene
        table = tmp_path / "s.csv"
        thrs = ["0.4", "0.55", "0.7", "0.8"]
        assert main(["sweep", *map(str, models), "--gt", str(g), "--thr", *thrs, "--out", str(table)]) == 0
        rows = [[float(v) for v in line.split(",")] for line in table.read_text().splitlines()[1:]]
        index = load_predictions(models)
        gts = load_ground_truth(g)
        for row, thr in zip(rows, thrs):
            r = ap_report(fuse_index(index, "wbf", float(thr)), gts)
            assert row[1:] == pytest.approx([r.ap50, r.ap75, r.ap_range], abs=1e-8)
        diffs = [b[1] - a[1] for a, b in zip(rows, rows[1:])]
        assert any(abs(d) > 0 for d in diffs)

    def test_needs_two_models(self, scene):
        g, models = scene
        assert main(["sweep", str(models[0]), "--gt", str(g)]) == 1


class TestBnnDemo:
    def test_boundaries(self, tmp_path):
        out = tmp_path / "m.json"
        assert main(["bnn-demo", "--seed", "3", "--gamma", "0", "--out", str(out)]) == 0
        m = json.loads(out.read_text())
        assert m["recall"] == 0.0
        assert main(["bnn-demo", "--seed", "3", "--gamma", "1", "--out", str(out)]) == 0
        m = json.loads(out.read_text())
        assert m["recall"] == 1.0
        assert m["precision"] == 0.5  # held-out split is half positives

    def test_save_params(self, tmp_path):
        from boxfusion.bnn import load_params
        p = tmp_path / "p.txt"
        assert main(["bnn-demo", "--save-params", str(p)]) == 0
        assert load_params(p).common_dim == 50


def test_module_entry_point(two_box, tmp_path):
    a, b, _ = two_box
    out = tmp_path / "f.csv"
    r = subprocess.run([sys.executable, "-m", "boxfusion", "fuse", str(a), str(b), "--out", str(out)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert out.exists()


def test_single_model_helper(two_box):
    a, _, _ = two_box
    assert len(single_model(load_predictions([a]))["img1"]) == 1
