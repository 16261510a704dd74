import subprocess
import sys

import numpy as np
import pytest

from pottscert.cli import main
from pottscert.imageio import read_image, write_pgm
from pottscert.model import read_instance


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def lines_to_dict(out):
    d = {}
    for line in out.splitlines():
        parts = line.split(None, 1)
        if len(parts) == 2:
            d[parts[0]] = parts[1]
    return d


class TestBuild:
    def test_golden_triangle_solve_and_lp(self, tmp_path, capsys):
        path = str(tmp_path / "t.potts")
        code, _ = run_cli(capsys, "build", "golden", "triangle", "--eps", "0.1", "-o", path)
        assert code == 0
        code, out = run_cli(capsys, "solve", path)
        assert code == 0
        d = lines_to_dict(out)
        assert d["labeling"] == "1 0 1"
        assert float(d["objective"]) == 2.0
        code, out = run_cli(capsys, "lp", path)
        d = lines_to_dict(out)
        assert float(d["objective"]) == pytest.approx(1.65, abs=1e-6)
        assert float(d["persistent_fraction"]) == 0.0
        assert d["fractional"] == "0 1 2"
        assert (tmp_path / "t.potts.sol").exists()
        assert (tmp_path / "t.potts.dual").exists()

    def test_grid_build_is_deterministic(self, tmp_path, capsys):
        a, b = str(tmp_path / "a.potts"), str(tmp_path / "b.potts")
        run_cli(capsys, "build", "grid", "--rows", "3", "--cols", "3", "--k", "3",
                "--seed", "42", "-o", a)
        run_cli(capsys, "build", "grid", "--rows", "3", "--cols", "3", "--k", "3",
                "--seed", "42", "-o", b)
        assert open(a).read() == open(b).read()

    def test_stereo_build_defaults(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        left = rng.integers(0, 200, size=(4, 6))
        lp_, rp_ = tmp_path / "l.pgm", tmp_path / "r.pgm"
        write_pgm(lp_, left)
        write_pgm(rp_, left)
        out_path = str(tmp_path / "s.potts")
        code, _ = run_cli(capsys, "build", "stereo", "--left", str(lp_), "--right",
                          str(rp_), "--k", "3", "-o", out_path)
        assert code == 0
        inst = read_instance(out_path)
        assert inst.num_nodes == 24 and inst.num_labels == 3

    def test_segmentation_build(self, tmp_path, capsys):
        from pottscert.imageio import write_ppm

        rng = np.random.default_rng(1)
        img = rng.integers(0, 255, size=(2, 3, 3))
        ip = tmp_path / "img.ppm"
        write_ppm(ip, img)
        cp = tmp_path / "costs.txt"
        cp.write_text("\n".join("0 1 2" for _ in range(6)) + "\n")
        out_path = str(tmp_path / "seg.potts")
        code, _ = run_cli(capsys, "build", "segmentation", "--image", str(ip),
                          "--costs", str(cp), "-o", out_path)
        assert code == 0
        assert read_instance(out_path).num_labels == 3

    def test_missing_input_errors(self, tmp_path, capsys):
        code = main(["solve", str(tmp_path / "nope.potts")])
        assert code == 1


class TestCheckStable:
    def test_combined_unstable_with_witness_file(self, tmp_path, capsys):
        path = str(tmp_path / "c.potts")
        run_cli(capsys, "build", "golden", "combined", "-o", path)
        code, out = run_cli(capsys, "check-stable", path, "--beta", "2", "--gamma", "1")
        assert code == 0
        d = lines_to_dict(out)
        assert d["stable"] == "0"
        assert d["hamming"] == "1"
        assert (tmp_path / "c.potts.witness").read_text().split() == \
            ["0", "0", "0", "1", "1", "0"]

    def test_identity_bounds_on_unique_optimum(self, tmp_path, capsys):
        path = str(tmp_path / "t.potts")
        run_cli(capsys, "build", "golden", "triangle", "-o", path)
        code, out = run_cli(capsys, "check-stable", path, "--beta", "1", "--gamma", "1")
        assert lines_to_dict(out)["stable"] == "1"

    def test_block_flag(self, tmp_path, capsys):
        path = str(tmp_path / "c.potts")
        run_cli(capsys, "build", "golden", "combined", "-o", path)
        bf = tmp_path / "block.txt"
        bf.write_text("0 1 2\n")
        code, out = run_cli(capsys, "check-stable", path, "--beta", "2",
                            "--gamma", "1", "--block", str(bf))
        assert code == 0
        assert "stable" in lines_to_dict(out)


class TestFindBlocks:
    def test_report_and_plot(self, tmp_path, capsys):
        path = str(tmp_path / "g.potts")
        run_cli(capsys, "build", "grid", "--rows", "3", "--cols", "3", "--k", "2",
                "--seed", "5", "-o", path)
        rep = str(tmp_path / "g.report")
        png = str(tmp_path / "g.png")
        code, out = run_cli(capsys, "find-blocks", path, "--beta", "2", "--gamma", "1",
                            "--iters", "3", "--report", rep, "--plot", png,
                            "--rows", "3", "--cols", "3")
        assert code == 0
        d = lines_to_dict(out)
        assert "certified_fraction" in d
        assert (tmp_path / "g.report").exists()
        assert (tmp_path / "g.png").exists()

    def test_optimized_flag(self, tmp_path, capsys):
        path = str(tmp_path / "g.potts")
        run_cli(capsys, "build", "grid", "--rows", "2", "--cols", "3", "--k", "2",
                "--seed", "6", "-o", path)
        code, out = run_cli(capsys, "find-blocks", path, "--iters", "2", "--optimized")
        assert code == 0

    def test_zero_iterations_rejected(self, tmp_path, capsys):
        path = str(tmp_path / "g.potts")
        run_cli(capsys, "build", "grid", "--rows", "2", "--cols", "2", "--k", "2",
                "--seed", "7", "-o", path)
        code = main(["find-blocks", path, "--iters", "0"])
        assert code == 1


class TestRender:
    def _tiny_grid_report(self, tmp_path, capsys, rows=2, cols=3):
        path = str(tmp_path / "g.potts")
        run_cli(capsys, "build", "grid", "--rows", str(rows), "--cols", str(cols),
                "--k", "2", "--seed", "8", "-o", path)
        rep = str(tmp_path / "g.report")
        run_cli(capsys, "find-blocks", path, "--iters", "2", "--report", rep)
        return path, rep

    def test_render_produces_valid_ppm(self, tmp_path, capsys):
        path, rep = self._tiny_grid_report(tmp_path, capsys)
        out_path = str(tmp_path / "m.ppm")
        code, _ = run_cli(capsys, "render", "--report", rep, "--instance", path,
                          "--rows", "2", "--cols", "3", "-o", out_path)
        assert code == 0
        img = read_image(out_path)
        assert img.shape == (2, 3, 3)
        for px in img.reshape(-1, 3):
            assert tuple(px) in {(255, 0, 0), (0, 255, 0)} or px[0] == px[1] == px[2]

    def test_dimension_mismatch_rejected(self, tmp_path, capsys):
        path, rep = self._tiny_grid_report(tmp_path, capsys)
        code = main(["render", "--report", rep, "--instance", path,
                     "--rows", "4", "--cols", "4", "-o", str(tmp_path / "x.ppm")])
        assert code == 1

    def test_pixel_rules(self, tmp_path, capsys):
        # Hand-written report: node 0 uncertified, the rest split into two
        # blocks along the columns; labels come from a labels file.
        path = str(tmp_path / "g.potts")
        run_cli(capsys, "build", "grid", "--rows", "1", "--cols", "4", "--k", "3",
                "--seed", "9", "-o", path)
        rep = tmp_path / "hand.report"
        rep.write_text(
            "node 0 block 0 status U\n"
            "node 1 block 0 status S\n"
            "node 2 block 1 status S\n"
            "node 3 block 1 status S\n"
            "iteration 1 certified_fraction 0.75\n"
        )
        labels = tmp_path / "labels.txt"
        labels.write_text("0 1 2 2\n")
        out_path = str(tmp_path / "m.ppm")
        code, _ = run_cli(capsys, "render", "--report", str(rep), "--instance", path,
                          "--rows", "1", "--cols", "4", "--labels", str(labels),
                          "-o", out_path)
        assert code == 0
        img = read_image(out_path)
        assert tuple(img[0, 0]) == (255, 0, 0)      # uncertified
        assert tuple(img[0, 1]) == (0, 255, 0)      # seam between blocks
        assert tuple(img[0, 2]) == (0, 255, 0)      # seam on the other side
        assert tuple(img[0, 3]) == (255, 255, 255)  # label 2 of 3 -> full gray


def test_module_entry_point(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "pottscert", "--help"],
        capture_output=True, text=True,
    )
    assert out.returncode == 0
    assert "find-blocks" in out.stdout
