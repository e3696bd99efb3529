import numpy as np
import pytest

from conftest import random_cloud
from grassmean.cli import main
from grassmean.files import read_subspace_file, write_subspace_file
from grassmean.grassmann import basis_from_projector


def cloud_file(tmp_path, name="cloud.json", n=5, m=2, count=5, radius=0.4, seed=0):
    _, points = random_cloud(n, m, count, radius, np.random.default_rng(seed))
    path = tmp_path / name
    write_subspace_file(path, [basis_from_projector(p) for p in points])
    return path


def cp1_file(tmp_path, t, name="pair.json"):
    a = np.array([[1.0], [0.0]], dtype=complex)
    b = np.array([[np.cos(t)], [np.sin(t)]], dtype=complex)
    path = tmp_path / name
    write_subspace_file(path, [a, b])
    return path


def test_version_and_usage_exit_codes(capsys):
    assert main(["--version"]) == 0
    assert "grassmean" in capsys.readouterr().out
    assert main([]) == 1
    assert main(["karcher-mean"]) == 1
    assert main(["karcher-mean", "x.json", "--out", "y.json", "--rule", "bogus"]) == 1


def test_missing_input_reports_usage_error(tmp_path, capsys):
    out = tmp_path / "mean.json"
    code = main(["karcher-mean", str(tmp_path / "nope.json"), "--out", str(out)])
    assert code == 1
    assert "error:" in capsys.readouterr().err
    assert not out.exists()


def test_karcher_mean_end_to_end(tmp_path, capsys):
    src = cloud_file(tmp_path)
    out = tmp_path / "mean.json"
    code = main(["karcher-mean", str(src), "--out", str(out)])
    captured = capsys.readouterr().out.splitlines()
    assert code == 0
    assert captured[0] == "status = converged"
    mean = read_subspace_file(out)
    assert len(mean) == 1 and mean[0].matrix.shape == (5, 2)
    trace_lines = (tmp_path / "mean.trace.csv").read_text().splitlines()
    assert trace_lines[0] == "iteration,cost,gradnorm,stepsize"
    assert len(trace_lines) >= 2


def test_karcher_mean_iteration_cap_exit_code(tmp_path, capsys):
    src = cloud_file(tmp_path)
    out = tmp_path / "mean.json"
    trace = tmp_path / "custom.trace.csv"
    code = main(["karcher-mean", str(src), "--out", str(out),
                 "--trace", str(trace), "--max-iter", "1"])
    assert code == 2
    assert "status = max_iter" in capsys.readouterr().out
    # outputs are still written so the run can be inspected
    assert out.exists() and trace.exists()


def test_karcher_mean_cut_locus_exit_code(tmp_path, capsys):
    path = tmp_path / "antipodal.json"
    write_subspace_file(path, [np.eye(2, 1, dtype=complex),
                               np.eye(2, 1, k=-1, dtype=complex)])
    out = tmp_path / "mean.json"
    code = main(["karcher-mean", str(path), "--out", str(out)])
    assert code == 3
    assert "error:" in capsys.readouterr().err
    # the partial trace is preserved for post-mortem
    assert (tmp_path / "mean.trace.csv").exists()
    assert not out.exists()


def test_karcher_mean_newton_step_rule(tmp_path, capsys):
    rng = np.random.default_rng(3)
    cols = []
    for _ in range(3):
        v = rng.standard_normal((3, 1)) + 1j * rng.standard_normal((3, 1))
        cols.append(v / np.linalg.norm(v))
    path = tmp_path / "lines.json"
    write_subspace_file(path, cols)
    out = tmp_path / "mean.json"
    code = main(["karcher-mean", str(path), "--out", str(out), "--step", "newton"])
    assert code == 0
    assert "status = converged" in capsys.readouterr().out


def test_distance_output(tmp_path, capsys):
    path = cp1_file(tmp_path, 0.3)
    assert main(["distance", str(path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("distance = ")
    assert abs(float(lines[0].split("= ")[1]) - np.sqrt(2.0) * 0.3) < 1e-10
    angles = [float(v) for v in lines[1].split("= ")[1].split()]
    assert len(angles) == 1 and abs(angles[0] - 0.3) < 1e-10


def test_distance_needs_exactly_two(tmp_path, capsys):
    path = cloud_file(tmp_path, count=3)
    assert main(["distance", str(path)]) == 1
    assert "exactly 2" in capsys.readouterr().err


def test_repair_flag_fixes_skewed_file(tmp_path, capsys):
    a = np.eye(3, 1, dtype=complex) * 1.5
    b = np.eye(3, 1, k=-1, dtype=complex)
    b = b + 0.2 * np.eye(3, 1, k=-2, dtype=complex)
    path = tmp_path / "skewed.json"
    write_subspace_file(path, [a, b])
    assert main(["distance", str(path)]) == 1
    capsys.readouterr()
    assert main(["distance", str(path), "--repair"]) == 0


def test_bi_experiment_writes_results(tmp_path, capsys):
    out = tmp_path / "rows.csv"
    code = main(["bi-experiment", "--n", "3", "--eps-list", "0.5",
                 "--nest-list", "2", "--trials", "2", "--samples", "500",
                 "--seed", "1", "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "rows = 2" in printed and f"out = {out}" in printed
    lines = out.read_text().splitlines()
    assert lines[0].startswith("trial,")
    assert len(lines) == 3


def test_bi_experiment_flag_validation(tmp_path, capsys):
    out = str(tmp_path / "rows.csv")
    assert main(["bi-experiment", "--eps-list", "1,0.5", "--nest-list", "2,4",
                 "--out", out]) == 1
    assert main(["bi-experiment", "--nest-list", "2.5", "--out", out]) == 1
    assert main(["bi-experiment", "--eps-list", "abc", "--out", out]) == 1
    assert main(["bi-experiment", "--eps-list", ",", "--out", out]) == 1
    capsys.readouterr()


def test_same_seed_repeats_byte_identical(tmp_path):
    src = cloud_file(tmp_path)
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / f"mean_{tag}.json"
        assert main(["karcher-mean", str(src), "--out", str(out)]) == 0
        outs.append(out.read_bytes())
        outs.append((tmp_path / f"mean_{tag}.trace.csv").read_bytes())
    assert outs[0] == outs[2] and outs[1] == outs[3]

    rows = []
    for tag in ("a", "b"):
        out = tmp_path / f"rows_{tag}.csv"
        assert main(["bi-experiment", "--n", "3", "--eps-list", "0.5",
                     "--nest-list", "2", "--trials", "2", "--samples", "500",
                     "--seed", "7", "--out", str(out)]) == 0
        rows.append(out.read_bytes())
    assert rows[0] == rows[1]
