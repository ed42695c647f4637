import json

import pytest

from dtsquare import io
from dtsquare.cli import main
from dtsquare.geometry.predicates import Box, Point
from dtsquare.geometry.voronoi import clipped_regions, oracle_dual_edges
from dtsquare.harness import ExperimentConfig, default_bits, generate, scaling
from dtsquare.smoothness import check_grid_smoothness, generate_perturbed_grid, generate_uniform


def test_points_round_trip():
    pts = generate_perturbed_grid(64, 4, 21)
    text = io.format_points(pts, 21)
    back, bits = io.parse_points(text)
    assert back == pts and bits == 21
    assert io.format_points(back, bits) == text


def test_edges_and_regions_round_trip():
    pts = generate_perturbed_grid(16, 4, 18)
    regs = clipped_regions(pts, Box(0, 0, 1 << 18, 1 << 18))
    text = io.format_regions(regs, 18)
    back, bits = io.parse_regions(text)
    assert back == regs and bits == 18
    assert io.format_regions(back, bits) == text
    edges = sorted(oracle_dual_edges(pts, Box(0, 0, 1 << 18, 1 << 18)))
    assert io.parse_edges(io.format_edges(edges, 18)) == (edges, 18)
    assert io.parse_edges(io.format_edges([], 18)) == ([], 18)


@pytest.mark.parametrize("text", [
    "", "2 4\n1 1\n", "1 4\n1\n", "1 4\n1 x\n", "1 4\n99 1\n", "2 4\n1 1\n1 1\n",
])
def test_bad_point_files(text):
    with pytest.raises(io.FormatError):
        io.parse_points(text)


def test_bad_regions_file():
    with pytest.raises(io.FormatError):
        io.parse_regions("not json")
    with pytest.raises(io.FormatError):
        io.parse_regions(json.dumps({"bits": 3, "regions": [{"site": [1, 1]}]}))


def test_config_defaults_and_checks():
    cfg = ExperimentConfig(n=8)
    assert cfg.bits == default_bits(8) == 21 and cfg.count == 64
    with pytest.raises(ValueError):
        ExperimentConfig(n=1)
    with pytest.raises(ValueError):
        ExperimentConfig(n=8, bits=5)
    with pytest.raises(ValueError):
        ExperimentConfig(n=4, generator="spiral")
    assert len(generate(cfg)) == 64


def run_cli(*args):
    return main([str(a) for a in args])


def test_generate_run_verify(tmp_path, capsys):
    p = tmp_path / "pts.txt"
    assert run_cli("generate", "--n", 4, "--seed", 2, "--out", p) == 0
    assert "smooth" in capsys.readouterr().out
    assert run_cli("check-smooth", p) == 0
    out = tmp_path / "run"
    assert run_cli("run", p, "--out", out) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["levels_used"] <= report["bits"] + 1
    assert report["input_certified"] is True
    for key in ("rounds", "messages", "bits", "active_per_level", "phases"):
        assert key in report
    capsys.readouterr()
    assert run_cli("verify", p, out / "edges.txt", out / "regions.json") == 0
    assert capsys.readouterr().out.startswith("PASS")


def test_verify_names_removed_edge(tmp_path, capsys):
    p = tmp_path / "pts.txt"
    run_cli("generate", "--n", 4, "--seed", 5, "--out", p)
    run_cli("run", p, "--out", tmp_path / "run")
    lines = (tmp_path / "run" / "edges.txt").read_text().splitlines()
    dropped = lines.pop(3)
    lines[0] = f"{len(lines) - 1} {lines[0].split()[1]}"
    bad = tmp_path / "bad.txt"
    bad.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert run_cli("verify", p, bad) == 1
    out = capsys.readouterr().out
    ux, uy, vx, vy = dropped.split()
    assert out.startswith("FAIL") and f"({ux}, {uy})-({vx}, {vy})" in out


def test_verify_empty_edge_list_fails(tmp_path, capsys):
    p = tmp_path / "pts.txt"
    run_cli("generate", "--n", 2, "--out", p)
    empty = tmp_path / "e.txt"
    empty.write_text(f"0 {default_bits(2)}\n")
    assert run_cli("verify", p, empty) == 1
    assert "missing edge" in capsys.readouterr().out


def test_non_smooth_input_refused_without_force(tmp_path, capsys):
    p = tmp_path / "c.txt"
    assert run_cli("generate", "--n", 8, "--generator", "cluster", "--out", p) == 0
    assert "NOT smooth" in capsys.readouterr().out
    assert run_cli("check-smooth", p) == 1
    assert run_cli("run", p, "--out", tmp_path / "r") == 2
    assert "refused" in capsys.readouterr().err
    assert not (tmp_path / "r").exists()
    assert run_cli("run", p, "--force", "--out", tmp_path / "r") == 0
    assert "not certified" in capsys.readouterr().out
    report = json.loads((tmp_path / "r" / "report.json").read_text())
    assert report["input_certified"] is False


def test_uniform_256_seed_7_verdict(tmp_path, capsys):
    p = tmp_path / "u.txt"
    run_cli("generate", "--n", 16, "--generator", "uniform", "--seed", 7, "--out", p)
    pts, bits = io.parse_points(p.read_text())
    want = check_grid_smoothness(generate_uniform(256, 7, bits), bits).ok
    assert ("NOT smooth" not in capsys.readouterr().out) == want


def test_run_message_count_bound(tmp_path, capsys):
    p = tmp_path / "pts.txt"
    run_cli("generate", "--n", 4, "--out", p)
    run_cli("run", p, "--out", tmp_path / "run")
    rep = json.loads((tmp_path / "run" / "report.json").read_text())
    # messages <= C * n^2 * (levels + 1) with a small constant
    assert rep["messages"] <= 12 * 16 * (rep["levels_used"] + 1)


def test_scaling_rows(tmp_path, capsys):
    out = tmp_path / "s.json"
    assert run_cli("scaling", "--n", 4, 8, 16, "--out", out) == 0
    doc = json.loads(out.read_text())
    rows = doc["rows"]
    assert [r["n"] for r in rows] == [4, 8, 16]
    rounds = [r["rounds"] for r in rows]
    assert rounds == sorted(rounds)
    assert doc["summary"]["message_constant"] > 0


def test_scaling_function_summary():
    rows, summary = scaling([4, 8], seeds=(0, 1))
    assert len(rows) == 4
    assert [p["n"] for p in summary["per_n"]] == [4, 8]
