import json

import pytest

from cdcpath.cli import main
from cdcpath.lpfile import read_lp


def test_backend_flag(capsys):
    assert main(["--backend"]) == 0
    assert capsys.readouterr().out.strip() in ("numba", "numpy")


def test_gen_env_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["gen-env", "--seed", "3", "--obstacles", "2", "--out", str(a)])
    main(["gen-env", "--seed", "3", "--obstacles", "2", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    assert len(json.loads(a.read_text())["obstacles"]) == 2


def test_stage_commands(tmp_path, capsys):
    env = tmp_path / "env.json"
    main(["gen-env", "--seed", "3", "--obstacles", "2", "--out", str(env)])
    assert main(["partition", "--env", str(env), "--out", str(tmp_path / "p.json")]) == 0
    assert main(["check-ib", "--env", str(env)]) == 0
    assert main(["cover", "--env", str(env), "--out", str(tmp_path / "cover.txt"),
                 "--conflict-out", str(tmp_path / "conflict.txt")]) == 0
    assert (tmp_path / "cover.txt").read_text().strip()
    capsys.readouterr()
    assert main(["formulate", "--env", str(env), "--steps", "5"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["assign"]["continuous"] > 0
    lp = tmp_path / "m.lp"
    assert main(["export-lp", "--env", str(env), "--steps", "4", "--method", "bigm",
                 "--out", str(lp)]) == 0
    assert len(read_lp(lp).binaries) > 0
    sol = tmp_path / "sol.json"
    assert main(["solve", "--lp", str(lp), "--out", str(sol)]) == 0
    assert json.loads(sol.read_text())["status"] == "optimal"
    for stage in ("triangulation", "partition", "conflict", "separator"):
        svg = tmp_path / f"{stage}.svg"
        assert main(["plot", "--env", str(env), "--stage", stage, "--out", str(svg)]) == 0
        assert svg.read_text().startswith("<svg")


def test_solve_reports_trim(tmp_path):
    out = tmp_path / "s.json"
    assert main(["solve", "--seed", "1", "--obstacles", "0", "--steps", "4", "--method", "bigm",
                 "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["status"] == "optimal" and "trimmed_steps" in data


def test_quadratic_solve_is_refused(capsys):
    rc = main(["solve", "--seed", "1", "--obstacles", "0", "--steps", "3", "--method", "bigm",
               "--objective", "quadratic"])
    assert rc == 2
    assert "export-lp" in capsys.readouterr().err


def test_check_ib_reports_witness(capsys):
    # seed 12 places a thin quadrilateral that creates a separating triangle
    assert main(["check-ib", "--seed", "12", "--obstacles", "1"]) == 1
    assert "minimal infeasible triple" in capsys.readouterr().out


def test_bench_writes_tables(tmp_path, capsys):
    assert main(["bench", "--seeds", "0-1", "--obstacle-counts", "1", "--steps", "3",
                 "--node-limit", "10", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "bench.csv").read_text().count("\n") == 1 + 2 * 3
    assert "Fastest" in capsys.readouterr().out
