import json
import math
import subprocess
import sys

import numpy as np
import pytest

from randbilliards import billiard, chain, cli, export, verify
from randbilliards.billiard import PhasePoint
from randbilliards.errors import InvariantError
from randbilliards.feres import FeresParams
from randbilliards.geometry import make_table


def _run(capsys, *argv):
    code = cli.main(list(argv))
    lines = capsys.readouterr().out.strip().splitlines()
    return code, json.loads(lines[-1]), lines


def test_parse_angle():
    assert cli.parse_angle("1/8") == math.pi / 8
    assert cli.parse_angle("3/19") == 3 * math.pi / 19
    assert cli.parse_angle("0.5") == 0.5
    with pytest.raises(ValueError):
        cli.parse_angle("abc")


def test_config_precedence(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# settings\nalpha = 1/8\nseed = 11  # trailing comment\nn-steps = 20\n")
    env = {"BILLIARDS_SEED": "5"}
    assert cli.load_config(environ=env).seed == 5
    cfg = cli.load_config(f, environ=env)
    assert cfg.seed == 11 and cfg.alpha == "1/8" and cfg.n_steps == 20
    cfg = cli.load_config(f, {"seed": "3", "alpha": None}, environ=env)
    assert cfg.seed == 3 and cfg.alpha == "1/8"
    assert cfg.params().rational_tag == (1, 8)


def test_config_round_trip(tmp_path):
    cfg = cli.load_config(None, {"surface": "spherical", "r0": "0.7", "alpha": "1/7", "theta0": "1/14"}, environ={})
    f = tmp_path / "config.txt"
    f.write_text(cfg.to_text())
    assert cli.load_config(f, environ={}) == cfg


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("no equals sign\n")
    with pytest.raises(ValueError):
        cli.read_config_file(bad)
    bad.write_text("colour = red\n")
    with pytest.raises(ValueError):
        cli.read_config_file(bad)
    with pytest.raises(ValueError):
        cli.load_config(None, {"seed": "-1"}, environ={})


def test_table_command(tmp_path, capsys):
    code, doc, _ = _run(capsys, "table", "--surface", "hyperbolic", "--r0", "1", "--out", str(tmp_path))
    assert code == 0 and doc["status"] == "ok" and doc["command"] == "table"
    info = json.loads((tmp_path / "table.json").read_text())
    assert info["h"] == pytest.approx(math.sinh(1.0), abs=1e-15)
    assert (tmp_path / "config.txt").exists()


def test_chain_command(tmp_path, capsys):
    code, doc, _ = _run(capsys, "chain", "--alpha", "1/8", "--theta0", "1/16", "--out", str(tmp_path))
    assert code == 0
    assert doc["result"]["n_states"] == 8 and doc["result"]["period"] == 2 and doc["result"]["irreducible"]
    rows = export.read_columns(tmp_path / "chain.csv")
    assert set(rows) == {"from_index", "to_index", "probability"}
    P = np.zeros((8, 8))
    P[rows["from_index"].astype(int), rows["to_index"].astype(int)] = rows["probability"]
    assert np.allclose(P.sum(axis=1), 1.0, atol=1e-12)


def test_chain_command_truncated(tmp_path, capsys):
    code, doc, _ = _run(capsys, "chain", "--alpha", "0.5", "--n-steps", "50", "--out", str(tmp_path))
    assert code == 0 and doc["result"]["truncated"]


def test_simulate_byte_identical(tmp_path, capsys):
    args = ["simulate", "--surface", "spherical", "--r0", "0.8", "--alpha", "0.4", "--n-steps", "500", "--seed", "17"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("trajectory.csv", "trajectory.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert cli.main(args[:-1] + ["18", "--out", str(tmp_path / "c")]) == 0
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() != (tmp_path / "c" / "trajectory.csv").read_bytes()
    capsys.readouterr()


def test_trajectory_csv_round_trip(tmp_path):
    table = make_table("hyperbolic", 0.9)
    traj = billiard.simulate(table, FeresParams(0.33), PhasePoint(1.0, 2.0), 300, seed=2)
    meta, s, theta, branch = export.read_trajectory_csv(export.write_trajectory_csv(tmp_path / "t.csv", traj))
    assert np.array_equal(s, traj.s) and np.array_equal(theta, traj.theta) and np.array_equal(branch, traj.branch)
    assert meta["seed"] == 2 and meta["initial"]["theta"] == 2.0
    lines = export.write_trajectory_jsonl(tmp_path / "t.jsonl", traj).read_text().splitlines()
    assert "meta" in json.loads(lines[0]) and len(lines) == 301
    assert json.loads(lines[-1])["theta"] == traj.theta[-1]


def test_columns_and_histogram(tmp_path):
    path = export.write_columns(tmp_path / "c.csv", ["n", "v"], [[1, 0.1], [2, 1 / 3]])
    cols = export.read_columns(path)
    assert cols["n"].tolist() == [1, 2] and cols["v"][1] == 1 / 3
    cols = export.read_columns(export.write_histogram_csv(tmp_path / "h.csv", np.array([0.25, 0.75])))
    assert cols["bin_left"][1] == pytest.approx(math.pi / 2) and cols["mass"].sum() == 1.0


def test_evolve_and_dense(tmp_path, capsys):
    code, doc, _ = _run(capsys, "evolve", "--alpha", "0.5", "--bins", "200", "--n-steps", "20", "--out", str(tmp_path))
    assert code == 0 and doc["result"]["final_tv"] < doc["result"]["initial_tv"]
    trace = export.read_columns(tmp_path / "evolve_trace.csv")
    assert trace["step"].tolist() == list(range(21))
    final = export.read_columns(tmp_path / "evolve_final.csv")
    assert final["mass"].sum() == pytest.approx(1.0, abs=1e-12)
    code, doc, _ = _run(capsys, "dense", "--alpha", "1/8", "--theta0", "1.0", "--n-steps", "1000",
                        "--out", str(tmp_path))
    assert code == 0 and doc["result"]["final_gap"] < doc["result"]["L"] / 50


def test_lyapunov_mixing_phase(tmp_path, capsys):
    code, doc, _ = _run(capsys, "lyapunov", "--direction", "1,0", "--n-steps", "500", "--out", str(tmp_path))
    assert code == 0 and doc["result"]["final_lambda"] == 0.0
    assert export.read_columns(tmp_path / "lyapunov.csv")["n"][-1] == 500
    code, doc, _ = _run(capsys, "mixing", "--alpha", "1/8", "--theta0", "1/16", "--region", "lattice",
                        "--ensemble", "100000", "--lags", "0,1", "--out", str(tmp_path))
    assert code == 0 and min(doc["result"]["z"]) > 5
    code, doc, _ = _run(capsys, "phase-evolve", "--start", "liouville", "--ensemble", "100000",
                        "--n-steps", "2", "--out", str(tmp_path))
    assert code == 0 and len(export.read_columns(tmp_path / "phase_trace.csv")["tv"]) == 3


def test_verify_command(tmp_path, capsys):
    code, doc, lines = _run(capsys, "verify", "--out", str(tmp_path))
    assert code == 0 and doc["result"]["checks"] == len(verify.CHECKS)
    assert len(lines) == len(verify.CHECKS) + 1
    assert all(r["pass"] for r in json.loads((tmp_path / "verify.json").read_text()))


def test_exit_code_domain_error(tmp_path, capsys):
    code, doc, _ = _run(capsys, "table", "--surface", "spherical", "--r0", "2.0", "--out", str(tmp_path))
    assert code == 1 and doc["status"] == "domain_error"
    code, doc, _ = _run(capsys, "simulate", "--alpha", "0.6", "--out", str(tmp_path))
    assert code == 1
    code, doc, _ = _run(capsys, "dense", "--theta0", "3.0", "--alpha", "1/8", "--out", str(tmp_path))
    assert code == 1 and "error" in doc


def test_exit_code_invariant_and_verify_failure(tmp_path, capsys, monkeypatch):
    def broken(cfg, out):
        raise InvariantError("boom")

    monkeypatch.setitem(cli._COMMANDS, "table", broken)
    code, doc, _ = _run(capsys, "table", "--out", str(tmp_path))
    assert code == 2 and doc["status"] == "invariant_error"
    monkeypatch.setattr(verify, "run_checks", lambda names=None: [("x", False, "forced")])
    code, doc, _ = _run(capsys, "verify", "--out", str(tmp_path))
    assert code == 2 and doc["result"]["failed"] == ["x"]


def test_seed_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("BILLIARDS_SEED", "42")
    code, doc, _ = _run(capsys, "simulate", "--n-steps", "10", "--out", str(tmp_path))
    assert doc["config"]["seed"] == 42
    meta, s, _, _ = export.read_trajectory_csv(tmp_path / "trajectory.csv")
    ref = billiard.simulate(make_table("flat", 1.0), FeresParams(0.5), PhasePoint(0.0, 1.0), 10, seed=42)
    assert np.array_equal(s, ref.s)


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "randbilliards", "chain", "--alpha", "1/7", "--theta0", "1/14",
                           "--out", str(tmp_path)], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout.strip().splitlines()[-1])["result"]["n_states"] == 7


def test_chain_csv_matches_matrix(tmp_path):
    p = FeresParams.rational(1, 7)
    states = chain.enumerate_states(p, math.pi / 14)
    P = chain.build_matrix(states, p)
    cols = export.read_columns(export.write_chain_csv(tmp_path / "c.csv", P))
    assert len(cols["probability"]) == P.nnz and cols["probability"].sum() == pytest.approx(7.0)
