import json
import subprocess
import sys

import pytest

from ewanet.cli import COMMANDS, main

EXPECTED = {
    "simulate": ["trajectory.csv", "trajectory.svg"],
    "equilibria": ["census.csv", "profiles.csv"],
    "influence": ["influence.csv", "prediction.csv"],
    "montecarlo": ["records.csv", "consensus.csv", "accuracy.csv", "partial_dependence.csv",
                   "accuracy.svg", "partial_dependence.svg"],
    "vectorfield": ["vector_field.csv", "intersections.csv", "vector_field.svg"],
    "cascade": ["cascade.csv"],
    "reinforce-best": ["reinforce_best.csv"],
}
OVERRIDES = {
    "montecarlo": {"experiment": {"n_sims": 8, "n": 15, "p": 0.3}, "bins": 2},
    "reinforce-best": {"gamma_grid": [1.0, 2.0, 3.0], "basin_samples": 2},
    "vectorfield": {"resolution": 21},
}


def test_every_subcommand_is_covered():
    assert set(COMMANDS) == set(EXPECTED)


@pytest.mark.parametrize("command", sorted(EXPECTED))
def test_subcommand_writes_artifacts(command, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(OVERRIDES.get(command, {})))
    out = tmp_path / "out"
    assert main([command, "--config", str(cfg), "--seed", "3", "--out-dir", str(out)]) == 0
    for name in EXPECTED[command]:
        assert (out / name).stat().st_size > 0
    assert capsys.readouterr().out.strip()


def test_simulate_from_sigma_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"graph": {"type": "path", "n": 5}, "payoff": {"h": 2, "l": -1},
                               "params": {"psi": 1, "lambda": 1, "eta": 0.5},
                               "q0": {"sigma_q": 0.3}, "horizon": 50, "svg": False}))
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
    header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t," + ",".join(f"q_{i}" for i in range(5)) + "," + ",".join(f"p_{i}" for i in range(5))


def test_bad_config_exits_nonzero(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"q0": [1.0]}))
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "missing.json"), "--out-dir", str(tmp_path)]) == 1


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "ewanet", "influence", "--out-dir", str(tmp_path)],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and "prediction=C" in res.stdout
