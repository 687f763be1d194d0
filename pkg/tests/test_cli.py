import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from mmbi.belief import DirichletBetaBelief, new_prior
from mmbi.bounds import random_ensemble
from mmbi.cli import ERROR_PREFIX, main
from mmbi.envs import chain_task
from mmbi.mdp import solve_finite_horizon


def parse_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def concentrated_chain_belief(mass=1e12):
    chain = chain_task()
    counts = np.where(chain.transitions > 0, mass * chain.transitions, 1e-300)
    p = chain.mean_rewards / chain.r_max
    return DirichletBetaBelief(counts, mass * p + 1e-300, mass * (1 - p) + 1e-300, chain.r_max)


class TestBounds:
    def test_grid_21(self, capsys):
        assert main(["bounds", "--mdps", "random:7", "--grid", "21", "--horizon", "30"]) == 0
        rows = parse_csv(capsys.readouterr().out)
        assert len(rows) == 21
        lams = [float(r["lambda"]) for r in rows]
        assert all(b > a for a, b in zip(lams, lams[1:]))
        last = rows[-1]
        assert abs(float(last["emdp_bound"]) - float(last["upper_bound"])) <= 1e-9
        assert abs(float(last["mmbi_bound"]) - float(last["upper_bound"])) <= 1e-9

    def test_grid_2(self, tmp_path):
        out = tmp_path / "b.csv"
        assert main(["bounds", "--grid", "2", "--horizon", "10", "--out", str(out)]) == 0
        assert [float(r["lambda"]) for r in parse_csv(out.read_text())] == [0.0, 1.0]

    def test_mdp_file(self, tmp_path, capsys):
        path = tmp_path / "mdps.json"
        path.write_text(json.dumps({"mdps": [m.to_dict() for m in random_ensemble(np.random.default_rng(2))]}))
        assert main(["bounds", "--mdps", str(path), "--grid", "3", "--horizon", "5"]) == 0
        assert len(parse_csv(capsys.readouterr().out)) == 3

    @pytest.mark.parametrize("args", [["--grid", "1"], ["--mdps", "missing.json"], ["--mdps", "random:x"]])
    def test_errors(self, args, capsys):
        assert main(["bounds", *args]) == 1
        err = capsys.readouterr().err
        assert err.startswith(f"{ERROR_PREFIX}: ") and err.count("\n") == 1


class TestChain:
    SMOKE = ["chain", "--runs", "10", "--steps", "100", "--resamples", "200", "--n", "1,2"]

    def test_smoke_run(self, tmp_path):
        assert main([*self.SMOKE, "--out", str(tmp_path)]) == 0
        for name in ("runs.csv", "summary.json", "hist_exploit.csv", "hist_mcbrl_n1.csv", "hist_mcbrl_n2.csv"):
            assert (tmp_path / name).exists()
        rows = parse_csv((tmp_path / "runs.csv").read_text())
        per_cell = {}
        for r in rows:
            per_cell[(r["agent"], r["n"])] = per_cell.get((r["agent"], r["n"]), 0) + 1
        assert per_cell == {("exploit", "0"): 10, ("mcbrl", "1"): 10, ("mcbrl", "2"): 10}
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert set(summary["cells"]) == {"exploit", "mcbrl_n1", "mcbrl_n2"}

    def test_same_seed_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main([*self.SMOKE, "--seed", "4", "--out", str(a)]) == 0
        assert main([*self.SMOKE, "--seed", "4", "--out", str(b)]) == 0
        for name in ("runs.csv", "summary.json", "hist_mcbrl_n2.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"agents": ["exploit"], "runs": 3, "steps": 20, "resamples": 100}))
        assert main(["chain", "--config", str(cfg), "--runs", "4", "--out", str(tmp_path / "o")]) == 0
        rows = parse_csv((tmp_path / "o" / "runs.csv").read_text())
        # the command-line --runs overrides the file
        assert len(rows) == 4 and {r["agent"] for r in rows} == {"exploit"}

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"episodes": 3}))
        assert main(["chain", "--config", str(cfg)]) == 1
        assert "episodes" in capsys.readouterr().err

    @pytest.mark.parametrize("args", [["--agents", "greedy"], ["--runs", "0"], ["--n", "0"], ["--B", "0"]])
    def test_errors(self, args, tmp_path, capsys):
        assert main(["chain", "--steps", "5", *args, "--out", str(tmp_path)]) == 1
        assert capsys.readouterr().err.startswith(f"{ERROR_PREFIX}: ")


class TestPlan:
    @pytest.fixture
    def belief_path(self, tmp_path):
        p = tmp_path / "belief.json"
        p.write_text(concentrated_chain_belief().to_json())
        return p

    def test_concentrated_belief_gives_optimal_plan(self, belief_path, capsys):
        assert main(["plan", "--belief", str(belief_path), "--n", "4", "--horizon", "40"]) == 0
        out = json.loads(capsys.readouterr().out)
        _, plan = solve_finite_horizon(chain_task(), 0.95, 40)
        assert out["horizon"] == 40
        assert out["plan"] == plan.actions.tolist()

    @pytest.mark.parametrize("n", [1, 16])
    def test_root_values_reported(self, n, tmp_path, capsys):
        p = tmp_path / "b.json"
        p.write_text(new_prior(5, 2, 0.2, 1, 1, 10).to_json())
        assert main(["plan", "--belief", str(p), "--n", str(n)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["n"] == n and len(out["root_values"]) == 5
        assert len(out["plan"]) == 194

    def test_missing_belief_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["plan"])
        assert e.value.code != 0
        assert "--belief" in capsys.readouterr().err

    def test_malformed_belief(self, tmp_path, capsys):
        p = tmp_path / "b.json"
        p.write_text('{"dirichlet_counts": [1]}')
        assert main(["plan", "--belief", str(p)]) == 1
        assert capsys.readouterr().err.startswith(f"{ERROR_PREFIX}: ")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "mmbi", "bounds", "--grid", "2", "--horizon", "3"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert res.stdout.splitlines()[0] == "lambda,emdp_bound,mmbi_bound,upper_bound"
