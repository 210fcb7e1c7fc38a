import json
import subprocess
import sys

import numpy as np
import pytest

from edmlab.cli import main
from edmlab.mdp import self_loop_mdp


@pytest.fixture
def self_loop_file(tmp_path):
    path = tmp_path / "mdp.json"
    path.write_text(json.dumps(self_loop_mdp(4, 2).to_json()))
    return path


@pytest.fixture
def policy_file(tmp_path):
    path = tmp_path / "policy.json"
    path.write_text(json.dumps({"logits": [[0.0, 1.0]] * 4, "gauge": [0.0] * 4}))
    return path


def names(report):
    return [c["name"] for c in report["checks"]]


class TestCheck:
    def test_only_example3(self, tmp_path):
        out = tmp_path / "r.json"
        assert main(["check", "--only", "example3", "--k", "0.5", "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert names(report) == ["example3[k=0.5]"]
        assert report["checks"][0]["observed"]["grad_log_p_s1"] == -0.125

    def test_only_example3_k1(self, tmp_path):
        out = tmp_path / "r.json"
        assert main(["check", "--only", "example3", "--k", "1", "--out", str(out)]) == 0
        check = json.loads(out.read_text())["checks"][0]
        assert check["observed"]["grad_log_p_s1"] == 0.0
        assert check["passed"] and "degenerate" in check["note"]

    def test_theorem1(self, tmp_path):
        out = tmp_path / "r.json"
        assert main(["check", "--only", "theorem1", "--out", str(out)]) == 0
        check = json.loads(out.read_text())["checks"][0]
        assert check["name"] == "theorem1"
        assert check["observed"]["grad_log_p_s1"] == pytest.approx(-0.24517, abs=1e-5)

    def test_failure_exit_code(self, tmp_path, monkeypatch, capsys):
        import edmlab.counterexamples as cx

        real = cx.example3_check

        def broken(k):
            r = real(k)
            r.passed = False
            return r

        monkeypatch.setattr(cx, "example3_check", broken)
        assert main(["check", "--only", "example3", "--k", "0.5", "--out", str(tmp_path / "r.json")]) == 1
        assert "example3[k=0.5]" in capsys.readouterr().err


class TestTrain:
    def test_bc(self, tmp_path, capsys):
        out = tmp_path / "bc.csv"
        rc = main(["train", "--objective", "bc", "--k", "0.5", "--theta0", "0", "--theta-expert", "1",
                   "--lr", "0.5", "--steps", "5000", "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "step,theta,bc_loss,edm_loss,grad_total"
        assert len(lines) == 5002
        assert abs(float(lines[-1].split(",")[1]) - 1.0) < 1e-3
        assert "final_theta=" in capsys.readouterr().out

    def test_edm_gap(self, tmp_path, capsys, golden):
        out = tmp_path / "edm.csv"
        assert main(["train", "--objective", "edm", "--out", str(out)]) == 0
        final = float(out.read_text().splitlines()[-1].split(",")[1])
        assert abs(final - 1.0) > 0.05
        assert final == pytest.approx(golden["edm_fixed_point"], abs=1e-6)
        assert "gap=0.19" in capsys.readouterr().out

    @pytest.mark.parametrize("flags", [["--lr", "0"], ["--steps", "0"], ["--weights", "a:b"], ["--weights", "0:0"]])
    def test_usage_errors(self, flags, capsys):
        with pytest.raises(SystemExit) as info:
            main(["train", "--objective", "bc"] + flags)
        assert info.value.code == 2

    def test_ratio_weights(self, tmp_path):
        out = tmp_path / "t.csv"
        assert main(["train", "--objective", "edm", "--weights", "2:6", "--steps", "3", "--out", str(out)]) == 0

    def test_divergence_exit_code(self, tmp_path):
        rc = main(["train", "--objective", "bc", "--lr", "1e9", "--steps", "10", "--out", str(tmp_path / "x.csv")])
        assert rc == 3


class TestVisitation:
    @pytest.mark.parametrize("mode", ["discounted", "stationary", "finite-horizon"])
    def test_self_loop(self, self_loop_file, policy_file, tmp_path, mode):
        out = tmp_path / "d.json"
        rc = main(["visitation", "--mdp", str(self_loop_file), "--policy", str(policy_file),
                   "--mode", mode, "--out", str(out)])
        assert rc == 0
        np.testing.assert_allclose(json.loads(out.read_text())["probs"], [1, 0, 0, 0], atol=1e-12)

    def test_malformed_json(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"n_states": 2,\n "n_actions": }')
        assert main(["visitation", "--mdp", str(bad)]) == 2
        assert "line 2" in capsys.readouterr().err

    def test_missing_field(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"n_states": 2, "n_actions": 1, "initial": [1, 0]}))
        assert main(["visitation", "--mdp", str(bad)]) == 2
        assert "transitions" in capsys.readouterr().err

    def test_bad_row(self, tmp_path, capsys):
        m = self_loop_mdp(2).to_json()
        m["transitions"][1][0] = [0.0, 0.9]
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(m))
        assert main(["visitation", "--mdp", str(bad)]) == 2
        assert "P[1][0]" in capsys.readouterr().err


class TestRollout:
    def test_byte_identical(self, self_loop_file, policy_file, tmp_path):
        outs = []
        for i in range(2):
            out = tmp_path / f"r{i}.jsonl"
            assert main(["rollout", "--mdp", str(self_loop_file), "--policy", str(policy_file),
                         "--episodes", "3", "--horizon", "7", "--seed", "5", "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        lines = outs[0].decode().splitlines()
        assert len(lines) == 3 and len(json.loads(lines[0])["steps"]) == 7


class TestSample:
    def test_single_gaussian_tv(self, tmp_path, capsys):
        out = tmp_path / "s.jsonl"
        assert main(["sample", "--fixture", "single_gaussian", "--out", str(out)]) == 0
        tv = float(capsys.readouterr().out.strip().split("=")[1])
        assert tv < 0.05
        assert len(out.read_text().splitlines()) == 20_000

    def test_energy_file(self, tmp_path, capsys):
        energy = tmp_path / "e.json"
        energy.write_text(json.dumps({"centers": [1.0], "weights": [1.0], "bandwidth": 0.5, "lo": -2, "hi": 4}))
        assert main(["sample", "--energy", str(energy), "--n", "2000", "--steps", "500",
                     "--out", str(tmp_path / "s.jsonl")]) == 0

    def test_categorical(self, tmp_path, policy_file):
        out = tmp_path / "c.jsonl"
        assert main(["sample", "--policy", str(policy_file), "--n", "10", "--out", str(out)]) == 0
        assert all(0 <= int(v) < 4 for v in out.read_text().split())

    def test_bad_energy(self, tmp_path):
        energy = tmp_path / "e.json"
        energy.write_text(json.dumps({"centers": [1.0], "weights": [1.0], "bandwidth": -1, "lo": 0, "hi": 1}))
        assert main(["sample", "--energy", str(energy)]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "edmlab", "check", "--only", "example1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert len(json.loads(proc.stdout)["checks"]) == 3
