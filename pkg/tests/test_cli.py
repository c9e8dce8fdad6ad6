import csv
import json
import shutil
import subprocess

import pytest

from sphparisi.cli import main


def run(tmp_path, command, cfg, *extra, name="run"):
    cfg_path = tmp_path / f"{name}.json"
    cfg_path.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
    out = tmp_path / name
    code = main([command, "--config", str(cfg_path), "--out", str(out), *extra])
    return code, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def strip_volatile(text):
    return [line for line in text.splitlines() if '"timestamp"' not in line]


class TestSolve:
    def test_zero_mixture(self, tmp_path):
        code, out = run(tmp_path, "solve", {"mixture": [], "k_max": 2})
        assert code == 0
        assert json.loads((out / "solve.json").read_text())["value"] == 0.0

    def test_pure_two_spin(self, tmp_path):
        code, out = run(tmp_path, "solve", {"mixture": [{"p": 2, "beta": 1}], "k_max": 2})
        res = json.loads((out / "solve.json").read_text())
        assert code == 0
        assert res["value"] == pytest.approx(0.490927, abs=1e-5)
        assert [r["k"] for r in res["per_k"]] == [1, 2]
        assert set(res["order_parameter"]) == {"k", "m", "q"}
        assert "value:" in (out / "summary.txt").read_text()

    def test_malformed_order_parameter(self, tmp_path, capsys):
        cfg = {"mixture": [{"p": 2, "beta": 1}], "k_max": 1, "order_parameter": {"k": 1, "m": [0, 0.5], "q": [0, 0.2, 1]}}
        code, _ = run(tmp_path, "solve", cfg)
        assert code == 1
        assert "m_k must equal 1" in capsys.readouterr().err

    def test_given_order_parameter_is_evaluated(self, tmp_path):
        cfg = {"mixture": [{"p": 2, "beta": 1}], "k_max": 1, "order_parameter": {"k": 1, "m": [0, 1], "q": [0, 0, 1]}}
        code, out = run(tmp_path, "solve", cfg)
        assert code == 0
        assert json.loads((out / "solve.json").read_text())["given_order_parameter_value"] == pytest.approx(0.5, abs=1e-12)

    def test_unknown_key(self, tmp_path, capsys):
        code, _ = run(tmp_path, "solve", {"mixture": [], "k_max": 1, "colour": 3})
        assert code == 1
        assert "colour" in capsys.readouterr().err

    def test_invalid_json_reports_position(self, tmp_path, capsys):
        code, _ = run(tmp_path, "solve", '{"mixture": [],\n "k_max": }')
        assert code == 1
        assert ":2:" in capsys.readouterr().err

    def test_field_path_in_message(self, tmp_path, capsys):
        code, _ = run(tmp_path, "solve", {"mixture": [{"p": 0, "beta": 1}], "k_max": 1})
        assert code == 1
        assert "mixture/0/p" in capsys.readouterr().err

    def test_non_convergence_exit_two(self, tmp_path):
        cfg = {"mixture": [{"p": 3, "beta": 2}], "k_max": 2, "max_iter": 3, "restarts": 1}
        code, out = run(tmp_path, "solve", cfg)
        assert code == 2
        assert (out / "solve.json").exists()

    def test_rerun_is_identical(self, tmp_path):
        cfg = {"mixture": [{"p": 2, "beta": 1}, {"p": 3, "beta": 0.5}], "k_max": 2, "restarts": 2}
        _, a = run(tmp_path, "solve", cfg, name="a")
        _, b = run(tmp_path, "solve", cfg, "--threads", "2", name="b")
        assert strip_volatile((a / "solve.json").read_text()) == strip_volatile((b / "solve.json").read_text())
        assert (a / "summary.txt").read_bytes() == (b / "summary.txt").read_bytes()


class TestFiniteM:
    def test_zero_mixture(self, tmp_path):
        cfg = {"mixture": [], "order_parameter": {"k": 1, "m": [0, 1], "q": [0, 0.3, 1]}, "M": [8, 16]}
        code, out = run(tmp_path, "finite-m", cfg)
        rows = read_csv(out / "finite_m.csv")
        assert code == 0
        assert [float(r["value"]) for r in rows if r["quantity"] == "pm"] == [0.0, 0.0]
        assert rows[0]["quantity"] == "parisi_value" and rows[0]["stderr"] == "exact"

    def test_convergence_column(self, tmp_path):
        cfg = {"mixture": [{"p": 2, "beta": 1}], "order_parameter": {"k": 1, "m": [0, 1], "q": [0, 0, 1]}, "M": [8, 16, 32, 64]}
        code, out = run(tmp_path, "finite-m", cfg)
        gaps = [(float(r["value"]), float(r["stderr"])) for r in read_csv(out / "finite_m.csv") if r["quantity"] == "abs_gap"]
        assert code == 0 and len(gaps) == 4
        assert all(g1 <= g0 + e1 for (g0, _), (g1, e1) in zip(gaps, gaps[1:]))

    def test_cost_guard(self, tmp_path, capsys):
        f = {"k": 4, "m": [0, 0.2, 0.4, 0.6, 1], "q": [0, 0.1, 0.2, 0.3, 0.4, 1]}
        code, _ = run(tmp_path, "finite-m", {"mixture": [{"p": 2, "beta": 1}], "order_parameter": f, "M": [8]})
        assert code == 2
        assert "k" in capsys.readouterr().err


class TestSimulate:
    def test_free_energy_zero(self, tmp_path):
        code, out = run(tmp_path, "simulate", {"task": "free-energy", "mixture": [], "N": 10, "n_config": 100, "n_disorder": 3})
        rows = read_csv(out / "simulate.csv")
        assert code == 0
        assert rows[0]["quantity"] == "free_energy" and float(rows[0]["value"]) == 0.0 and rows[0]["stderr"] == "exact"
        assert all(r["stderr"] for r in rows)

    def test_cavity_check(self, tmp_path):
        cfg = {"task": "cavity-check", "mixture": [{"p": 3, "beta": 1}], "N": 3, "M": 2}
        code, out = run(tmp_path, "simulate", cfg)
        (row,) = read_csv(out / "simulate.csv")
        assert code == 0
        assert float(row["value"]) < 1e-10

    def test_insufficient_replicas(self, tmp_path, capsys):
        cfg = {"task": "gg-stats", "mixture": [{"p": 2, "beta": 1}], "N": 8, "n_chains": 2, "specs": [{"p": 1, "n": 3}]}
        code, _ = run(tmp_path, "simulate", cfg)
        assert code == 1
        assert "replicas" in capsys.readouterr().err

    def test_memory_guard(self, tmp_path):
        code, _ = run(tmp_path, "simulate", {"task": "free-energy", "mixture": [{"p": 4, "beta": 1}], "N": 60})
        assert code == 2

    def test_strict_escalates_health_warning(self, tmp_path):
        cfg = {"task": "free-energy", "mixture": [{"p": 2, "beta": 3}], "N": 40, "n_config": 200, "n_disorder": 2}
        assert run(tmp_path, "simulate", cfg, name="lax")[0] == 0
        assert run(tmp_path, "simulate", cfg, "--strict", name="strict")[0] == 3

    def test_gg_stats_and_dumps(self, tmp_path):
        cfg = {
            "task": "gg-stats",
            "mixture": [{"p": 2, "beta": 1}],
            "N": 8,
            "n_disorder": 2,
            "n_chains": 3,
            "steps": 400,
            "burn_in": 200,
            "thin": 10,
            "specs": [{"p": 1, "n": 2, "f": [[1, 2, 1]]}],
            "dump_chains": True,
        }
        code, out = run(tmp_path, "simulate", cfg)
        names = [r["quantity"] for r in read_csv(out / "simulate.csv")]
        assert code == 0
        assert "phi(p=1,n=2,f=R12^1)" in names and "ultrametric_violation_rate" in names
        assert len(list(out.glob("chain_d*_c*.bin"))) == 6

    def test_seed_override_and_rerun(self, tmp_path):
        cfg = {"task": "free-energy", "mixture": [{"p": 2, "beta": 0.3}], "N": 6, "n_config": 500, "n_disorder": 4, "seed": 1}
        _, a = run(tmp_path, "simulate", cfg, "--seed", "9", name="a")
        _, b = run(tmp_path, "simulate", dict(cfg, seed=9), name="b")
        rows_a, rows_b = read_csv(a / "simulate.csv"), read_csv(b / "simulate.csv")
        for ra, rb in zip(rows_a, rows_b):
            ra.pop("wall_time"), rb.pop("wall_time")
            assert ra == rb
        assert rows_a[0]["seed"] == "9"

    def test_unknown_task(self, tmp_path):
        assert run(tmp_path, "simulate", {"task": "nope", "mixture": [], "N": 3})[0] == 1


@pytest.mark.skipif(shutil.which("sphparisi") is None, reason="console script not installed")
def test_console_script(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"mixture": [], "k_max": 1}))
    proc = subprocess.run(["sphparisi", "solve", "--config", str(cfg), "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "value 0" in proc.stdout
