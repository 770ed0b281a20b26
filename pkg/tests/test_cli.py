"""CLI subcommands: outputs, exit codes, reproducibility, round-trips."""

from __future__ import annotations

import csv
import json

import pytest

from btgd.cli import main


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def run_config(tmp_path):
    return {
        "function": {"name": "quadratic_form", "q": [[2.0]]},
        "optimizer": {"name": "backtracking_gd", "alpha": 0.5, "beta": 0.5, "delta0": 1.0},
        "z0": [1.0],
        "stop": {"eps": 1e-8, "max_iters": 1000},
        "seed": 1,
        "out": str(tmp_path / "out"),
        "plots": False,
    }


class TestRun:
    def test_one_step_quadratic(self, tmp_path, run_config):
        cfg = write_config(tmp_path, "run.json", run_config)
        assert main(["run", "--config", cfg]) == 0
        rows = read_csv(tmp_path / "out" / "trajectory.csv")
        assert len(rows) == 2
        assert float(rows[0]["x0"]) == 1.0
        assert float(rows[1]["x0"]) == 0.0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["termination"] == "Converged"

    def test_csv_round_trip(self, tmp_path, run_config):
        cfg = write_config(tmp_path, "run.json", run_config)
        main(["run", "--config", cfg])
        rows = read_csv(tmp_path / "out" / "trajectory.csv")
        # shortest round-trip floats parse back to the exact recorded values
        assert [float(r["value"]) for r in rows] == [1.0, 0.0]
        assert [float(r["step_size"]) for r in rows] == [0.5, 1.0]
        assert [int(r["backtrack_count"]) for r in rows] == [2, 1]

    def test_malformed_config_exits_2_without_outputs(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        out = tmp_path / "never"
        assert main(["run", "--config", str(bad), "--out", str(out)]) == 2
        assert not out.exists()

    def test_unknown_optimizer_exits_2(self, tmp_path, run_config):
        run_config["optimizer"] = {"name": "adam"}
        cfg = write_config(tmp_path, "run.json", run_config)
        assert main(["run", "--config", cfg]) == 2
        assert not (tmp_path / "out").exists()

    def test_unknown_function_exits_2(self, tmp_path, run_config):
        run_config["function"] = {"name": "nope"}
        cfg = write_config(tmp_path, "run.json", run_config)
        assert main(["run", "--config", cfg]) == 2

    def test_mexican_hat_attenuation_columns(self, tmp_path):
        config = {
            "function": {"name": "mexican_hat"},
            "optimizer": {"name": "two_way_gd", "alpha": 0.5, "beta": 0.5, "delta0": 1.0},
            "z0": [0.9181 * -0.245, 0.9181 * 0.0],  # placeholder; replaced below
            "stop": {"eps": 1e-13, "max_iters": 550},
            "out": str(tmp_path / "hat"),
            "plots": False,
        }
        import math

        r, th = 0.9181, 4.9632
        config["z0"] = [r * math.cos(th), r * math.sin(th)]
        cfg = write_config(tmp_path, "hat.json", config)
        assert main(["run", "--config", cfg]) == 0
        rows = read_csv(tmp_path / "hat" / "trajectory.csv")
        assert len(rows) >= 500
        sigmas = [float(r["step_size"]) for r in rows]
        assert {"index", "x0", "x1", "value", "grad_norm", "step_size",
                "backtrack_count", "func_evals"} <= set(rows[0])
        assert len(set(sigmas)) <= 10  # plottable attenuation staircase

    def test_byte_reproducibility(self, tmp_path, run_config):
        cfg = write_config(tmp_path, "run.json", run_config)
        main(["run", "--config", cfg])
        first = (tmp_path / "out" / "trajectory.csv").read_bytes()
        summary_a = json.loads((tmp_path / "out" / "summary.json").read_text())
        main(["run", "--config", cfg])
        second = (tmp_path / "out" / "trajectory.csv").read_bytes()
        summary_b = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert first == second
        summary_a.pop("timestamp")
        summary_b.pop("timestamp")
        assert summary_a == summary_b

    def test_figure_rendered_by_default(self, tmp_path, run_config):
        run_config.pop("plots")
        cfg = write_config(tmp_path, "run.json", run_config)
        assert main(["run", "--config", cfg]) == 0
        assert (tmp_path / "out" / "trajectory.png").exists()

    def test_mbt_run(self, tmp_path):
        config = {
            "problem": {"kind": "least_squares", "n_samples": 60, "dimension": 2,
                        "noise": 0.0, "seed": 7},
            "optimizer": {"name": "mbt_gd", "alpha": 1e-4, "beta": 0.5, "delta0": 1.0,
                          "epochs": 50},
            "batch_size": 10,
            "stop": {"eps": 1e-12, "max_iters": 100000},
            "seed": 7,
            "out": str(tmp_path / "mbt"),
            "plots": False,
        }
        cfg = write_config(tmp_path, "mbt.json", config)
        assert main(["run", "--config", cfg]) == 0
        summary = json.loads((tmp_path / "mbt" / "summary.json").read_text())
        assert summary["final_value"] < 1e-6
        assert summary["lr_history"]


class TestCompare:
    def test_oscillation_vs_backtracking(self, tmp_path):
        config = {
            "function": {"name": "smoothed_abs", "eps0": 0.1},
            "optimizers": [
                {"name": "standard_gd", "delta": 1.0},
                {"name": "backtracking_gd", "alpha": 0.5, "beta": 0.5, "delta0": 1.0},
            ],
            "z0": [0.5],
            "stop": {"eps": 1e-8, "max_iters": 1000},
            "out": str(tmp_path / "cmp"),
            "plots": False,
        }
        cfg = write_config(tmp_path, "cmp.json", config)
        assert main(["compare", "--config", cfg]) == 0
        rows = read_csv(tmp_path / "cmp" / "compare.csv")
        by_name = {r["optimizer"]: r for r in rows}
        assert by_name["standard_gd"]["termination"] == "MaxIters"
        assert float(by_name["standard_gd"]["final_grad_norm"]) == 1.0
        assert by_name["backtracking_gd"]["termination"] == "Converged"

    def test_duplicate_optimizer_identical_rows(self, tmp_path):
        config = {
            "function": {"name": "rosenbrock"},
            "optimizers": [
                {"name": "backtracking_gd"},
                {"name": "backtracking_gd"},
            ],
            "z0": [-0.5, 0.5],
            "stop": {"eps": 1e-6, "max_iters": 500},
            "out": str(tmp_path / "dup"),
            "plots": False,
        }
        cfg = write_config(tmp_path, "dup.json", config)
        assert main(["compare", "--config", cfg]) == 0
        rows = read_csv(tmp_path / "dup" / "compare.csv")
        assert rows[0] == rows[1]

    def test_two_way_eval_economy_row(self, tmp_path):
        import math

        r, th = 0.884, 6.12
        config = {
            "function": {"name": "mexican_hat"},
            "optimizers": [
                {"name": "backtracking_gd", "alpha": 0.5, "beta": 0.5, "delta0": 100.0},
                {"name": "two_way_gd", "alpha": 0.5, "beta": 0.5, "delta0": 100.0},
            ],
            "z0": [r * math.cos(th), r * math.sin(th)],
            "stop": {"eps": 1e-12, "max_iters": 400},
            "out": str(tmp_path / "economy"),
            "plots": False,
        }
        cfg = write_config(tmp_path, "eco.json", config)
        assert main(["compare", "--config", cfg]) == 0
        rows = read_csv(tmp_path / "economy" / "compare.csv")
        by_name = {r["optimizer"]: r for r in rows}
        assert int(by_name["two_way_gd"]["func_evals"]) <= \
            int(by_name["backtracking_gd"]["func_evals"])

    def test_single_optimizer_rejected(self, tmp_path):
        config = {
            "function": {"name": "cubic"},
            "optimizers": [{"name": "backtracking_gd"}],
            "z0": [1.0],
            "out": str(tmp_path / "x"),
        }
        cfg = write_config(tmp_path, "one.json", config)
        assert main(["compare", "--config", cfg]) == 2


class TestLrFinderCommand:
    def test_report_json(self, tmp_path):
        config = {
            "problem": {"kind": "least_squares", "n_samples": 100, "dimension": 2,
                        "noise": 0.0, "seed": 7},
            "batch_size": 10,
            "n_batches": 20,
            "mode": "Sqrt",
            "linesearch": {"alpha": 1e-4, "beta": 0.5, "delta0": 1.0},
            "seed": 7,
            "out": str(tmp_path / "lr"),
            "plots": False,
        }
        cfg = write_config(tmp_path, "lr.json", config)
        assert main(["lr-finder", "--config", cfg]) == 0
        payload = json.loads((tmp_path / "lr" / "lr_finder.json").read_text())
        assert len(payload["per_batch_sigmas"]) == 20
        assert payload["rho"] == pytest.approx(0.1)
        assert payload["rescaled_sigma"] == pytest.approx(
            payload["mean_sigma"] * 0.1 ** 0.5)

    def test_full_batch_zero_variance(self, tmp_path):
        config = {
            "problem": {"kind": "least_squares", "n_samples": 40, "dimension": 2,
                        "noise": 0.0, "seed": 3},
            "batch_size": 40,
            "n_batches": 5,
            "out": str(tmp_path / "lrfull"),
            "plots": False,
        }
        cfg = write_config(tmp_path, "lrf.json", config)
        assert main(["lr-finder", "--config", cfg]) == 0
        payload = json.loads((tmp_path / "lrfull" / "lr_finder.json").read_text())
        assert len(set(payload["per_batch_sigmas"])) == 1


class TestSaddleMcCommand:
    def test_fraction_and_outcomes(self, tmp_path):
        config = {
            "function": {"name": "quadratic_saddle"},
            "saddle": [0.0, 0.0],
            "eps": 0.1,
            "n_samples": 100,
            "stop": {"eps": 1e-8, "max_iters": 400},
            "seed": 1,
            "out": str(tmp_path / "mc"),
            "plots": False,
        }
        cfg = write_config(tmp_path, "mc.json", config)
        assert main(["saddle-mc", "--config", cfg]) == 0
        payload = json.loads((tmp_path / "mc" / "saddle_mc.json").read_text())
        assert payload["fraction"] >= 0.99
        rows = read_csv(tmp_path / "mc" / "saddle_mc.csv")
        assert len(rows) == 100
        assert all(r["escaped"] in ("0", "1") for r in rows)

    def test_non_saddle_exits_3_with_flush(self, tmp_path):
        config = {
            "function": {"name": "quadratic_bowl"},
            "saddle": [0.0, 0.0],
            "eps": 0.1,
            "n_samples": 10,
            "out": str(tmp_path / "bad_mc"),
            "plots": False,
        }
        cfg = write_config(tmp_path, "badmc.json", config)
        assert main(["saddle-mc", "--config", cfg]) == 3
        assert (tmp_path / "bad_mc" / "error.json").exists()


class TestStabilitySweepCommand:
    def test_matrix_rows_stable(self, tmp_path):
        config = {
            "problem": {"kind": "least_squares", "n_samples": 100, "dimension": 2,
                        "noise": 0.0, "seed": 7},
            "delta0_grid": [1e-6, 1e-3, 1.0, 1e3],
            "batch_size_grid": [5, 10, 25, 50],
            "n_batches": 20,
            "linesearch": {"alpha": 1e-4, "beta": 0.5},
            "seed": 7,
            "out": str(tmp_path / "sweep"),
            "plots": False,
        }
        cfg = write_config(tmp_path, "sweep.json", config)
        assert main(["stability-sweep", "--config", cfg]) == 0
        rows = read_csv(tmp_path / "sweep" / "stability_sweep.csv")
        assert len(rows) == 4
        for row in rows:
            cells = [float(v) for k, v in row.items() if k != "batch_size"]
            assert max(cells) / min(cells) < 2.0
