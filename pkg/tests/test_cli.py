"""Command-line interface: simulate, fit, decide, plot."""

import csv

import numpy as np
import pytest

from survitr.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from survitr.data import save_dataset
from survitr.model_io import load_model
from survitr.simulation import ScenarioSpec, generate_dataset, with_calibrated_tau

FAST = [
    "--set", "scenario=case1", "--set", "n=120", "--set", "epochs=20",
    "--set", "net_width=8", "--set", "copula_candidates=clayton",
]


def write_case1_csv(path, n=150, seed=5):
    spec = with_calibrated_tau(ScenarioSpec(tag="case1", n=n))
    d = generate_dataset(spec, seed=seed)
    save_dataset(d, path)
    return d


def write_covariates(path, X):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{k}" for k in range(1, X.shape[1] + 1)])
        for row in X:
            writer.writerow([repr(float(v)) for v in row])


class TestSimulate:
    def test_smoke_run_writes_reports(self, tmp_path, capsys):
        rc = main(["simulate", *FAST, "--set", "R=3", "--set", "n_test=60",
                   "--out", str(tmp_path)])
        assert rc == EXIT_OK
        summary = (tmp_path / "summary.txt").read_text()
        otia_lines = [ln for ln in summary.splitlines() if ln.startswith("OTIA mean=")]
        assert len(otia_lines) == 3
        for ln in otia_lines:
            val = float(ln.split("=")[1].split()[0])
            assert 0.0 <= val <= 1.0
        assert (tmp_path / "report.csv").exists()

    def test_deterministic_report_bytes(self, tmp_path):
        args = ["simulate", *FAST, "--set", "R=2", "--set", "n_test=50",
                "--set", "weight_configs=0,0"]
        assert main([*args, "--out", str(tmp_path / "a")]) == EXIT_OK
        assert main([*args, "--out", str(tmp_path / "b")]) == EXIT_OK
        assert (tmp_path / "a" / "report.csv").read_bytes() == \
            (tmp_path / "b" / "report.csv").read_bytes()

    def test_parallel_jobs_match_serial(self, tmp_path):
        args = ["simulate", *FAST, "--set", "R=2", "--set", "n_test=50",
                "--set", "weight_configs=1,1"]
        assert main([*args, "--out", str(tmp_path / "s"), "--jobs", "1"]) == EXIT_OK
        assert main([*args, "--out", str(tmp_path / "p"), "--jobs", "2"]) == EXIT_OK
        assert (tmp_path / "s" / "report.csv").read_bytes() == \
            (tmp_path / "p" / "report.csv").read_bytes()

    def test_unknown_config_key(self, tmp_path):
        assert main(["simulate", "--set", "bogus=1", "--out", str(tmp_path)]) == \
            EXIT_USAGE

    def test_bad_weight_config(self, tmp_path):
        assert main(["simulate", *FAST, "--set", "weight_configs=1;2,3",
                     "--out", str(tmp_path)]) == EXIT_USAGE

    def test_config_file(self, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text(
            "# smoke config\nscenario = case1\nn = 120\nR = 2\nn_test = 50\n"
            "epochs = 10\nnet_width = 8\ncopula_candidates = clayton\n"
            "weight_configs = 0,0\n"
        )
        assert main(["simulate", "--config", str(cfgfile),
                     "--out", str(tmp_path)]) == EXIT_OK


class TestFitDecide:
    def test_roundtrip_matches_in_memory(self, tmp_path):
        data = tmp_path / "data.csv"
        d = write_case1_csv(data)
        model_path = tmp_path / "model.json"
        rc = main(["fit", *FAST, "--data", str(data), "--out", str(model_path),
                   "--c1", "1", "--c2", "1"])
        assert rc == EXIT_OK
        model = load_model(model_path)

        cov = tmp_path / "cov.csv"
        write_covariates(cov, d.x)
        out = tmp_path / "decisions.csv"
        assert main(["decide", "--model", str(model_path), "--covariates",
                     str(cov), "--out", str(out)]) == EXIT_OK

        want = model.decide(d.x)
        probs = model.policy_probs(d.x)
        with open(out, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == d.n
        for i, row in enumerate(rows):
            assert int(row["arm"]) == int(want[i])
            p = np.array([float(row[f"p{a}"]) for a in range(3)])
            assert abs(p.sum() - 1.0) < 1e-9
            assert int(row["arm"]) == int(np.argmax(p))
            np.testing.assert_allclose(p, probs[i], atol=0)

    def test_missing_column_named(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("y1,y2,d1,a,x1,x2\n1.0,1.0,1,0,0.1,0.2\n")
        rc = main(["fit", *FAST, "--data", str(bad),
                   "--out", str(tmp_path / "m.json")])
        assert rc == EXIT_USAGE
        assert "d2" in capsys.readouterr().err

    def test_single_arm_data_rejected(self, tmp_path):
        data = tmp_path / "one_arm.csv"
        spec = with_calibrated_tau(ScenarioSpec(tag="case1", n=150))
        d = generate_dataset(spec, seed=2)
        from survitr.data import Dataset

        keep = d.a == 0
        d0 = Dataset(d.y1[keep], d.y2[keep], d.delta1[keep], d.delta2[keep],
                     d.x[keep], d.a[keep], K=0)
        save_dataset(d0, data)
        rc = main(["fit", *FAST, "--data", str(data),
                   "--out", str(tmp_path / "m.json")])
        assert rc in (EXIT_USAGE, EXIT_RUNTIME)
        assert rc == EXIT_USAGE

    def test_dimension_mismatch(self, tmp_path):
        data = tmp_path / "data.csv"
        write_case1_csv(data)
        model_path = tmp_path / "model.json"
        assert main(["fit", *FAST, "--data", str(data),
                     "--out", str(model_path)]) == EXIT_OK
        cov = tmp_path / "cov.csv"
        write_covariates(cov, np.zeros((4, 3)))
        assert main(["decide", "--model", str(model_path), "--covariates",
                     str(cov), "--out", str(tmp_path / "d.csv")]) == EXIT_USAGE

    def test_missing_model_file(self, tmp_path):
        cov = tmp_path / "cov.csv"
        write_covariates(cov, np.zeros((2, 2)))
        rc = main(["decide", "--model", str(tmp_path / "nope.json"),
                   "--covariates", str(cov), "--out", str(tmp_path / "d.csv")])
        assert rc != EXIT_OK


class TestPlot:
    def test_scenario_truth_panel(self, tmp_path):
        out = tmp_path / "truth.svg"
        rc = main(["plot", "--scenario", "case1", "--grid-n", "30",
                   "--out", str(out)])
        assert rc == EXIT_OK
        text = out.read_text()
        assert text.startswith('<?xml version="1.0"')
        assert "ground truth" in text

    def test_model_panel(self, tmp_path):
        data = tmp_path / "data.csv"
        write_case1_csv(data)
        model_path = tmp_path / "model.json"
        assert main(["fit", *FAST, "--data", str(data),
                     "--out", str(model_path)]) == EXIT_OK
        out = tmp_path / "fit.svg"
        rc = main(["plot", "--model", str(model_path), "--scenario", "case1",
                   "--grid-n", "25", "--out", str(out)])
        assert rc == EXIT_OK
        text = out.read_text()
        assert "ground truth" in text and "fitted policy" in text

    def test_zero_grid_rejected(self, tmp_path):
        assert main(["plot", "--scenario", "case1", "--grid-n", "0",
                     "--out", str(tmp_path / "x.svg")]) == EXIT_USAGE

    def test_no_source_rejected(self, tmp_path):
        assert main(["plot", "--out", str(tmp_path / "x.svg")]) == EXIT_USAGE


class TestUsage:
    def test_no_command(self):
        assert main([]) == EXIT_USAGE

    def test_unknown_command(self):
        assert main(["frobnicate"]) == EXIT_USAGE
