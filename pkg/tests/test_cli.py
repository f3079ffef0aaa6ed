import csv
import json
import math

import numpy as np
import pytest

from radcode.cli import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, main


def run_cli(args):
    return main(args)


class TestConfigHandling:
    def test_bad_config_file_exits_2(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert run_cli(["synthesize", "--config", str(path)]) == EXIT_CONFIG
        err = capsys.readouterr().err
        assert json.loads(err)["error"] == "config"

    def test_unknown_schema_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"schema": 99}))
        assert run_cli(["synthesize", "--config", str(path)]) == EXIT_CONFIG

    def test_invalid_beta_override(self, tmp_path):
        assert run_cli(["synthesize", "--beta", "1.5",
                        "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_scenario_field_errors_reported(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"scenario": {"pfa": 2.0}}))
        assert run_cli(["synthesize", "--config", str(path)]) == EXIT_CONFIG

    def test_reference_length_mismatch(self, tmp_path):
        code_file = tmp_path / "short.txt"
        code_file.write_text("1.0 0.0\n0.0 1.0\n")
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"reference": {"file": str(code_file)}}))
        assert run_cli(["synthesize", "--config", str(cfg)]) == EXIT_CONFIG

    def test_near_singular_covariance_exits_3(self, tmp_path):
        # passes scenario validation (positive definite) but fails the
        # conditioning gate at inversion time
        diag = [1.0] * 31 + [1e-13]
        matrix = [[{"re": diag[i] if i == j else 0.0, "im": 0.0}
                   for j in range(32)] for i in range(32)]
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"scenario": {"interference": {"matrix": matrix}},
                                   "solver": {"n_iter_max": 5}}))
        assert run_cli(["synthesize", "--config", str(cfg),
                        "--out", str(tmp_path / "out")]) == EXIT_SOLVER


class TestSynthesize:
    def test_zeta_zero_returns_reference(self, tmp_path):
        out = tmp_path / "out"
        assert run_cli(["synthesize", "--zeta", "0.0", "--out", str(out)]) == EXIT_OK
        payload = json.loads((out / "synthesize_result.json").read_text())
        code = np.array([complex(e["re"], e["im"]) for e in payload["result"]["code"]])
        from radcode import p3_code
        np.testing.assert_allclose(code, p3_code(32).entries, atol=1e-9)

    def test_trace_csv_round_trips(self, tmp_path):
        out = tmp_path / "out"
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"solver": {"beta": 0.01, "zeta": 0.1,
                                              "n_iter_max": 80}}))
        assert run_cli(["synthesize", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        rows = [r for r in (out / "synthesize_trace.csv").read_text().splitlines()
                if not r.startswith("#")]
        reader = list(csv.reader(rows))
        assert reader[0] == ["iteration", "upsilon", "chosen_block"]
        upsilon = [float(r[1]) for r in reader[1:]]
        assert all(b >= a - 1e-12 for a, b in zip(upsilon, upsilon[1:]))

    def test_outputs_byte_identical_across_runs(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"solver": {"beta": 0.0, "zeta": 0.1,
                                              "n_iter_max": 60}}))
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert run_cli(["synthesize", "--config", str(cfg), "--out", str(out_a)]) == EXIT_OK
        assert run_cli(["synthesize", "--config", str(cfg), "--out", str(out_b)]) == EXIT_OK
        for name in ("synthesize_result.json", "synthesize_trace.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


class TestPareto:
    def test_row_count_and_round_trip(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "solver": {"n_iter_max": 40},
            "sweep": {"betas": [0.0, 1.0], "zetas": [0.4]},
        }))
        out = tmp_path / "out"
        assert run_cli(["pareto", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        lines = (out / "pareto.csv").read_text().splitlines()
        assert lines[0].startswith("#")
        rows = list(csv.reader(lines[1:]))
        header, body = rows[0], rows[1:]
        assert header == ["beta", "zeta", "sinr_db", "inv_det_crb", "pd", "papr",
                          "isl_db", "status"]
        assert len(body) == 2 * 1 + 2  # grid rows + two reference rows
        assert body[-2][0] == "ref:p3" and body[-1][0] == "ref:generalized_barker"
        # numeric fields round-trip exactly through repr
        for row in body[:2]:
            for cell in row[2:7]:
                value = float(cell)
                assert repr(value) == cell

    def test_json_format(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "solver": {"n_iter_max": 30},
            "sweep": {"betas": [1.0], "zetas": [1.0]},
        }))
        out = tmp_path / "out"
        assert run_cli(["pareto", "--config", str(cfg), "--out", str(out),
                        "--format", "json"]) == EXIT_OK
        payload = json.loads((out / "pareto.json").read_text())
        assert len(payload["rows"]) == 3

    def test_worker_pool_matches_serial(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "solver": {"n_iter_max": 40},
            "sweep": {"betas": [0.0, 1.0], "zetas": [0.4]},
        }))
        out_serial, out_pool = tmp_path / "serial", tmp_path / "pool"
        assert run_cli(["pareto", "--config", str(cfg), "--out", str(out_serial)]) == EXIT_OK
        assert run_cli(["pareto", "--config", str(cfg), "--out", str(out_pool),
                        "--workers", "2"]) == EXIT_OK
        assert (out_serial / "pareto.csv").read_bytes() == (out_pool / "pareto.csv").read_bytes()


class TestDoppler:
    def test_summary_and_table(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "solver": {"beta": 0.01, "zeta": 0.4, "n_iter_max": 120},
            "sweep": {"nu_points": 101},
        }))
        out = tmp_path / "out"
        assert run_cli(["doppler", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        summary = json.loads((out / "doppler_summary.json").read_text())
        assert summary["loss_threshold"] == 0.9
        lines = [l for l in (out / "doppler.csv").read_text().splitlines()
                 if not l.startswith("#")]
        assert len(lines) == 102  # header + grid rows


class TestBenchmark:
    def test_benchmark_outputs(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"solver": {"n_iter_max": 400}}))
        out = tmp_path / "out"
        assert run_cli(["benchmark", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        payload = json.loads((out / "benchmark.json").read_text())
        assert 0.0 < payload["pd_bm"] <= 1.0
        assert payload["det_crb_bm"] > 0.0
        assert len(payload["sinr_code"]) == 32


class TestValidate:
    def test_validate_passes_on_fresh_checkout(self, capsys):
        assert run_cli(["validate"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert out.count("PASS") == 6
