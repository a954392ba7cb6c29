from __future__ import annotations

import json
from pathlib import Path

import pytest

from lecopt.cli import EXIT_INFEASIBLE, EXIT_IO, EXIT_OK, EXIT_VALIDATION, main
from lecopt.fixtures import write_fixture_files
from lecopt.scenario import settlement_from_json


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestValidate:
    def test_ok(self, fixture_dir, capsys):
        code, out, _ = run(capsys, "validate", "--config", str(fixture_dir / "community.json"))
        assert code == EXIT_OK
        assert out.strip() == "ok"

    def test_invalid_community(self, fixture_dir, tmp_path, capsys):
        config = write_fixture_files(tmp_path, hours=48)
        cfg = json.loads(config.read_text())
        cfg["sharing"]["coefficients"]["B1"] = 0.9  # sum now > 1
        config.write_text(json.dumps(cfg))
        code, _, err = run(capsys, "validate", "--config", str(config))
        assert code == EXIT_VALIDATION
        assert "sum" in err

    def test_missing_config_is_io_error(self, tmp_path, capsys):
        code, _, err = run(capsys, "validate", "--config", str(tmp_path / "absent.json"))
        assert code == EXIT_IO
        assert "does not exist" in err


class TestGwp:
    def test_stdout_csv(self, fixture_dir, capsys):
        code, out, _ = run(capsys, "gwp", "--mix", str(fixture_dir / "mix.csv"))
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0] == "timestamp,gwp_grid"
        assert len(lines) == 49

    def test_deterministic_file_output(self, fixture_dir, tmp_path, capsys):
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        assert run(capsys, "gwp", "--mix", str(fixture_dir / "mix.csv"), "--out", str(out_a))[0] == EXIT_OK
        assert run(capsys, "gwp", "--mix", str(fixture_dir / "mix.csv"), "--out", str(out_b))[0] == EXIT_OK
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_factor_overrides_change_result(self, fixture_dir, tmp_path, capsys):
        factors = tmp_path / "factors.csv"
        factors.write_text("source,factor\nwind,0.5\n", encoding="utf-8")
        _, base, _ = run(capsys, "gwp", "--mix", str(fixture_dir / "mix.csv"))
        _, overridden, _ = run(capsys, "gwp", "--mix", str(fixture_dir / "mix.csv"), "--factors", str(factors))
        assert base != overridden

    def test_missing_mix_is_io_error(self, tmp_path, capsys):
        code, _, _ = run(capsys, "gwp", "--mix", str(tmp_path / "absent.csv"))
        assert code == EXIT_IO


class TestBaseline:
    def test_stdout_table(self, fixture_dir, capsys):
        code, out, _ = run(capsys, "baseline", "--config", str(fixture_dir / "community.json"))
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0] == "building,cost_eur,ghg_t"
        assert lines[-1].startswith("LEC,")
        assert len(lines) == 6


class TestOptimize:
    def test_full_matrix_outputs(self, fixture_dir, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code, out, _ = run(
            capsys, "optimize", "--config", str(fixture_dir / "community.json"),
            "--objective", "both", "--sharing", "both", "--out", str(out_dir),
        )
        assert code == EXIT_OK
        expected = {"baseline.csv"}
        for obj in ("price", "environment"):
            for share in ("static", "variable"):
                expected |= {
                    f"settlement_{obj}_{share}.json",
                    f"settlement_{obj}_{share}.csv",
                    f"trace_{obj}_{share}.csv",
                }
        assert {p.name for p in out_dir.iterdir()} == expected
        report = settlement_from_json((out_dir / "settlement_price_static.json").read_text())
        assert report.objective == "price"
        assert set(report.costs_eur) == {"B1", "B2", "B3", "B4"}
        assert out.count("scenario:") == 4

    def test_byte_identical_reruns(self, fixture_dir, tmp_path, capsys):
        args = ("optimize", "--config", str(fixture_dir / "community.json"), "--objective", "price", "--sharing", "static")
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert run(capsys, *args, "--out", str(a))[0] == EXIT_OK
        assert run(capsys, *args, "--out", str(b))[0] == EXIT_OK
        for name in ("baseline.csv", "settlement_price_static.json", "settlement_price_static.csv", "trace_price_static.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_infeasible_exit_code(self, tmp_path, capsys):
        config = write_fixture_files(tmp_path, hours=48)
        cfg = json.loads(config.read_text())
        cfg["bess"]["p_ch_max"] = 0.001  # soc_final unreachable after any discharge
        cfg["bess"]["soc_initial"] = 31.65
        cfg["bess"]["soc_final"] = 189.9
        config.write_text(json.dumps(cfg))
        code, _, err = run(capsys, "optimize", "--config", str(config))
        assert code == EXIT_INFEASIBLE
        assert "no feasible schedule" in err


class TestExportLp:
    def test_file_output(self, fixture_dir, tmp_path, capsys):
        out = tmp_path / "problem.lp"
        code, _, _ = run(
            capsys, "export-lp", "--config", str(fixture_dir / "community.json"),
            "--objective", "environment", "--out", str(out),
        )
        assert code == EXIT_OK
        text = out.read_text()
        assert text.startswith("\\ scenario: objective=environment")
        assert text.rstrip().endswith("End")

    def test_stdout_matches_file(self, fixture_dir, tmp_path, capsys):
        out = tmp_path / "problem.lp"
        run(capsys, "export-lp", "--config", str(fixture_dir / "community.json"), "--out", str(out))
        code, stdout, _ = run(capsys, "export-lp", "--config", str(fixture_dir / "community.json"))
        assert code == EXIT_OK
        assert stdout == out.read_text()
