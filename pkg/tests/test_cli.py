"""Command-line interface: subcommands, config files, exit codes."""

import csv

import pytest

from rsis.cli import cli_main
from rsis.harness import AGGREGATE_COLUMNS, CSV_COLUMNS, read_rows


def run_cli(capsys, *argv):
    code = cli_main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestTruth:
    def test_gum_defaults_symmetric(self, capsys):
        code, out, _ = run_cli(capsys, "truth", "--model", "gum")
        assert code == 0
        assert float(out.strip()) == 0.0

    def test_gum_conjugate(self, capsys):
        code, out, _ = run_cli(capsys, "truth", "--model", "gum",
                               "--sigma", "1.0", "--y-obs", "1.5")
        assert code == 0
        assert float(out.strip()) == pytest.approx(0.75)

    def test_gmm_default(self, capsys):
        code, out, _ = run_cli(capsys, "truth", "--model", "gmm")
        assert code == 0
        assert float(out.strip()) == pytest.approx(-0.06439191196333822)


class TestRun:
    def test_writes_csv_with_schema(self, capsys, tmp_path):
        out_csv = tmp_path / "rows.csv"
        code, out, _ = run_cli(
            capsys, "run", "--model", "gum", "--estimator", "ars",
            "--particles", "200", "--checkpoints", "100,200",
            "--runs", "2", "--seed", "5", "--out", str(out_csv))
        assert code == 0
        assert "wrote 4 rows" in out
        rows = read_rows(str(out_csv))
        assert len(rows) == 4
        with open(out_csv, newline="") as fh:
            assert next(csv.reader(fh)) == CSV_COLUMNS

    def test_aggregate_out_flag(self, capsys, tmp_path):
        out_csv = tmp_path / "rows.csv"
        agg_csv = tmp_path / "agg.csv"
        code, _, _ = run_cli(
            capsys, "run", "--model", "gum", "--estimator", "biased",
            "--particles", "100", "--checkpoints", "100",
            "--runs", "3", "--seed", "5",
            "--out", str(out_csv), "--aggregate-out", str(agg_csv))
        assert code == 0
        with open(agg_csv, newline="") as fh:
            recs = list(csv.DictReader(fh))
        assert list(recs[0]) == AGGREGATE_COLUMNS
        assert len(recs) == 1 and recs[0]["runs"] == "3"

    def test_seed_env_fallback(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("PPL_ARS_SEED", "42")
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        for path in (a, b):
            code, _, _ = run_cli(
                capsys, "run", "--model", "gum", "--estimator", "ic",
                "--particles", "100", "--checkpoints", "100",
                "--out", str(path))
            assert code == 0
        assert read_rows(str(a))[0].seed == read_rows(str(b))[0].seed

    def test_bad_checkpoints_exit_code(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "run", "--particles", "100", "--checkpoints", "500",
            "--out", str(tmp_path / "x.csv"))
        assert code == 2
        assert "checkpoint" in err


class TestAggregateCommand:
    def test_round_trip(self, capsys, tmp_path):
        raw = tmp_path / "rows.csv"
        run_cli(capsys, "run", "--model", "gum", "--estimator", "biased",
                "--particles", "100", "--checkpoints", "100", "--runs", "2",
                "--seed", "1", "--out", str(raw))
        agg = tmp_path / "agg.csv"
        code, out, _ = run_cli(capsys, "aggregate", "--csv", str(raw),
                               "--out", str(agg))
        assert code == 0 and agg.exists()


class TestCheckVariance:
    def test_gum_fixed_proposal_finite(self, capsys):
        code, out, _ = run_cli(capsys, "check-variance", "--model", "gum",
                               "--scope", "branch_hi", "--proposal", "fixed")
        assert code == 0
        s = float(out.split("S =")[1].split("(")[0])
        assert s == pytest.approx(0.9443213086, abs=1e-6)
        assert "finite-variance regime" in out

    def test_prior_proposal_exact_half(self, capsys):
        code, out, _ = run_cli(capsys, "check-variance", "--model", "gum",
                               "--scope", "branch_hi", "--proposal", "prior")
        assert code == 0
        s = float(out.split("S =")[1].split("(")[0])
        assert s == pytest.approx(0.5, abs=1e-7)

    def test_narrow_proposal_flagged_infinite(self, capsys):
        code, out, _ = run_cli(capsys, "check-variance", "--model", "gum",
                               "--proposal", "normal:-2,0.75")
        assert code == 0
        assert "INFINITE-VARIANCE REGIME" in out

    def test_unknown_proposal_spec(self, capsys):
        code, _, err = run_cli(capsys, "check-variance", "--proposal", "bogus")
        assert code == 2 and "proposal" in err


class TestTheorem2Check:
    def test_report_contains_all_estimators(self, capsys):
        code, out, _ = run_cli(capsys, "theorem2-check", "--replications",
                               "2000", "--seed", "3")
        assert code == 0
        assert "collapsed weight w_C" in out
        for token in ("ic", "ars(M=10,N=10)", "biased"):
            assert token in out
        assert "deviation factor" in out


class TestConfigFile:
    def test_values_used_as_defaults(self, capsys, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(
            "# experiment defaults\n"
            "particles = 100\n"
            "checkpoints = 100\n"
            "estimator = biased\n"
            "seed = 7\n"
        )
        out_csv = tmp_path / "rows.csv"
        code, out, _ = run_cli(capsys, "--config", str(cfg), "run",
                               "--out", str(out_csv))
        assert code == 0
        rows = read_rows(str(out_csv))
        assert len(rows) == 1 and rows[0].estimator == "biased"

    def test_flags_override_config(self, capsys, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("particles = 100\ncheckpoints = 100\nestimator = biased\n")
        out_csv = tmp_path / "rows.csv"
        code, _, _ = run_cli(capsys, "--config", str(cfg), "run",
                             "--estimator", "ic", "--out", str(out_csv))
        assert code == 0
        assert read_rows(str(out_csv))[0].estimator == "ic"

    def test_malformed_config(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("particles 100\n")
        code, _, err = run_cli(capsys, "--config", str(cfg), "truth")
        assert code == 2 and "config" in err
