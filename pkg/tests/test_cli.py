"""Tests for the command-line entry point and its exit codes."""

import csv
from functools import partial

import pytest

from src import cli
from src.core.exceptions import NumericalError
from src.models.sweep import (
    CheckKind,
    ToleranceProfile,
    ValidationCheck,
    ValidationReport,
)
from src.services.sweep import service as sweep


def read_csv(path) -> list[list[str]]:
    return list(csv.reader(path.read_text(encoding="utf-8").splitlines()))


class TestUsage:
    def test_unknown_subcommand(self, capsys):
        assert cli.run(["broadcast"]) == cli.EXIT_USAGE
        assert "usage error" in capsys.readouterr().err

    def test_missing_subcommand(self):
        assert cli.run([]) == cli.EXIT_USAGE

    def test_bad_axis(self):
        assert cli.run(["sweep", "--axis", "h_ap_m"]) == cli.EXIT_USAGE
        assert cli.run(["sweep", "--axis", "antenna_gain_db=1,2"]) == cli.EXIT_USAGE

    def test_plan_needs_demand(self):
        assert cli.run(["plan"]) == cli.EXIT_USAGE


class TestConfigErrors:
    def test_regulatory_violation(self, tmp_path, capsys):
        path = tmp_path / "loud.toml"
        path.write_text("p_ap_w = 5.0\n")
        assert cli.run(["analyze", "--config", str(path)]) == cli.EXIT_USAGE
        assert "REGULATORY_ERROR" in capsys.readouterr().err

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "typo.toml"
        path.write_text("h_ap = 10\n")
        assert cli.run(["analyze", "--config", str(path)]) == cli.EXIT_USAGE

    def test_numerical_failure_exit_code(self, monkeypatch):
        def fail(config):
            raise NumericalError("bisection did not converge")

        monkeypatch.setattr(cli.sinr, "analyze", fail)
        assert cli.run(["analyze"]) == cli.EXIT_NUMERICAL


class TestCommands:
    def test_analyze_writes_summary(self, tmp_path, capsys):
        out = tmp_path / "analysis.csv"
        assert cli.run(["analyze", "--out", str(out)]) == cli.EXIT_OK
        rows = dict(read_csv(out)[1:])
        assert float(rows["contention_radius_m"]) == pytest.approx(1960.0, rel=0.01)
        assert "throughput_mbps" in capsys.readouterr().out

    def test_sweep_writes_grid(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = cli.run(
            ["sweep", "--axis", "h_ap_m=10,30", "--out", str(out)]
        )
        assert code == cli.EXIT_OK
        rows = read_csv(out)
        assert rows[0] == sweep.SWEEP_COLUMNS
        assert len(rows) == 3

    def test_sweep_recommendation(self, capsys):
        code = cli.run(
            ["sweep", "--axis", "h_ap_m=10,30", "--recommend", "coverage"]
        )
        assert code == cli.EXIT_OK
        assert "h_AP=30 m" in capsys.readouterr().out

    def test_plan_for_town(self, fixtures_dir, tmp_path, capsys):
        out = tmp_path / "plan.csv"
        code = cli.run(
            [
                "plan",
                "--households",
                str(fixtures_dir / "sharon_springs.csv"),
                "--rate",
                "10",
                "--per-channel-ase",
                "72",
                "--out",
                str(out),
            ]
        )
        assert code == cli.EXIT_OK
        rows = dict(read_csv(out)[1:])
        assert rows["channels_needed"] == "19"
        assert rows["available_channels"] == "37"
        assert rows["feasible"] == "True"
        assert "channels_needed" in capsys.readouterr().out

    def test_plan_from_count_and_area(self):
        code = cli.run(
            ["plan", "--count", "400", "--area-km2", "3", "--per-channel-ase", "72"]
        )
        assert code == cli.EXIT_OK

    def test_plan_bad_household_file(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("id,lat,lon\na,north,1\n")
        assert cli.run(["plan", "--households", str(path)]) == cli.EXIT_USAGE

    def test_validate_failure_exit_code(self, monkeypatch):
        def failing_report(config, profile, reps, seed, workers, spec=None):
            return ValidationReport(
                fingerprint="f",
                profile=ToleranceProfile(profile),
                seed=seed,
                reps=reps,
                checks=[
                    ValidationCheck(
                        name="pt_r100m",
                        kind=CheckKind.ORACLE,
                        analytic=0.5,
                        reference=0.9,
                        tolerance=0.03,
                        passed=False,
                    )
                ],
            )

        monkeypatch.setattr(cli.sweep, "validate_config", failing_report)
        assert cli.run(["validate", "--reps", "100"]) == cli.EXIT_VALIDATION

    def test_validate_over_axes(self, monkeypatch):
        seen = {}

        def passing_report(config, profile, reps, seed, workers, spec=None):
            seen["spec"] = spec
            return ValidationReport(
                fingerprint="f",
                profile=ToleranceProfile(profile),
                seed=seed,
                reps=reps,
                checks=[],
            )

        monkeypatch.setattr(cli.sweep, "validate_config", passing_report)
        code = cli.run(
            [
                "validate",
                "--reps",
                "100",
                "--axis",
                "p_ap_w=0.1,4",
                "--axis",
                "h_ap_m=30",
            ]
        )
        assert code == cli.EXIT_OK
        assert seen["spec"].axes == {"p_ap_w": [0.1, 4.0], "h_ap_m": [30.0]}

    def test_validate_unknown_axis(self):
        code = cli.run(["validate", "--reps", "100", "--axis", "antenna_gain_db=1"])
        assert code == cli.EXIT_USAGE

    def test_figures_write_curves(self, monkeypatch, tmp_path, capsys):
        monkeypatch.setattr(
            cli.sweep,
            "figure_curves",
            partial(
                sweep.figure_curves,
                distances_m=(100.0, 500.0),
                thresholds_db=(0.0, 10.0),
            ),
        )
        out = tmp_path / "curves.csv"
        assert cli.run(["figures", "--out", str(out)]) == cli.EXIT_OK
        header, *rows = read_csv(out)
        assert header == sweep.CURVE_COLUMNS
        names = {row[0] for row in rows}
        assert names == {
            "link_throughput_mbps",
            "uplink_viability",
            "transmission_probability",
            "sinr_ccdf",
        }
        uplink_flags = {
            row[4].split("uplink=")[1]
            for row in rows
            if row[0] == "link_throughput_mbps"
        }
        assert uplink_flags == {"true", "false"}
        assert "sinr_ccdf" in capsys.readouterr().out

    @pytest.mark.slow
    def test_simulate_writes_estimates(self, tmp_path):
        out = tmp_path / "estimates.csv"
        records = tmp_path / "reps.csv"
        code = cli.run(
            [
                "simulate",
                "--reps",
                "100",
                "--out",
                str(out),
                "--records",
                str(records),
            ]
        )
        assert code == cli.EXIT_OK
        rows = read_csv(out)
        assert rows[0] == sweep.ESTIMATE_COLUMNS
        estimators = {row[0] for row in rows[1:]}
        assert {"pt", "q", "sinr_ccdf", "starvation", "ap_throughput"} <= estimators
        assert len(read_csv(records)) > 100

    @pytest.mark.slow
    def test_simulate_is_reproducible_for_a_seed(self, tmp_path):
        outputs = []
        for name in ("first.csv", "second.csv"):
            out = tmp_path / name
            code = cli.run(
                ["simulate", "--reps", "100", "--seed", "7", "--out", str(out)]
            )
            assert code == cli.EXIT_OK
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]
