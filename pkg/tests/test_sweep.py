"""Tests for grid expansion, sweep rows, CSV output and validation reports."""

import csv
from functools import lru_cache

import pytest

from src.core.exceptions import NumericalError
from src.models.network import DeploymentModel, NetworkConfig
from src.models.sweep import (
    CheckKind,
    RowStatus,
    SweepRow,
    SweepSpec,
    ToleranceProfile,
    ValidationCheck,
    ValidationReport,
)
from src.services.csma import service as csma
from src.services.sinr import service as sinr
from src.services.sweep import service as sweep
from src.services.uplink import service as uplink

DENSITIES = (0.1, 1.0, 10.0)
POWERS = (0.1, 0.5, 1.0, 2.0, 4.0)
HEIGHTS = (1.5, 3.0, 6.0, 9.0, 12.0, 15.0, 20.0, 25.0, 30.0)


def read_csv(path) -> list[list[str]]:
    return list(csv.reader(path.read_text(encoding="utf-8").splitlines()))


@lru_cache(maxsize=None)
def mean_pt(density: float, p_ap_w: float, h_ap_m: float) -> float:
    config = NetworkConfig(density_per_km2=density, p_ap_w=p_ap_w, h_ap_m=h_ap_m)
    return csma.mean_transmission_probability(
        DeploymentModel.from_config(config),
        csma.contention_model(config),
        uplink.uplink_model(config),
    )


def ase(density: float, p_ap_w: float, h_ap_m: float) -> float:
    config = NetworkConfig(density_per_km2=density, p_ap_w=p_ap_w, h_ap_m=h_ap_m)
    return sinr.area_spectral_efficiency(
        DeploymentModel.from_config(config),
        sinr.sinr_model(config),
        uplink.uplink_model(config),
    )


@pytest.fixture(scope="module")
def anchors() -> dict[str, ValidationCheck]:
    return {check.name: check for check in sweep.anchor_checks()}


class TestSweepSpec:
    def test_default_axes(self):
        spec = SweepSpec()
        assert set(spec.axes) == {"density_per_km2", "p_ap_w", "h_ap_m"}

    def test_unknown_axis_rejected(self):
        with pytest.raises(ValueError):
            SweepSpec(axes={"antenna_gain_db": [1.0]})

    def test_empty_axis_rejected(self):
        with pytest.raises(ValueError):
            SweepSpec(axes={"h_ap_m": []})

    def test_grid_order_last_axis_fastest(self):
        spec = SweepSpec(axes={"p_ap_w": [0.1, 1.0], "h_ap_m": [1.5, 30.0]})
        configs = sweep.expand_grid(spec, NetworkConfig())
        assert [(c.p_ap_w, c.h_ap_m) for c in configs] == [
            (0.1, 1.5),
            (0.1, 30.0),
            (1.0, 1.5),
            (1.0, 30.0),
        ]

    def test_default_grid_size(self):
        assert len(sweep.expand_grid(SweepSpec(), NetworkConfig())) == 3 * 5 * 9


class TestSweepRows:
    def test_row_matches_analysis(self):
        config = NetworkConfig(h_ap_m=30.0)
        row = sweep.evaluate_point(config)
        report = sinr.analyze(config)
        assert row.status is RowStatus.OK
        assert row.throughput_mbps == pytest.approx(report.throughput_mbps)
        assert row.coverage_range_m == pytest.approx(report.coverage_range_m)

    def test_domain_error_becomes_status(self):
        row = sweep.evaluate_point(NetworkConfig(density_per_km2=0.0))
        assert row.status is RowStatus.DOMAIN_ERROR
        assert row.throughput_mbps is None

    def test_numerical_error_becomes_status(self, monkeypatch):
        def fail(config):
            raise NumericalError("quadrature did not converge")

        monkeypatch.setattr(sweep.sinr, "analyze", fail)
        row = sweep.evaluate_point(NetworkConfig())
        assert row.status is RowStatus.NUMERICAL_ERROR
        assert row.message == "quadrature did not converge"

    def test_csv_is_schema_stable(self, tmp_path):
        rows = [
            SweepRow(
                fingerprint="abc",
                density_per_km2=1.0,
                p_ap_w=1.0,
                h_ap_m=10.0,
                status=RowStatus.DOMAIN_ERROR,
                message="no client can associate",
            )
        ]
        path = tmp_path / "sweep.csv"
        sweep.write_sweep_csv(rows, path)
        header, line = read_csv(path)
        assert header == sweep.SWEEP_COLUMNS
        assert line[header.index("status")] == "domain_error"
        assert line[header.index("throughput_mbps")] == ""

    def test_same_grid_same_bytes(self, tmp_path):
        spec = SweepSpec(axes={"h_ap_m": [10.0, 30.0]})
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        sweep.write_sweep_csv(sweep.run_sweep(spec, NetworkConfig(), workers=1), first)
        sweep.write_sweep_csv(sweep.run_sweep(spec, NetworkConfig(), workers=1), second)
        assert first.read_bytes() == second.read_bytes()
        assert len(read_csv(first)) == 3


class TestValidationReport:
    def check(self, passed: bool, enforced: bool = True) -> ValidationCheck:
        return ValidationCheck(
            name="x",
            kind=CheckKind.ANCHOR,
            analytic=1.0,
            reference=1.0,
            tolerance=0.1,
            passed=passed,
            enforced=enforced,
        )

    def test_unenforced_misses_are_deviations(self):
        report = ValidationReport(
            fingerprint="f",
            profile=ToleranceProfile.PAPER,
            seed=1,
            reps=100,
            checks=[self.check(True), self.check(False, enforced=False)],
        )
        assert report.passed
        assert len(report.deviations) == 1

    def test_enforced_miss_fails(self):
        report = ValidationReport(
            fingerprint="f",
            profile=ToleranceProfile.STRICT,
            seed=1,
            reps=100,
            checks=[self.check(False)],
        )
        assert not report.passed

    def test_anchor_checks(self, anchors):
        checks = anchors
        assert checks["coverage_range_30m"].passed
        assert checks["starvation_1perkm2_30m"].passed
        assert checks["mean_pt_4w_1.5m"].passed
        assert checks["mean_pt_4w_15m"].passed
        throughput = [
            c for c in checks.values() if c.name.startswith(("throughput", "ase"))
        ]
        assert len(throughput) == 4
        assert not any(c.enforced for c in throughput)

    def test_recorded_anchor_deviations(self, anchors):
        # Values the model lands on; the misses are documented deviations.
        assert anchors["coverage_range_30m"].analytic == pytest.approx(599.3, rel=1e-3)
        sparse = anchors["throughput_mbps_sparse"]
        medium = anchors["throughput_mbps_medium"]
        dense_9m = anchors["ase_mbps_km2_dense_9m"]
        dense_6m = anchors["ase_bps_hz_km2_dense_6m"]
        assert sparse.analytic == pytest.approx(37.06, rel=0.02)
        assert medium.analytic == pytest.approx(7.62, rel=0.02)
        assert dense_9m.analytic == pytest.approx(32.9, rel=0.02)
        assert dense_6m.analytic == pytest.approx(10.47, rel=0.02)
        assert sparse.passed and dense_6m.passed
        assert not medium.passed and not dense_9m.passed

    def test_oracle_checks_over_a_grid(self, monkeypatch):
        def one_check(config, reps, seed, workers):
            return [
                ValidationCheck(
                    name="pt_r100m",
                    kind=CheckKind.ORACLE,
                    analytic=config.p_ap_w,
                    reference=config.h_ap_m,
                    tolerance=0.03,
                    passed=True,
                )
            ]

        monkeypatch.setattr(sweep, "_point_oracle_checks", one_check)
        spec = SweepSpec(axes={"p_ap_w": [0.1, 4.0], "h_ap_m": [1.5, 30.0]})
        report = sweep.validate_config(
            NetworkConfig(), ToleranceProfile.STRICT, reps=100, seed=1, spec=spec
        )
        assert [c.name for c in report.checks] == [
            "pt_r100m@p_ap_w=0.1;h_ap_m=1.5",
            "pt_r100m@p_ap_w=0.1;h_ap_m=30",
            "pt_r100m@p_ap_w=4;h_ap_m=1.5",
            "pt_r100m@p_ap_w=4;h_ap_m=30",
        ]
        assert [(c.analytic, c.reference) for c in report.checks] == [
            (0.1, 1.5),
            (0.1, 30.0),
            (4.0, 1.5),
            (4.0, 30.0),
        ]

    def test_single_config_names_are_plain(self, monkeypatch):
        monkeypatch.setattr(
            sweep,
            "_point_oracle_checks",
            lambda config, reps, seed, workers: [
                ValidationCheck(
                    name="starvation",
                    kind=CheckKind.ORACLE,
                    analytic=0.5,
                    reference=0.5,
                    tolerance=0.01,
                    passed=True,
                )
            ],
        )
        checks = sweep.oracle_checks(NetworkConfig(), reps=100, seed=1)
        assert [c.name for c in checks] == ["starvation"]

    def test_validation_csv(self, tmp_path):
        report = ValidationReport(
            fingerprint="f",
            profile=ToleranceProfile.STRICT,
            seed=1,
            reps=100,
            checks=[self.check(True)],
        )
        path = tmp_path / "validate.csv"
        sweep.write_validation_csv(report, path)
        header, line = read_csv(path)
        assert header == sweep.VALIDATION_COLUMNS
        assert line[header.index("passed")] == "true"

    @pytest.mark.slow
    def test_default_config_passes_strict_profile(self):
        report = sweep.validate_config(
            NetworkConfig(), ToleranceProfile.STRICT, reps=200, seed=20170215
        )
        assert report.passed
        assert all(check.kind is CheckKind.ORACLE for check in report.checks)


class TestTrends:
    @pytest.mark.parametrize("p_ap_w", (0.1, 1.0, 4.0))
    @pytest.mark.parametrize("h_ap_m", (1.5, 10.0, 30.0))
    def test_mean_pt_falls_with_density(self, p_ap_w, h_ap_m):
        values = [mean_pt(density, p_ap_w, h_ap_m) for density in DENSITIES]
        assert values == sorted(values, reverse=True)

    @pytest.mark.parametrize("h_ap_m", (1.5, 10.0, 30.0))
    def test_mean_pt_falls_with_power(self, h_ap_m):
        values = [mean_pt(1.0, p_ap_w, h_ap_m) for p_ap_w in POWERS]
        assert values == sorted(values, reverse=True)

    @pytest.mark.parametrize("p_ap_w", (0.1, 1.0, 4.0))
    def test_mean_pt_falls_with_height(self, p_ap_w):
        values = [mean_pt(1.0, p_ap_w, h_ap_m) for h_ap_m in HEIGHTS]
        assert values == sorted(values, reverse=True)

    @pytest.mark.slow
    @pytest.mark.parametrize("h_ap_m", HEIGHTS)
    def test_dense_ase_prefers_low_power_at_every_height(self, h_ap_m):
        low, mid, high = (ase(10.0, p_ap_w, h_ap_m) for p_ap_w in (0.1, 1.0, 4.0))
        assert low >= mid >= high

    def test_sparse_ase_grows_with_power(self):
        values = [ase(0.1, p_ap_w, 1.5) for p_ap_w in (0.1, 1.0, 4.0)]
        assert values[0] < values[1] < values[2]


class TestFigureCurves:
    DISTANCES = (100.0, 400.0, 800.0)
    THRESHOLDS_DB = (0.0, 10.0)

    def curves(self, config):
        return sweep.figure_curves(config, self.DISTANCES, self.THRESHOLDS_DB)

    def test_every_figure_curve_is_emitted(self, config):
        curves = self.curves(config)
        assert [c.name for c in curves] == [
            "link_throughput_mbps",
            "link_throughput_mbps",
            "uplink_viability",
            "transmission_probability",
            "sinr_ccdf",
        ]
        assert [c.meta.get("uplink") for c in curves[:2]] == ["true", "false"]
        assert curves[-1].grid == pytest.approx([1.0, 10.0])

    def test_uplink_limit_never_raises_link_throughput(self, config):
        limited, unlimited = self.curves(config)[:2]
        for with_uplink, without in zip(
            limited.values, unlimited.values, strict=True
        ):
            assert with_uplink <= without

    def test_curves_csv(self, config, tmp_path):
        path = tmp_path / "curves.csv"
        sweep.write_curves_csv(self.curves(config), path)
        header, *rows = read_csv(path)
        assert header == sweep.CURVE_COLUMNS
        assert len(rows) == 4 * len(self.DISTANCES) + len(self.THRESHOLDS_DB)
        first = rows[0]
        assert first[:3] == ["link_throughput_mbps", "r_m", "100"]
        assert "uplink=true" in first[header.index("meta")]
