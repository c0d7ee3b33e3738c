"""Config files, parameter sweeps, simulation runs and validation reports."""

import csv
import itertools
import json
import logging
import sys
from collections.abc import Callable, Iterator, Sequence
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from pydantic import ValidationError as PydanticValidationError

from src.core.config import get_settings
from src.core.exceptions import ModelDomainError, NumericalError, ValidationError
from src.core.fingerprint import fingerprint
from src.models.metrics import Estimate, MetricCurve
from src.models.network import DeploymentModel, NetworkConfig
from src.models.simulation import EstimateRow, ReplicationRecord
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
from src.services.deployment import service as deployment
from src.services.montecarlo import service as montecarlo
from src.services.sinr import service as sinr
from src.services.uplink import service as uplink

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    "fingerprint",
    "density_per_km2",
    "p_ap_w",
    "h_ap_m",
    "status",
    "mean_transmission_probability",
    "coverage_range_m",
    "starvation_probability",
    "coverage_fraction",
    "throughput_bps_hz",
    "throughput_mbps",
    "ase_bps_hz_km2",
    "ase_mbps_km2",
    "message",
]
ESTIMATE_COLUMNS = ["estimator", "parameter", "grid_value", "value", "stderr", "n"]
VALIDATION_COLUMNS = [
    "name",
    "kind",
    "analytic",
    "reference",
    "stderr",
    "tolerance",
    "passed",
    "enforced",
]
CURVE_COLUMNS = ["curve", "grid_name", "grid_value", "value", "meta"]

PT_DISTANCES_M = (100.0, 300.0, 700.0)
SINR_DISTANCE_M = 200.0
SINR_THRESHOLDS_DB = (0.0, 5.0, 10.0)

# Figure grids: distances for the per-link curves, thresholds for the CCDF.
CURVE_DISTANCES_M = tuple(float(d) for d in range(50, 3001, 50))
CURVE_THRESHOLDS_DB = tuple(float(db) for db in range(-10, 31))

PT_TOLERANCE = 0.03
Q_TOLERANCE = 0.03
SINR_TOLERANCE = 0.05
STARVATION_TOLERANCE = 0.01
MARGINAL_TOLERANCE = 0.01
STDERR_MULTIPLE = 3.0

# Published figures the model is expected to land near.
COVERAGE_ANCHOR_M = 700.0
COVERAGE_ANCHOR_TOLERANCE = 0.15
THROUGHPUT_ANCHOR_TOLERANCE = 0.25


def _format(value: float | None) -> str:
    if value is None:
        return ""
    return format(value, ".10g")


def load_config(
    path: Path | None, override_regulatory: bool = False
) -> tuple[NetworkConfig, DeploymentModel]:
    """Read a flat TOML config; absent keys take their defaults.

    Without a path the defaults are used as they are.
    """
    data: dict[str, Any] = {}
    try:
        if path is not None:
            with path.open("rb") as handle:
                data = tomllib.load(handle)
    except FileNotFoundError as exc:
        raise ValidationError(
            f"Config file not found: {path}", details={"path": str(path)}
        ) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(
            f"Config file is not valid TOML: {exc}", details={"path": str(path)}
        ) from exc

    nested = [key for key, value in data.items() if isinstance(value, dict)]
    if nested:
        raise ValidationError(
            "Config keys must be flat", details={"path": str(path), "tables": nested}
        )
    if override_regulatory:
        data["override_regulatory"] = True
    try:
        config = NetworkConfig.model_validate(data)
    except PydanticValidationError as exc:
        raise ValidationError(
            f"Invalid config {path}",
            details={
                "path": str(path),
                "errors": [
                    {"key": ".".join(str(p) for p in err["loc"]), "message": err["msg"]}
                    for err in exc.errors()
                ],
            },
        ) from exc
    logger.debug("Config loaded", extra={"path": str(path)})
    return config, DeploymentModel.from_config(config)


def dump_config(config: NetworkConfig, path: Path) -> None:
    """Write ``config`` as flat TOML that ``load_config`` reads back unchanged."""
    lines = [
        f"{key} = {json.dumps(value)}"
        for key, value in config.model_dump(mode="json").items()
    ]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def expand_grid(spec: SweepSpec, base: NetworkConfig) -> list[NetworkConfig]:
    """Every axis combination applied to ``base``, last axis varying fastest."""
    names = list(spec.axes)
    return [
        base.replace(**dict(zip(names, values, strict=True)))
        for values in itertools.product(*(spec.axes[name] for name in names))
    ]


def evaluate_point(config: NetworkConfig) -> SweepRow:
    """Analyze one grid point; numerical and domain failures become row status."""
    keys = {
        "fingerprint": fingerprint(config),
        "density_per_km2": config.density_per_km2,
        "p_ap_w": config.p_ap_w,
        "h_ap_m": config.h_ap_m,
    }
    try:
        report = sinr.analyze(config)
    except NumericalError as exc:
        logger.warning("Sweep point failed", extra={**keys, "error": exc.message})
        return SweepRow(**keys, status=RowStatus.NUMERICAL_ERROR, message=exc.message)
    except ModelDomainError as exc:
        return SweepRow(**keys, status=RowStatus.DOMAIN_ERROR, message=exc.message)
    return SweepRow(
        **keys,
        mean_transmission_probability=report.mean_transmission_probability,
        coverage_range_m=report.coverage_range_m,
        starvation_probability=report.starvation_probability,
        coverage_fraction=report.coverage_fraction,
        throughput_bps_hz=report.throughput_bps_hz,
        throughput_mbps=report.throughput_mbps,
        ase_bps_hz_km2=report.ase_bps_hz_km2,
        ase_mbps_km2=report.ase_mbps_km2,
    )


def run_sweep(
    spec: SweepSpec, base: NetworkConfig, workers: int | None = None
) -> list[SweepRow]:
    """Evaluate the grid in parallel; rows come back in grid order."""
    configs = expand_grid(spec, base)
    workers = get_settings().workers if workers is None else workers
    logger.info("Sweep started", extra={"points": len(configs), "workers": workers})
    if workers <= 1:
        rows = [evaluate_point(config) for config in configs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(evaluate_point, configs))
    failed = sum(row.status is not RowStatus.OK for row in rows)
    logger.info("Sweep finished", extra={"points": len(rows), "failed": failed})
    return rows


def _write_csv(
    path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]
) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def write_sweep_csv(rows: Sequence[SweepRow], path: Path) -> None:
    _write_csv(
        path,
        SWEEP_COLUMNS,
        [
            [
                row.fingerprint,
                _format(row.density_per_km2),
                _format(row.p_ap_w),
                _format(row.h_ap_m),
                row.status.value,
                _format(row.mean_transmission_probability),
                _format(row.coverage_range_m),
                _format(row.starvation_probability),
                _format(row.coverage_fraction),
                _format(row.throughput_bps_hz),
                _format(row.throughput_mbps),
                _format(row.ase_bps_hz_km2),
                _format(row.ase_mbps_km2),
                row.message,
            ]
            for row in rows
        ],
    )


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _row(name: str, parameter: str, grid_value: float, est: Estimate) -> EstimateRow:
    return EstimateRow(
        estimator=name,
        parameter=parameter,
        grid_value=grid_value,
        value=est.value,
        stderr=est.stderr,
        n=est.n,
    )


def simulate_config(
    config: NetworkConfig,
    reps: int,
    seed: int,
    workers: int | None = None,
    records: list[ReplicationRecord] | None = None,
) -> Iterator[EstimateRow]:
    """Monte Carlo estimates of every simulated quantity at one config.

    Rows are yielded as each estimator finishes so that callers keep the
    finished ones when a later estimator fails.
    """
    contention = csma.contention_model(config)
    link = uplink.uplink_model(config)
    deployment_model = DeploymentModel.from_config(config)

    for r in PT_DISTANCES_M:
        est = montecarlo.estimate_pt(r, contention, reps, seed, workers, records)
        yield _row("pt", "r_m", r, est)

    radius = csma.contention_radius(contention)
    if radius is not None and contention.density_per_m2 > 0:
        d = 2.0 * radius
        est = montecarlo.estimate_q(d, contention, reps, seed, workers, records)
        yield _row("q", "d_m", d, est)

    curve = montecarlo.estimate_sinr_ccdf(
        SINR_DISTANCE_M,
        [db_to_linear(db) for db in SINR_THRESHOLDS_DB],
        sinr.sinr_model(config),
        reps,
        seed,
        workers,
        records,
    )
    for db, est in zip(SINR_THRESHOLDS_DB, curve.estimates, strict=True):
        yield _row("sinr_ccdf", "beta_db", db, est)

    density = config.density_per_km2
    est = montecarlo.estimate_starvation(
        deployment_model, link, reps, seed, workers, records
    )
    yield _row("starvation", "density_per_km2", density, est)
    if density > 0:
        est = montecarlo.estimate_uplink_marginal(
            deployment_model, link, reps, seed, workers, records
        )
        yield _row("uplink_marginal", "density_per_km2", density, est)
        est = montecarlo.estimate_ap_throughput(config, reps, seed, workers, records)
        yield _row("ap_throughput", "density_per_km2", density, est)


def write_estimates_csv(rows: Sequence[EstimateRow], path: Path) -> None:
    _write_csv(
        path,
        ESTIMATE_COLUMNS,
        [
            [
                row.estimator,
                row.parameter,
                _format(row.grid_value),
                _format(row.value),
                _format(row.stderr),
                row.n,
            ]
            for row in rows
        ],
    )


def _oracle_check(
    name: str, analytic: float, estimate: Estimate, tolerance: float
) -> ValidationCheck:
    return ValidationCheck(
        name=name,
        kind=CheckKind.ORACLE,
        analytic=analytic,
        reference=estimate.value,
        stderr=estimate.stderr,
        tolerance=tolerance,
        passed=estimate.within(analytic, tolerance, STDERR_MULTIPLE),
    )


def _anchor_check(
    name: str,
    analytic: float,
    reference: float,
    tolerance: float,
    passes: Callable[[float], bool],
    enforced: bool = True,
) -> ValidationCheck:
    return ValidationCheck(
        name=name,
        kind=CheckKind.ANCHOR,
        analytic=analytic,
        reference=reference,
        tolerance=tolerance,
        passed=passes(analytic),
        enforced=enforced,
    )


def _point_label(spec: SweepSpec, config: NetworkConfig) -> str:
    return ";".join(f"{name}={getattr(config, name):g}" for name in spec.axes)


def oracle_checks(
    config: NetworkConfig,
    reps: int,
    seed: int,
    workers: int | None = None,
    spec: SweepSpec | None = None,
) -> list[ValidationCheck]:
    """Analytic quantities against their Monte Carlo estimates.

    With ``spec`` every grid point of ``spec`` applied to ``config`` is
    checked, and each check name is suffixed with ``@axis=value;...``.
    """
    if spec is None:
        return _point_oracle_checks(config, reps, seed, workers)
    checks: list[ValidationCheck] = []
    for point in expand_grid(spec, config):
        label = _point_label(spec, point)
        logger.info("Validating grid point", extra={"point": label})
        checks.extend(
            check.model_copy(update={"name": f"{check.name}@{label}"})
            for check in _point_oracle_checks(point, reps, seed, workers)
        )
    return checks


def _point_oracle_checks(
    config: NetworkConfig, reps: int, seed: int, workers: int | None
) -> list[ValidationCheck]:
    contention = csma.contention_model(config)
    link = uplink.uplink_model(config)
    deployment_model = DeploymentModel.from_config(config)
    model = sinr.sinr_model(config)
    checks: list[ValidationCheck] = []

    for r in PT_DISTANCES_M:
        checks.append(
            _oracle_check(
                f"pt_r{r:g}m",
                csma.transmission_probability(r, contention),
                montecarlo.estimate_pt(r, contention, reps, seed, workers),
                PT_TOLERANCE,
            )
        )

    radius = csma.contention_radius(contention)
    if radius is not None and contention.density_per_m2 > 0:
        d = 2.0 * radius
        checks.append(
            _oracle_check(
                "q_2x_contention_radius",
                csma.concurrent_transmission_probability(d, contention),
                montecarlo.estimate_q(d, contention, reps, seed, workers),
                Q_TOLERANCE,
            )
        )

    betas = [db_to_linear(db) for db in SINR_THRESHOLDS_DB]
    analytic_ccdf = sinr.sinr_ccdf(betas, SINR_DISTANCE_M, model)
    simulated = montecarlo.estimate_sinr_ccdf(
        SINR_DISTANCE_M, betas, model, reps, seed, workers
    )
    for db, value, est in zip(
        SINR_THRESHOLDS_DB, analytic_ccdf, simulated.estimates, strict=True
    ):
        checks.append(
            _oracle_check(f"sinr_ccdf_{db:g}db", float(value), est, SINR_TOLERANCE)
        )

    checks.append(
        _oracle_check(
            "starvation",
            uplink.starvation_probability(deployment_model, link),
            montecarlo.estimate_starvation(deployment_model, link, reps, seed, workers),
            STARVATION_TOLERANCE,
        )
    )
    if config.density_per_km2 > 0:
        checks.append(
            _oracle_check(
                "uplink_marginal",
                deployment.uplink_marginal(deployment_model, link),
                montecarlo.estimate_uplink_marginal(
                    deployment_model, link, reps, seed, workers
                ),
                MARGINAL_TOLERANCE,
            )
        )
    return checks


def anchor_checks() -> list[ValidationCheck]:
    """Published operating points evaluated on the default network."""
    checks: list[ValidationCheck] = []

    coverage_config = NetworkConfig(h_ap_m=30.0, p_client_w=0.1)
    coverage = uplink.coverage_range(uplink.uplink_model(coverage_config)) or 0.0
    checks.append(
        _anchor_check(
            "coverage_range_30m",
            coverage,
            COVERAGE_ANCHOR_M,
            COVERAGE_ANCHOR_TOLERANCE,
            lambda v: abs(v - COVERAGE_ANCHOR_M)
            <= COVERAGE_ANCHOR_TOLERANCE * COVERAGE_ANCHOR_M,
        )
    )

    starving = NetworkConfig(h_ap_m=30.0, density_per_km2=1.0)
    checks.append(
        _anchor_check(
            "starvation_1perkm2_30m",
            uplink.starvation_probability(
                DeploymentModel.from_config(starving), uplink.uplink_model(starving)
            ),
            0.5,
            0.1,
            lambda v: abs(v - 0.5) <= 0.1,
        )
    )

    def mean_pt(config: NetworkConfig) -> float:
        return csma.mean_transmission_probability(
            DeploymentModel.from_config(config),
            csma.contention_model(config),
            uplink.uplink_model(config),
        )

    low = NetworkConfig(p_ap_w=4.0, h_ap_m=1.5, density_per_km2=1.0)
    checks.append(
        _anchor_check(
            "mean_pt_4w_1.5m", mean_pt(low), 0.85, 0.05, lambda v: abs(v - 0.85) <= 0.05
        )
    )
    high = NetworkConfig(p_ap_w=4.0, h_ap_m=15.0, density_per_km2=1.0)
    checks.append(
        _anchor_check("mean_pt_4w_15m", mean_pt(high), 0.1, 0.0, lambda v: v < 0.1)
    )

    def relative(target: float) -> Callable[[float], bool]:
        return lambda v: abs(v - target) <= THROUGHPUT_ANCHOR_TOLERANCE * target

    throughput_anchors = [
        ("throughput_mbps_sparse", {"density_per_km2": 0.1}, "throughput_mbps", 40.0),
        ("throughput_mbps_medium", {"density_per_km2": 1.0}, "throughput_mbps", 12.0),
        (
            "ase_mbps_km2_dense_9m",
            {"density_per_km2": 10.0, "h_ap_m": 9.0},
            "ase_mbps_km2",
            240.0,
        ),
        (
            "ase_bps_hz_km2_dense_6m",
            {"density_per_km2": 10.0, "h_ap_m": 6.0},
            "ase_bps_hz_km2",
            12.0,
        ),
    ]
    for name, changes, metric, target in throughput_anchors:
        config = NetworkConfig(**{"p_ap_w": 0.1, "h_ap_m": 30.0, **changes})
        value = float(getattr(sinr.analyze(config), metric))
        checks.append(
            _anchor_check(
                name,
                value,
                target,
                THROUGHPUT_ANCHOR_TOLERANCE,
                relative(target),
                enforced=False,
            )
        )
    return checks


def validate_config(
    config: NetworkConfig,
    profile: ToleranceProfile,
    reps: int,
    seed: int,
    workers: int | None = None,
    spec: SweepSpec | None = None,
) -> ValidationReport:
    """Side-by-side analytic and simulated values with pass/fail per check.

    ``spec`` runs the oracle checks over a parameter grid instead of the
    single config. ``ToleranceProfile.PAPER`` adds the published anchors;
    throughput anchors that miss are reported as deviations and do not fail
    the report.
    """
    checks = oracle_checks(config, reps, seed, workers, spec)
    if profile is ToleranceProfile.PAPER:
        checks.extend(anchor_checks())
    report = ValidationReport(
        fingerprint=fingerprint(config),
        profile=profile,
        seed=seed,
        reps=reps,
        checks=checks,
    )
    logger.info(
        "Validation finished",
        extra={
            "passed": report.passed,
            "checks": len(checks),
            "deviations": [c.name for c in report.deviations],
        },
    )
    return report


def write_validation_csv(report: ValidationReport, path: Path) -> None:
    _write_csv(
        path,
        VALIDATION_COLUMNS,
        [
            [
                check.name,
                check.kind.value,
                _format(check.analytic),
                _format(check.reference),
                _format(check.stderr),
                _format(check.tolerance),
                str(check.passed).lower(),
                str(check.enforced).lower(),
            ]
            for check in report.checks
        ],
    )


def write_summary_csv(values: dict[str, Any], path: Path) -> None:
    """Two-column ``metric,value`` CSV for single-config results."""
    _write_csv(
        path,
        ["metric", "value"],
        [
            [key, _format(value) if isinstance(value, float) else value]
            for key, value in values.items()
        ],
    )


def figure_curves(
    config: NetworkConfig,
    distances_m: Sequence[float] = CURVE_DISTANCES_M,
    thresholds_db: Sequence[float] = CURVE_THRESHOLDS_DB,
) -> list[MetricCurve]:
    """Per-link figure data at one config.

    Link throughput with and without the uplink limit, p_U(r), p_T(r) and
    the SINR CCDF at the reference distance.
    """
    link = uplink.uplink_model(config)
    model = sinr.sinr_model(config)
    curves = [
        sinr.link_throughput_curve(distances_m, config, include_uplink=True),
        sinr.link_throughput_curve(distances_m, config, include_uplink=False),
        uplink.uplink_viability_curve(distances_m, link, config),
        csma.transmission_probability_curve(distances_m, model.contention, config),
        sinr.sinr_ccdf_curve(
            [db_to_linear(db) for db in thresholds_db], SINR_DISTANCE_M, model, config
        ),
    ]
    logger.info(
        "Figure curves computed",
        extra={"curves": len(curves), "fingerprint": fingerprint(config)},
    )
    return curves


def write_curves_csv(curves: Sequence[MetricCurve], path: Path) -> None:
    """Long-format CSV, one row per curve sample; meta is ``key=value;...``."""
    _write_csv(
        path,
        CURVE_COLUMNS,
        [
            [
                curve.name,
                curve.grid_name,
                _format(x),
                _format(y),
                ";".join(f"{k}={v}" for k, v in sorted(curve.meta.items())),
            ]
            for curve in curves
            for x, y in zip(curve.grid, curve.values, strict=True)
        ],
    )
