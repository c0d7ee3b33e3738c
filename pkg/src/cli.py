"""Command-line entry point: analysis, figures, sweeps, simulation and planning."""

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any, NoReturn

from src.core.config import get_settings
from src.core.exceptions import (
    ModelDomainError,
    NumericalError,
    SuperWifiException,
    ValidationError,
)
from src.models.network import NetworkConfig
from src.models.planning import DEFAULT_AVAILABLE_CHANNELS, PlanInput, Priority
from src.models.simulation import EstimateRow, ReplicationRecord
from src.models.sweep import (
    DEFAULT_AXES,
    RowStatus,
    SweepRow,
    SweepSpec,
    ToleranceProfile,
)
from src.services.montecarlo import service as montecarlo
from src.services.planner import service as planner
from src.services.sinr import service as sinr
from src.services.sweep import service as sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_VALIDATION = 3


class UsageError(Exception):
    """Bad command-line usage; reported with exit code 1."""


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise UsageError(message)


def _axis(text: str) -> tuple[str, list[float]]:
    name, sep, values = text.partition("=")
    if not sep or not values:
        raise argparse.ArgumentTypeError(f"expected NAME=V1,V2,... got {text!r}")
    try:
        return name.strip(), [float(v) for v in values.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"non-numeric value in {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat TOML network config")
    common.add_argument("--out", type=Path, help="CSV output path")
    common.add_argument(
        "--override-regulatory",
        action="store_true",
        help="allow parameters above the FCC TVWS caps",
    )
    common.add_argument(
        "--workers", type=int, default=None, help="processes for parallel work"
    )

    mc = argparse.ArgumentParser(add_help=False)
    mc.add_argument("--seed", type=int, default=settings.default_seed)
    mc.add_argument("--reps", type=int, default=settings.default_reps)

    parser = _ArgumentParser(
        prog="superwifi",
        description="CSMA/CA Super Wi-Fi performance model for TV white space",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(
        dest="command", required=True, parser_class=_ArgumentParser
    )

    sub.add_parser("analyze", parents=[common], help="single-config metrics")
    sub.add_parser(
        "figures", parents=[common], help="per-link curves: throughput, p_U, p_T, CCDF"
    )

    sweep_parser = sub.add_parser("sweep", parents=[common], help="parameter grid CSV")
    sweep_parser.add_argument(
        "--axis",
        type=_axis,
        action="append",
        default=None,
        metavar="NAME=V1,V2,...",
        help="sweep axis; repeat for more axes (default: density, power, height)",
    )
    sweep_parser.add_argument(
        "--recommend",
        type=Priority,
        choices=[p.value for p in Priority],
        default=None,
        help="print the best operating point per density",
    )

    simulate = sub.add_parser(
        "simulate", parents=[common, mc], help="Monte Carlo estimates"
    )
    simulate.add_argument(
        "--records", type=Path, default=None, help="raw per-replication CSV"
    )

    validate = sub.add_parser(
        "validate", parents=[common, mc], help="analytic versus Monte Carlo report"
    )
    validate.add_argument(
        "--tolerance-profile",
        type=ToleranceProfile,
        choices=[p.value for p in ToleranceProfile],
        default=ToleranceProfile.STRICT.value,
    )
    validate.add_argument(
        "--axis",
        type=_axis,
        action="append",
        default=None,
        metavar="NAME=V1,V2,...",
        help="validate every point of this grid; repeat for more axes",
    )

    plan = sub.add_parser("plan", parents=[common], help="channel budget for a town")
    plan.add_argument("--households", type=Path, help="id,lat,lon CSV")
    plan.add_argument("--count", type=int, help="household count without a CSV")
    plan.add_argument("--area-km2", type=float, help="service area; overrides the CSV")
    plan.add_argument("--rate", type=float, default=10.0, help="Mbps per household")
    plan.add_argument(
        "--per-channel-ase",
        type=float,
        default=None,
        help="Mbps/km² per channel; default is the analytic ASE",
    )
    plan.add_argument(
        "--available-channels", type=int, default=DEFAULT_AVAILABLE_CHANNELS
    )
    plan.add_argument("--channel-bandwidth-mhz", type=float, default=6.0)
    return parser


def _print_summary(values: dict[str, Any]) -> None:
    width = max(len(key) for key in values)
    for key, value in values.items():
        text = f"{value:.6g}" if isinstance(value, float) else str(value)
        print(f"{key:<{width}}  {text}")


def _load(args: argparse.Namespace) -> NetworkConfig:
    config, _ = sweep.load_config(args.config, args.override_regulatory)
    return config


def cmd_analyze(args: argparse.Namespace) -> int:
    report = sinr.analyze(_load(args))
    values = report.model_dump(mode="json", exclude={"config"})
    _print_summary(values)
    if args.out:
        sweep.write_summary_csv(values, args.out)
    return EXIT_OK


def _recommendations(rows: Sequence[SweepRow], priority: Priority) -> None:
    for density in sorted({row.density_per_km2 for row in rows}):
        try:
            point = planner.recommend_operating_point(rows, density, priority)
        except ModelDomainError as exc:
            print(f"density {density:g}/km²: {exc.message}")
            continue
        print(
            f"density {density:g}/km²: "
            f"P_AP={point.p_ap_w:g} W h_AP={point.h_ap_m:g} m "
            f"coverage={point.coverage_fraction:.3f} "
            f"throughput={point.throughput_mbps:.2f} Mbps"
        )


def _spec(axes: dict[str, list[float]]) -> SweepSpec:
    try:
        return SweepSpec(axes=axes)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_figures(args: argparse.Namespace) -> int:
    curves = sweep.figure_curves(_load(args))
    for curve in curves:
        print(f"{curve.name:<26} {curve.grid_name:<5} {len(curve.grid)} points")
    if args.out:
        sweep.write_curves_csv(curves, args.out)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    base = _load(args)
    spec = _spec(dict(args.axis) if args.axis else dict(DEFAULT_AXES))
    rows = sweep.run_sweep(spec, base, args.workers)
    if args.out:
        sweep.write_sweep_csv(rows, args.out)
    else:
        print(f"{len(rows)} grid points evaluated; pass --out to write the CSV")
    if args.recommend is not None:
        _recommendations(rows, args.recommend)
    failed = [r for r in rows if r.status is RowStatus.NUMERICAL_ERROR]
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load(args)
    rows: list[EstimateRow] = []
    records: list[ReplicationRecord] | None = [] if args.records else None
    try:
        for row in sweep.simulate_config(
            config, args.reps, args.seed, args.workers, records
        ):
            rows.append(row)
            print(
                f"{row.estimator}[{row.parameter}={row.grid_value:g}] "
                f"{row.value:.6g} ± {row.stderr:.2g}"
            )
    finally:
        if args.out:
            sweep.write_estimates_csv(rows, args.out)
        if args.records and records is not None:
            montecarlo.write_replications_csv(records, args.records)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    config = _load(args)
    spec = _spec(dict(args.axis)) if args.axis else None
    report = sweep.validate_config(
        config, args.tolerance_profile, args.reps, args.seed, args.workers, spec=spec
    )
    for check in report.checks:
        verdict = "PASS" if check.passed else ("FAIL" if check.enforced else "DEVIATES")
        print(
            f"{verdict:<8} {check.name:<28} analytic={check.analytic:.6g} "
            f"reference={check.reference:.6g} tol={check.tolerance:g}"
        )
    if args.out:
        sweep.write_validation_csv(report, args.out)
    return EXIT_OK if report.passed else EXIT_VALIDATION


def cmd_plan(args: argparse.Namespace) -> int:
    config = _load(args)
    options = {
        "per_household_rate_mbps": args.rate,
        "available_channels": args.available_channels,
        "channel_bandwidth_mhz": args.channel_bandwidth_mhz,
    }
    if args.households is not None:
        survey = planner.load_households(args.households)
        demand = PlanInput.from_survey(survey, args.area_km2, **options)
    elif args.count is not None and args.area_km2 is not None:
        demand = PlanInput(households=args.count, area_km2=args.area_km2, **options)
    else:
        raise UsageError("plan needs --households or both --count and --area-km2")

    result = planner.plan(demand, config, args.per_channel_ase)
    values: dict[str, Any] = {
        "fingerprint": planner.plan_fingerprint(demand, config),
        "households": demand.households,
        "area_km2": demand.area_km2,
        **result.model_dump(mode="json"),
    }
    _print_summary(values)
    if args.out:
        sweep.write_summary_csv(values, args.out)
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "figures": cmd_figures,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "plan": cmd_plan,
}


def run(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv``, run one subcommand and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        logger.error(
            "Numerical failure", extra={"code": exc.code, "details": exc.details}
        )
        print(f"numerical error: {exc.message}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValidationError, ModelDomainError) as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return EXIT_USAGE
    except SuperWifiException as exc:
        logger.exception("Unhandled model error")
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    logging.basicConfig(
        level=get_settings().log_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    sys.exit(run())


if __name__ == "__main__":
    main()
