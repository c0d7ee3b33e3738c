"""Rural broadband planning: demand, channel budget and operating point."""

import csv
import logging
import math
from collections.abc import Sequence
from pathlib import Path

from pydantic import ValidationError as PydanticValidationError

from src.core.exceptions import ModelDomainError, ValidationError
from src.core.fingerprint import fingerprint
from src.models.analysis import SinrModel, UplinkModel
from src.models.network import DeploymentModel, NetworkConfig
from src.models.planning import (
    Household,
    HouseholdSurvey,
    OperatingPoint,
    PlanInput,
    PlanResult,
    Priority,
)
from src.models.sweep import RowStatus, SweepRow
from src.services.sinr import service as sinr
from src.services.uplink import service as uplink

logger = logging.getLogger(__name__)

EARTH_RADIUS_M = 6_371_008.8
HOUSEHOLD_COLUMNS = ("id", "lat", "lon")


def required_ase(demand: PlanInput) -> float:
    """Demand density in Mbps/km²."""
    if demand.area_km2 <= 0:
        raise ModelDomainError(
            "Service area must be positive", details={"area_km2": demand.area_km2}
        )
    return demand.households * demand.per_household_rate_mbps / demand.area_km2


def channel_count(required_mbps_km2: float, per_channel_mbps_km2: float) -> int:
    """ceil(required / per channel); never rounds demand down."""
    if required_mbps_km2 <= 0:
        return 0
    if per_channel_mbps_km2 <= 0:
        raise ModelDomainError(
            "Per-channel ASE must be positive",
            details={"per_channel_mbps_km2": per_channel_mbps_km2},
        )
    return math.ceil(required_mbps_km2 / per_channel_mbps_km2 * (1.0 - 1e-12))


def _result(
    required_mbps_km2: float, per_channel_mbps_km2: float, available: int
) -> PlanResult:
    needed = channel_count(required_mbps_km2, per_channel_mbps_km2)
    return PlanResult(
        required_ase_mbps_km2=required_mbps_km2,
        per_channel_ase_mbps_km2=per_channel_mbps_km2,
        channels_needed=needed,
        available_channels=available,
        feasible=needed <= available,
        shortfall=max(needed - available, 0),
    )


def channels_needed(
    required_mbps_km2: float,
    deployment: DeploymentModel,
    sinr_model: SinrModel,
    uplink_model: UplinkModel | None,
    channel_bandwidth_mhz: float,
    available_channels: int,
) -> PlanResult:
    """Channel budget when every channel carries the analytic ASE."""
    ase = sinr.area_spectral_efficiency(deployment, sinr_model, uplink_model)
    return _result(required_mbps_km2, ase * channel_bandwidth_mhz, available_channels)


def plan(
    demand: PlanInput,
    config: NetworkConfig,
    per_channel_ase_mbps_km2: float | None = None,
) -> PlanResult:
    """Size the channel budget for ``demand`` on network ``config``.

    A given per-channel ASE skips the analytic model.
    """
    required = required_ase(demand)
    if per_channel_ase_mbps_km2 is not None:
        result = _result(required, per_channel_ase_mbps_km2, demand.available_channels)
    else:
        result = channels_needed(
            required,
            DeploymentModel.from_config(config),
            sinr.sinr_model(config),
            uplink.uplink_model(config),
            demand.channel_bandwidth_mhz,
            demand.available_channels,
        )
    logger.info(
        "Plan computed",
        extra={
            "required_mbps_km2": result.required_ase_mbps_km2,
            "channels_needed": result.channels_needed,
            "feasible": result.feasible,
        },
    )
    return result


def bounding_box_area_km2(households: Sequence[Household]) -> float:
    """Equirectangular area of the households' lat/lon bounding box."""
    lats = [h.lat for h in households]
    lons = [h.lon for h in households]
    mean_lat = math.radians((max(lats) + min(lats)) / 2.0)
    height = math.radians(max(lats) - min(lats)) * EARTH_RADIUS_M
    width = math.radians(max(lons) - min(lons)) * EARTH_RADIUS_M * math.cos(mean_lat)
    return height * width / 1e6


def load_households(path: Path) -> HouseholdSurvey:
    """Read an ``id,lat,lon`` CSV; duplicate coordinates are kept."""
    households: list[Household] = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = tuple(name.strip() for name in reader.fieldnames or ())
        if header[: len(HOUSEHOLD_COLUMNS)] != HOUSEHOLD_COLUMNS:
            raise ValidationError(
                "Household CSV must start with columns id,lat,lon",
                details={"path": str(path), "line": 1, "header": list(header)},
            )
        for row in reader:
            try:
                households.append(
                    Household(id=row["id"], lat=row["lat"], lon=row["lon"])
                )
            except (PydanticValidationError, TypeError) as exc:
                raise ValidationError(
                    f"Malformed household row on line {reader.line_num}",
                    details={"path": str(path), "line": reader.line_num},
                ) from exc

    if not households:
        raise ModelDomainError(
            "Household file has no rows", details={"path": str(path)}
        )
    survey = HouseholdSurvey(
        households=households, area_km2=bounding_box_area_km2(households)
    )
    logger.info(
        "Households loaded",
        extra={"path": str(path), "count": survey.count, "area_km2": survey.area_km2},
    )
    return survey


def recommend_operating_point(
    rows: Sequence[SweepRow], density_per_km2: float, priority: Priority
) -> OperatingPoint:
    """Best swept (P_AP, h_AP) at one density.

    Coverage priority maximizes the coverage fraction and breaks ties on
    throughput; throughput priority maximizes per-AP throughput.
    """
    candidates = [
        row
        for row in rows
        if row.status is RowStatus.OK
        and math.isclose(row.density_per_km2, density_per_km2)
    ]
    if not candidates:
        raise ModelDomainError(
            "No successful sweep rows at this density",
            details={"density_per_km2": density_per_km2},
        )

    def score(row: SweepRow) -> tuple[float, ...]:
        coverage = row.coverage_fraction or 0.0
        throughput = row.throughput_mbps or 0.0
        if priority is Priority.COVERAGE:
            return (round(coverage, 6), throughput)
        return (throughput, coverage)

    best = max(candidates, key=score)
    return OperatingPoint(
        priority=priority,
        density_per_km2=best.density_per_km2,
        p_ap_w=best.p_ap_w,
        h_ap_m=best.h_ap_m,
        coverage_fraction=best.coverage_fraction or 0.0,
        throughput_mbps=best.throughput_mbps or 0.0,
        ase_mbps_km2=best.ase_mbps_km2 or 0.0,
        fingerprint=best.fingerprint,
    )


def plan_fingerprint(demand: PlanInput, config: NetworkConfig) -> str:
    return fingerprint(
        {
            "demand": demand.model_dump(mode="json", exclude={"household_points"}),
            "network": config.model_dump(mode="json"),
        }
    )
