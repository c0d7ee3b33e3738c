"""Network planning inputs and results."""

from enum import Enum

from pydantic import BaseModel, Field, model_validator

from src.models.network import NetworkConfig

# Channels available around the rural Kansas planning example.
DEFAULT_AVAILABLE_CHANNELS = 37


class Household(BaseModel):
    """One dwelling from the household survey (WGS-84 decimal degrees)."""

    id: str
    lat: float = Field(ge=-90, le=90)
    lon: float = Field(ge=-180, le=180)


class HouseholdSurvey(BaseModel):
    """Households read from CSV plus their bounding-box area."""

    households: list[Household]
    area_km2: float = Field(ge=0)

    @property
    def count(self) -> int:
        return len(self.households)


class PlanInput(BaseModel):
    """Demand side of a plan."""

    households: int = Field(ge=0)
    area_km2: float = Field(ge=0)
    per_household_rate_mbps: float = Field(default=10.0, ge=0)
    available_channels: int = Field(default=DEFAULT_AVAILABLE_CHANNELS, ge=0)
    channel_bandwidth_mhz: float = Field(default=6.0, gt=0)
    household_points: list[Household] | None = None

    @model_validator(mode="after")
    def _count_matches_points(self) -> "PlanInput":
        if (
            self.household_points is not None
            and len(self.household_points) != self.households
        ):
            raise ValueError("households must equal the number of household points")
        return self

    @classmethod
    def from_survey(
        cls,
        survey: HouseholdSurvey,
        area_km2: float | None = None,
        **kwargs: float | int,
    ) -> "PlanInput":
        """An explicit area overrides the survey's bounding box."""
        return cls(
            households=survey.count,
            area_km2=survey.area_km2 if area_km2 is None else area_km2,
            household_points=survey.households,
            **kwargs,
        )


class PlanResult(BaseModel):
    required_ase_mbps_km2: float
    per_channel_ase_mbps_km2: float
    channels_needed: int = Field(ge=0)
    available_channels: int
    feasible: bool
    shortfall: int = Field(ge=0)


class PlanRequest(BaseModel):
    """HTTP body for a plan: demand plus the network it runs on."""

    demand: PlanInput
    network: NetworkConfig = Field(default_factory=NetworkConfig)
    per_channel_ase_mbps_km2: float | None = Field(default=None, gt=0)


class Priority(str, Enum):
    COVERAGE = "coverage"
    THROUGHPUT = "throughput"


class OperatingPoint(BaseModel):
    """Suggested AP parameters for one density."""

    priority: Priority
    density_per_km2: float
    p_ap_w: float
    h_ap_m: float
    coverage_fraction: float
    throughput_mbps: float
    ase_mbps_km2: float
    fingerprint: str
