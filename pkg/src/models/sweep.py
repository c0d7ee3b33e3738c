"""Parameter sweeps and analytic-versus-simulation validation reports."""

from enum import Enum

from pydantic import BaseModel, Field, field_validator

from src.models.network import NetworkConfig

SWEEPABLE = frozenset(
    name
    for name, field in NetworkConfig.model_fields.items()
    if field.annotation is float
)

# Axes behind the transmission-probability, coverage and ASE figures.
DEFAULT_AXES: dict[str, list[float]] = {
    "density_per_km2": [0.1, 1.0, 10.0],
    "p_ap_w": [0.1, 0.5, 1.0, 2.0, 4.0],
    "h_ap_m": [1.5, 3.0, 6.0, 9.0, 12.0, 15.0, 20.0, 25.0, 30.0],
}


class SweepSpec(BaseModel):
    """Cartesian grid over NetworkConfig fields, expanded in axis order."""

    axes: dict[str, list[float]] = Field(default_factory=lambda: dict(DEFAULT_AXES))

    @field_validator("axes")
    @classmethod
    def _known_axes(cls, axes: dict[str, list[float]]) -> dict[str, list[float]]:
        unknown = sorted(set(axes) - SWEEPABLE)
        if unknown:
            raise ValueError(f"cannot sweep over {', '.join(unknown)}")
        empty = [name for name, values in axes.items() if not values]
        if empty:
            raise ValueError(f"axis {empty[0]} has no values")
        return axes


class RowStatus(str, Enum):
    OK = "ok"
    NUMERICAL_ERROR = "numerical_error"
    DOMAIN_ERROR = "domain_error"


class SweepRow(BaseModel):
    """One grid point; metrics are None when the point failed."""

    fingerprint: str
    density_per_km2: float
    p_ap_w: float
    h_ap_m: float
    status: RowStatus = RowStatus.OK
    mean_transmission_probability: float | None = None
    coverage_range_m: float | None = None
    starvation_probability: float | None = None
    coverage_fraction: float | None = None
    throughput_bps_hz: float | None = None
    throughput_mbps: float | None = None
    ase_bps_hz_km2: float | None = None
    ase_mbps_km2: float | None = None
    message: str = ""


class ToleranceProfile(str, Enum):
    STRICT = "strict"
    PAPER = "paper"


class CheckKind(str, Enum):
    ORACLE = "oracle"
    ANCHOR = "anchor"


class ValidationCheck(BaseModel):
    """Analytic value against a Monte Carlo estimate or a published figure.

    Anchor checks that are not ``enforced`` record deviations without
    failing the report.
    """

    name: str
    kind: CheckKind
    analytic: float
    reference: float
    stderr: float = Field(default=0.0, ge=0)
    tolerance: float = Field(ge=0)
    passed: bool
    enforced: bool = True


class ValidationReport(BaseModel):
    fingerprint: str
    profile: ToleranceProfile
    seed: int
    reps: int
    checks: list[ValidationCheck]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks if check.enforced)

    @property
    def deviations(self) -> list[ValidationCheck]:
        return [c for c in self.checks if not c.passed and not c.enforced]
