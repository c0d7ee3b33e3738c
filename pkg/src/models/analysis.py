"""Models consumed and produced by the analytic services."""

from pydantic import BaseModel, ConfigDict, Field

from src.models.network import NetworkConfig
from src.models.propagation import PathlossModel


class UplinkModel(BaseModel):
    """Client-to-AP link used for association and ACKs.

    ``pathloss`` always describes the AP–client geometry.
    """

    model_config = ConfigDict(frozen=True)

    p_client_w: float = Field(gt=0)
    gamma_w: float = Field(gt=0)
    pathloss: PathlossModel
    mu: float = Field(default=1.0, gt=0)


class ContentionModel(BaseModel):
    """Mark-based CSMA/CA contention among APs."""

    model_config = ConfigDict(frozen=True)

    p_ap_w: float = Field(gt=0)
    sigma_w: float = Field(gt=0)
    pathloss_ap_ap: PathlossModel
    mu: float = Field(default=1.0, gt=0)
    density_per_m2: float = Field(ge=0)


class SinrModel(BaseModel):
    """Downlink SINR at a served client."""

    model_config = ConfigDict(frozen=True)

    contention: ContentionModel
    pathloss_ap_client: PathlossModel
    noise_power_w: float = Field(ge=0)
    p_ap_w: float = Field(gt=0)
    mu: float = Field(default=1.0, gt=0)

    @property
    def density_per_m2(self) -> float:
        return self.contention.density_per_m2


class AnalysisReport(BaseModel):
    """All single-configuration metrics."""

    fingerprint: str
    config: NetworkConfig
    mean_transmission_probability: float
    isolated_transmission_probability: float
    coverage_range_m: float | None
    downlink_range_m: float | None
    contention_radius_m: float | None
    uplink_marginal: float
    starvation_probability: float
    coverage_fraction: float
    throughput_bps_hz: float
    throughput_mbps: float
    ase_bps_hz_km2: float
    ase_mbps_km2: float
