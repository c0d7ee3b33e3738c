"""Network configuration and deployment models."""

import math
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.core.exceptions import RegulatoryError
from src.models.propagation import FadingModel, PathlossVariant

SPEED_OF_LIGHT_M_S = 2.998e8

# FCC TVWS caps for fixed (AP) and portable (client) devices.
MAX_AP_POWER_W = 4.0
MAX_CLIENT_POWER_W = 0.1
MAX_AP_HEIGHT_M = 30.0
MAX_CLIENT_HEIGHT_M = 1.5


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


class NetworkConfig(BaseModel):
    """Regulatory and radio parameters of one network configuration.

    Keys are flat and carry their unit so that config files stay readable.
    Defaults reproduce the deployment set-up of the reference study.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    frequency_mhz: float = Field(default=600.0, gt=0)
    bandwidth_mhz: float = Field(default=6.0, gt=0)
    p_ap_w: float = Field(default=1.0, gt=0)
    p_client_w: float = Field(default=0.1, gt=0)
    h_ap_m: float = Field(default=10.0, gt=0)
    h_client_m: float = Field(default=1.0, gt=0)
    cca_threshold_dbm: float = -82.0
    uplink_threshold_dbm: float = -82.0
    noise_density_dbm_hz: float = -173.97
    fading_mu: float = Field(default=1.0, gt=0)
    density_per_km2: float = Field(default=1.0, ge=0)
    d_min_m: float = Field(default=1.0, gt=0)
    pathloss_model: PathlossVariant = PathlossVariant.DUAL_SLOPE
    hata_intercept_db: float = 124.3
    hata_slope_db: float = Field(default=35.23, gt=0)
    override_regulatory: bool = False

    @model_validator(mode="after")
    def _regulatory_caps(self) -> "NetworkConfig":
        if self.override_regulatory:
            return self
        caps = (
            ("p_ap_w", self.p_ap_w, MAX_AP_POWER_W, "W"),
            ("p_client_w", self.p_client_w, MAX_CLIENT_POWER_W, "W"),
            ("h_ap_m", self.h_ap_m, MAX_AP_HEIGHT_M, "m"),
            ("h_client_m", self.h_client_m, MAX_CLIENT_HEIGHT_M, "m"),
        )
        for name, value, cap, unit in caps:
            if value > cap:
                raise RegulatoryError(name, value, cap, unit)
        return self

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT_M_S / (self.frequency_mhz * 1e6)

    @property
    def bandwidth_hz(self) -> float:
        return self.bandwidth_mhz * 1e6

    @property
    def sigma_w(self) -> float:
        """CCA threshold in watts."""
        return dbm_to_watts(self.cca_threshold_dbm)

    @property
    def gamma_w(self) -> float:
        """Uplink viability threshold in watts."""
        return dbm_to_watts(self.uplink_threshold_dbm)

    @property
    def noise_power_w(self) -> float:
        """Total noise power over the channel."""
        return dbm_to_watts(
            self.noise_density_dbm_hz + 10.0 * math.log10(self.bandwidth_hz)
        )

    @property
    def fading(self) -> FadingModel:
        return FadingModel(mu=self.fading_mu)

    def replace(self, **changes: Any) -> "NetworkConfig":
        """Return a validated copy with some keys changed."""
        return NetworkConfig.model_validate({**self.model_dump(), **changes})


class DeploymentModel(BaseModel):
    """Homogeneous PPP of APs with intensity given per km²."""

    model_config = ConfigDict(frozen=True)

    density_per_km2: float = Field(ge=0)
    config: NetworkConfig = Field(default_factory=NetworkConfig)

    @classmethod
    def from_config(cls, config: NetworkConfig) -> "DeploymentModel":
        return cls(density_per_km2=config.density_per_km2, config=config)

    @property
    def density_per_m2(self) -> float:
        return self.density_per_km2 * 1e-6
