"""Propagation-related Pydantic models."""

from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator


class PathlossVariant(str, Enum):
    """Supported pathloss laws."""

    DUAL_SLOPE = "dual_slope"
    SUBURBAN_HATA = "suburban_hata"


class LinkGeometry(BaseModel):
    """Antenna heights and wavelength of one link class.

    The dual-slope law depends only on the sum and absolute difference of the
    heights, so heights are stored with ``h_t_m >= h_r_m``.
    """

    model_config = ConfigDict(frozen=True)

    wavelength_m: float = Field(gt=0)
    h_t_m: float = Field(gt=0)
    h_r_m: float = Field(gt=0)

    @model_validator(mode="before")
    @classmethod
    def _order_heights(cls, data: Any) -> Any:
        if isinstance(data, dict):
            h_t, h_r = data.get("h_t_m"), data.get("h_r_m")
            if h_t is not None and h_r is not None and h_t < h_r:
                data = {**data, "h_t_m": h_r, "h_r_m": h_t}
        return data

    @property
    def height_sum(self) -> float:
        return self.h_t_m + self.h_r_m

    @property
    def height_difference(self) -> float:
        return self.h_t_m - self.h_r_m


class PathlossModel(BaseModel):
    """A pathloss law together with its validity floor."""

    model_config = ConfigDict(frozen=True)

    variant: PathlossVariant = PathlossVariant.DUAL_SLOPE
    geometry: LinkGeometry | None = None
    d_min_m: float = Field(default=1.0, gt=0)
    hata_intercept_db: float = 124.3
    hata_slope_db: float = Field(default=35.23, gt=0)

    @model_validator(mode="after")
    def _geometry_for_dual_slope(self) -> "PathlossModel":
        if self.variant is PathlossVariant.DUAL_SLOPE and self.geometry is None:
            raise ValueError("dual-slope pathloss requires a link geometry")
        return self


class FadingModel(BaseModel):
    """Exponential (Rayleigh power) fading with rate ``mu``."""

    model_config = ConfigDict(frozen=True)

    mu: float = Field(default=1.0, gt=0)

    @property
    def mean(self) -> float:
        return 1.0 / self.mu


class PathlossEvaluation(BaseModel):
    """Pathloss at one distance, flagged when the distance was clamped."""

    distance_m: float
    loss_db: float
    clamped: bool = False
