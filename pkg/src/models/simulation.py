"""Realized AP fields and raw replication records."""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class PointField(BaseModel):
    """One realization of the marked AP process on a square window.

    ``positions`` is an (n, 2) array in meters centred on the window; marks
    are the uniform back-off marks in [0, 1].
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    window_half_width_m: float = Field(gt=0)
    guard_m: float = Field(default=0.0, ge=0)
    positions: np.ndarray
    marks: np.ndarray

    @field_validator("positions")
    @classmethod
    def _check_positions(cls, value: np.ndarray) -> np.ndarray:
        if value.ndim != 2 or value.shape[1] != 2:
            raise ValueError("positions must be an (n, 2) array")
        return value

    @field_validator("marks")
    @classmethod
    def _check_marks(cls, value: np.ndarray) -> np.ndarray:
        if value.ndim != 1:
            raise ValueError("marks must be a 1-D array")
        if value.size and (value.min() < 0.0 or value.max() > 1.0):
            raise ValueError("marks must lie in [0, 1]")
        return value

    @model_validator(mode="after")
    def _check_lengths(self) -> "PointField":
        if self.positions.shape[0] != self.marks.shape[0]:
            raise ValueError("every point needs exactly one mark")
        if self.guard_m >= self.window_half_width_m:
            raise ValueError("guard must be narrower than the window")
        return self

    @property
    def count(self) -> int:
        return int(self.marks.shape[0])

    @property
    def inner_half_width_m(self) -> float:
        """Half-width of the measured region, inside the guard ring."""
        return self.window_half_width_m - self.guard_m

    def inner_mask(self) -> np.ndarray:
        return np.all(np.abs(self.positions) <= self.inner_half_width_m, axis=1)


class ReplicationRecord(BaseModel):
    """One replication's outcome, as dumped to the raw CSV."""

    estimator: str
    rep: int = Field(ge=0)
    seed: int
    value: float
    points: int = Field(ge=0)
    rejections: int = Field(default=0, ge=0)


class EstimateRow(BaseModel):
    """One Monte Carlo estimate as written by the simulate command."""

    estimator: str
    parameter: str
    grid_value: float
    value: float
    stderr: float = Field(ge=0)
    n: int = Field(ge=1)
