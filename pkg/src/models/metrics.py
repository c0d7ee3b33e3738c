"""Sampled curves and Monte Carlo estimates."""

import math

from pydantic import BaseModel, Field, field_validator, model_validator


class MetricCurve(BaseModel):
    """A sampled function such as p_T(r), p_U(r) or T(r)."""

    name: str
    grid_name: str
    grid: list[float]
    values: list[float]
    meta: dict[str, str] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_samples(self) -> "MetricCurve":
        if len(self.grid) != len(self.values):
            raise ValueError("grid and values must have the same length")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:], strict=False)):
            raise ValueError("grid must be strictly increasing")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("curve values must be finite")
        return self


class Estimate(BaseModel):
    """Monte Carlo mean with its standard error."""

    value: float
    stderr: float = Field(ge=0)
    n: int = Field(ge=1)

    @field_validator("value")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("estimate must be finite")
        return value

    @classmethod
    def from_samples(cls, samples: list[float]) -> "Estimate":
        n = len(samples)
        if n == 0:
            raise ValueError("at least one sample is required")
        mean = math.fsum(samples) / n
        if n == 1:
            return cls(value=mean, stderr=0.0, n=1)
        var = math.fsum((s - mean) ** 2 for s in samples) / (n - 1)
        return cls(value=mean, stderr=math.sqrt(var / n), n=n)

    def within(self, target: float, tolerance: float, n_stderr: float = 3.0) -> bool:
        """True when |value − target| <= max(tolerance, n_stderr · stderr)."""
        return abs(self.value - target) <= max(tolerance, n_stderr * self.stderr)


class EstimateCurve(BaseModel):
    """A grid of estimates, e.g. an empirical SINR CCDF."""

    name: str
    grid_name: str
    grid: list[float]
    estimates: list[Estimate]
    meta: dict[str, str] = Field(default_factory=dict)

    @property
    def values(self) -> list[float]:
        return [e.value for e in self.estimates]
