"""Uplink viability, AP coverage range and client starvation."""

import logging
import math
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.core.fingerprint import fingerprint
from src.core.quadrature import integrate_adaptive
from src.models.analysis import UplinkModel
from src.models.metrics import MetricCurve
from src.models.network import DeploymentModel, NetworkConfig
from src.services.propagation import service as propagation

logger = logging.getLogger(__name__)

# A client is in coverage while its uplink is viable at least this often.
COVERAGE_LEVEL = 0.1
VIABILITY_FLOOR = 1e-12


def uplink_model(config: NetworkConfig) -> UplinkModel:
    """Uplink model for a network configuration."""
    return UplinkModel(
        p_client_w=config.p_client_w,
        gamma_w=config.gamma_w,
        pathloss=propagation.ap_client_pathloss(config),
        mu=config.fading_mu,
    )


def uplink_viability(r: ArrayLike, model: UplinkModel) -> NDArray[np.float64] | float:
    """p_U(r) = exp(−μγ / (P_C·ρ(r)))."""
    return propagation.exceedance_probability(
        model.p_client_w, model.gamma_w, model.pathloss, r, model.mu
    )


def viability_range(model: UplinkModel, level: float) -> float | None:
    """Distance at which p_U falls to ``level``; None if it starts below."""
    return propagation.detection_range(
        model.p_client_w, model.gamma_w, model.pathloss, model.mu, level
    )


@lru_cache(maxsize=256)
def coverage_range(model: UplinkModel, level: float = COVERAGE_LEVEL) -> float | None:
    """Largest AP–client distance with p_U >= level.

    None means there is no coverage at all: p_U(d_min) is already below the
    level. The AP transmit power never enters.
    """
    return viability_range(model, level)


def downlink_range(
    config: NetworkConfig, level: float = COVERAGE_LEVEL
) -> float | None:
    """Downlink analogue of the coverage range (AP power against σ)."""
    return propagation.detection_range(
        config.p_ap_w,
        config.sigma_w,
        propagation.ap_client_pathloss(config),
        config.fading_mu,
        level,
    )


@lru_cache(maxsize=256)
def viable_area(model: UplinkModel) -> float:
    """2π∫p_U(r)·r dr in m²: the mean area an AP can hear a client from."""
    reach = viability_range(model, VIABILITY_FLOOR)
    if reach is None:
        return 0.0
    hints = [c for c in (coverage_range(model),) if c is not None]

    def integrand(r: float) -> float:
        return float(uplink_viability(r, model)) * r

    return 2.0 * math.pi * integrate_adaptive(
        integrand, 0.0, reach, what="viable uplink area", points=hints
    )


def starvation_probability(deployment: DeploymentModel, model: UplinkModel) -> float:
    """Probability that no AP anywhere hears the client's uplink.

    Each AP independently hears the client with probability p_U(distance), so
    the viable APs form a thinned PPP and starvation is its void probability.
    """
    area = viable_area(model)
    value = math.exp(-deployment.density_per_m2 * area)
    logger.debug(
        "Starvation evaluated",
        extra={"density_per_km2": deployment.density_per_km2, "viable_area_m2": area},
    )
    return value


def coverage_fraction(deployment: DeploymentModel, model: UplinkModel) -> float:
    """Fraction of uniformly placed clients that can associate with some AP."""
    return 1.0 - starvation_probability(deployment, model)


def uplink_viability_curve(
    r_grid: ArrayLike, model: UplinkModel, config: NetworkConfig | None = None
) -> MetricCurve:
    grid = np.asarray(r_grid, dtype=float)
    values = np.atleast_1d(np.asarray(uplink_viability(grid, model), dtype=float))
    meta = {"fingerprint": fingerprint(config)} if config is not None else {}
    return MetricCurve(
        name="uplink_viability",
        grid_name="r_m",
        grid=grid.tolist(),
        values=values.tolist(),
        meta=meta,
    )
