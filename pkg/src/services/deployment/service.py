"""AP deployment statistics: nearest-AP and serving-distance laws."""

import logging
import math

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import optimize

from src.core.exceptions import ModelDomainError
from src.core.quadrature import gauss_legendre, integrate_adaptive
from src.models.analysis import UplinkModel
from src.models.network import DeploymentModel
from src.services.uplink import service as uplink

logger = logging.getLogger(__name__)

TAIL_RATIO = 1e-12
VIABILITY_FLOOR = 1e-12
MARGINAL_EPSABS = 1e-8

SERVING_NODES = 16
SERVING_PANELS = 8


def nearest_ap_distance_pdf(
    r: ArrayLike, deployment: DeploymentModel
) -> NDArray[np.float64] | float:
    """Rayleigh density 2πλr·exp(−λπr²) of the distance to the nearest AP."""
    lam = deployment.density_per_m2
    arr = np.asarray(r, dtype=float)
    density = 2.0 * math.pi * lam * arr * np.exp(-lam * math.pi * arr**2)
    pdf = np.where(arr < 0, 0.0, density)
    return float(pdf) if pdf.ndim == 0 else pdf


def _viability(r: ArrayLike, model: UplinkModel | None) -> NDArray[np.float64]:
    if model is None:
        return np.ones_like(np.asarray(r, dtype=float))
    return np.asarray(uplink.uplink_viability(r, model), dtype=float)


def nearest_distance_cutoff(deployment: DeploymentModel) -> float:
    """Distance beyond which the nearest-AP density is below 1e-12 of its peak."""
    lam = deployment.density_per_m2
    if lam <= 0:
        raise ModelDomainError("Distance law undefined for zero AP density")
    mode = 1.0 / math.sqrt(2.0 * math.pi * lam)
    log_peak = math.log(2.0 * math.pi * lam * mode) - 0.5

    def excess(r: float) -> float:
        return math.log(2.0 * math.pi * lam * r) - lam * math.pi * r**2 - (
            log_peak + math.log(TAIL_RATIO)
        )

    upper = mode
    while excess(upper) > 0:
        upper *= 2.0
    return float(optimize.brentq(excess, mode, upper))


def _integration_limit(
    deployment: DeploymentModel, model: UplinkModel | None
) -> float | None:
    limit = nearest_distance_cutoff(deployment)
    if model is None:
        return limit
    reach = uplink.viability_range(model, VIABILITY_FLOOR)
    if reach is None:
        return None
    return min(limit, reach)


def uplink_marginal(
    deployment: DeploymentModel, uplink_model: UplinkModel | None
) -> float:
    """P(I_u = 1): probability that a client's nearest AP hears its uplink.

    ``uplink_model=None`` means the uplink is always viable.
    """
    if deployment.density_per_m2 <= 0:
        return 0.0
    limit = _integration_limit(deployment, uplink_model)
    if limit is None:
        return 0.0

    mode = 1.0 / math.sqrt(2.0 * math.pi * deployment.density_per_m2)
    hints = [mode]
    if uplink_model is not None:
        coverage = uplink.coverage_range(uplink_model)
        if coverage is not None:
            hints.append(coverage)

    def integrand(r: float) -> float:
        return float(nearest_ap_distance_pdf(r, deployment)) * float(
            _viability(r, uplink_model)
        )

    value = integrate_adaptive(
        integrand,
        0.0,
        limit,
        what="uplink marginal",
        epsabs=MARGINAL_EPSABS,
        points=hints,
    )
    return min(max(value, 0.0), 1.0)


def conditional_distance_pdf(
    r: ArrayLike,
    deployment: DeploymentModel,
    uplink_model: UplinkModel | None,
    marginal: float | None = None,
) -> NDArray[np.float64] | float:
    """Serving-distance density f_R(r | I_u = 1)."""
    if marginal is None:
        marginal = uplink_marginal(deployment, uplink_model)
    if marginal <= 0:
        raise ModelDomainError(
            "No client can associate: uplink marginal is zero",
            details={"density_per_km2": deployment.density_per_km2},
        )
    arr = np.asarray(r, dtype=float)
    pdf = (
        np.asarray(nearest_ap_distance_pdf(arr, deployment))
        * _viability(np.maximum(arr, 0.0), uplink_model)
        / marginal
    )
    return float(pdf) if pdf.ndim == 0 else pdf


def serving_distance_nodes(
    deployment: DeploymentModel,
    uplink_model: UplinkModel | None,
    n: int = SERVING_NODES,
    panels: int = SERVING_PANELS,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Quadrature nodes r_i and weights w_i with Σ w_i g(r_i) ≈ E[g(R) | I_u = 1].

    The weights are normalized to sum to one; the adaptive marginal is used to
    check the fixed rule.
    """
    limit = _integration_limit(deployment, uplink_model)
    if limit is None or deployment.density_per_m2 <= 0:
        raise ModelDomainError(
            "No client can associate: uplink marginal is zero",
            details={"density_per_km2": deployment.density_per_km2},
        )
    nodes, weights = gauss_legendre(0.0, limit, n=n, panels=panels)
    mass = (
        weights
        * np.asarray(nearest_ap_distance_pdf(nodes, deployment))
        * _viability(nodes, uplink_model)
    )
    total = float(mass.sum())
    if total <= 0:
        raise ModelDomainError("Serving-distance law has no mass")

    marginal = uplink_marginal(deployment, uplink_model)
    if marginal > 0 and abs(total - marginal) > 1e-4 * marginal:
        logger.warning(
            "Fixed serving-distance rule disagrees with adaptive marginal",
            extra={"fixed": total, "adaptive": marginal},
        )
    return nodes, mass / total


def expected_over_serving_distance(
    values: ArrayLike, weights: NDArray[np.float64]
) -> float:
    return float(np.dot(np.asarray(values, dtype=float), weights))

