"""Mark-based CSMA/CA contention among APs.

Every AP draws a uniform mark and transmits when none of the APs it detects
holds a smaller mark. Detection of an AP at distance d happens with
probability S(d) = exp(−μσ / (P_AP·ρ(d))) under the AP–AP pathloss.
"""

import logging
import math
import time
from functools import lru_cache
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.core.config import get_settings
from src.core.exceptions import ModelDomainError
from src.core.fingerprint import fingerprint
from src.core.quadrature import gauss_legendre, integrate_adaptive
from src.models.analysis import ContentionModel, UplinkModel
from src.models.metrics import MetricCurve
from src.models.network import DeploymentModel, NetworkConfig
from src.services.deployment import service as deployment
from src.services.propagation import service as propagation

logger = logging.getLogger(__name__)

CONTENTION_LEVEL = 0.1
# S is treated as zero beyond the distance where it drops below this.
TRUNCATION_LEVEL = 1e-9

MARK_NODES = 64
GRID_RADIAL_NODES = 32
GRID_RADIAL_PANELS = 8
GRID_ANGULAR_NODES = 64

ContentionMethod = Literal["angular", "polar_grid"]


def contention_model(config: NetworkConfig) -> ContentionModel:
    return ContentionModel(
        p_ap_w=config.p_ap_w,
        sigma_w=config.sigma_w,
        pathloss_ap_ap=propagation.ap_ap_pathloss(config),
        mu=config.fading_mu,
        density_per_m2=config.density_per_km2 * 1e-6,
    )


def detection_probability(
    d: ArrayLike, model: ContentionModel
) -> NDArray[np.float64] | float:
    """S(d): probability that an AP senses another AP at distance d."""
    return propagation.exceedance_probability(
        model.p_ap_w, model.sigma_w, model.pathloss_ap_ap, d, model.mu
    )


@lru_cache(maxsize=256)
def contention_radius(
    model: ContentionModel, level: float = CONTENTION_LEVEL
) -> float | None:
    """Distance at which S falls to ``level``."""
    return propagation.detection_range(
        model.p_ap_w, model.sigma_w, model.pathloss_ap_ap, model.mu, level
    )


def truncation_radius(model: ContentionModel) -> float:
    radius = contention_radius(model, TRUNCATION_LEVEL)
    # S below the level even at d_min: the plane integrals are negligible.
    return radius if radius is not None else model.pathloss_ap_ap.d_min_m


def _radial_hints(model: ContentionModel) -> list[float]:
    return [r for r in (contention_radius(model), contention_radius(model, 0.5)) if r]


@lru_cache(maxsize=256)
def full_plane_integral(model: ContentionModel) -> float:
    """N₀ = ∫_{R²} S(|x|) dx in m²."""

    def integrand(u: float) -> float:
        return float(detection_probability(u, model)) * u

    radial = integrate_adaptive(
        integrand,
        0.0,
        truncation_radius(model),
        what="full-plane contention integral",
        points=_radial_hints(model),
    )
    return 2.0 * math.pi * radial


def _excluded_ball_integral(r: float, model: ContentionModel) -> float:
    """∫ S over B(client, r), with the AP on the ball's boundary.

    The circle of radius u about the AP lies inside the ball over an arc of
    2·arccos(u / 2r), so the 2-D integral collapses to one dimension.
    """
    if r <= 0.0:
        return 0.0
    upper = min(2.0 * r, truncation_radius(model))

    def integrand(u: float) -> float:
        arc = 2.0 * math.acos(min(u / (2.0 * r), 1.0))
        return float(detection_probability(u, model)) * u * arc

    return integrate_adaptive(
        integrand,
        0.0,
        upper,
        what="excluded-ball contention integral",
        points=_radial_hints(model),
    )


def _polar_grid_integral(
    r: float, model: ContentionModel, client_frame: bool
) -> float:
    reach = truncation_radius(model)
    theta, w_theta = gauss_legendre(0.0, math.pi, n=GRID_ANGULAR_NODES)
    cos_theta = np.cos(theta)

    if client_frame:
        # Client at the origin, AP at (r, 0); integrate over |x| > r.
        v, w_v = gauss_legendre(
            r, r + reach, n=GRID_RADIAL_NODES, panels=GRID_RADIAL_PANELS
        )
        dist = np.sqrt(
            np.maximum(
                v[:, None] ** 2 + r**2 - 2.0 * r * v[:, None] * cos_theta[None, :],
                0.0,
            )
        )
        s = np.asarray(detection_probability(dist, model))
        return float(2.0 * np.einsum("i,j,ij->", w_v * v, w_theta, s))

    # AP at the origin, client at (r, 0); drop nodes inside B(client, r).
    u, w_u = gauss_legendre(
        0.0, reach, n=GRID_RADIAL_NODES, panels=GRID_RADIAL_PANELS
    )
    s = np.asarray(detection_probability(u, model))
    inside = u[:, None] ** 2 - 2.0 * r * u[:, None] * cos_theta[None, :] < 0.0
    outside = np.where(inside, 0.0, 1.0)
    return float(2.0 * np.einsum("i,j,ij->", w_u * u * s, w_theta, outside))


def contention_integral(
    r: float,
    model: ContentionModel,
    client_frame: bool = False,
    method: ContentionMethod = "angular",
) -> float:
    """N(r) = ∫ S(|x − x_AP|) dx over the plane minus B(client, r).

    ``method="polar_grid"`` evaluates the 2-D integral on a tensor
    Gauss-Legendre grid in the AP frame or, with ``client_frame``, centred on
    the client. The default angular reduction is exact up to quadrature error.
    """
    if r < 0:
        raise ValueError("r must be non-negative")
    if method == "polar_grid":
        return _polar_grid_integral(r, model, client_frame)
    value = full_plane_integral(model) - _excluded_ball_integral(r, model)
    return max(value, 0.0)


def _mean_exp(a: float) -> float:
    """∫₀¹ e^(−a·m) dm = (1 − e^(−a))/a, stable near a = 0."""
    if a < 1e-8:
        return 1.0 - 0.5 * a
    return -math.expm1(-a) / a


def _mean_linear_exp(a: float) -> float:
    """∫₀¹ m·e^(−a·m) dm."""
    if a < 1e-3:
        return 0.5 - a / 3.0 + a**2 / 8.0 - a**3 / 30.0
    return (1.0 - math.exp(-a) * (1.0 + a)) / a**2


def transmission_probability_from_load(load: float) -> float:
    """p_T for a contention load λN: (1 − e^(−λN))/(λN), 1 at zero load."""
    if load < 0:
        raise ValueError("load must be non-negative")
    return _mean_exp(load)


def transmission_probability_from_marks(load: float, n: int = MARK_NODES) -> float:
    """∫₀¹ e^(−load·m₀) dm₀ integrated over the AP's own mark numerically."""
    if load < 0:
        raise ValueError("load must be non-negative")
    panels = max(1, math.ceil(load / 16.0))
    m0, w = gauss_legendre(0.0, 1.0, n=n, panels=panels)
    return float(np.dot(w, np.exp(-load * m0)))


def transmission_probability(r: float, model: ContentionModel) -> float:
    """p_T(r) for an AP whose client sits at distance r."""
    if model.density_per_m2 <= 0:
        return 1.0
    return transmission_probability_from_load(
        model.density_per_m2 * contention_integral(r, model)
    )


def isolated_transmission_probability(model: ContentionModel) -> float:
    """(1 − e^(−λN₀))/(λN₀): p_T with no empty ball around the client."""
    return transmission_probability_from_load(
        model.density_per_m2 * full_plane_integral(model)
    )


def mean_transmission_probability(
    deployment_model: DeploymentModel,
    model: ContentionModel,
    uplink_model: UplinkModel | None,
) -> float:
    """p̄_T: p_T(r) averaged over the serving-distance law."""
    nodes, weights = deployment.serving_distance_nodes(deployment_model, uplink_model)
    values = [transmission_probability(float(r), model) for r in nodes]
    return deployment.expected_over_serving_distance(values, weights)


def overlap_integral(d: float, model: ContentionModel) -> float:
    """∫ S(|z|)·S(|z − x|) dz for |x| = d, on a polar grid about the midpoint."""
    reach = truncation_radius(model)
    u, w_u = gauss_legendre(
        0.0, reach, n=GRID_RADIAL_NODES, panels=GRID_RADIAL_PANELS
    )
    theta, w_theta = gauss_legendre(0.0, math.pi, n=GRID_ANGULAR_NODES)
    half = 0.5 * d
    cross = u[:, None] * d * np.cos(theta)[None, :]
    base = u[:, None] ** 2 + half**2
    to_first = np.sqrt(np.maximum(base + cross, 0.0))
    to_second = np.sqrt(np.maximum(base - cross, 0.0))
    product = np.asarray(detection_probability(to_first, model)) * np.asarray(
        detection_probability(to_second, model)
    )
    return float(2.0 * np.einsum("i,j,ij->", w_u * u, w_theta, product))


def union_detection_integral(d: float, model: ContentionModel) -> float:
    """∫ S_{0 or x}(z) dz = 2N₀ − overlap, the area sensed by either AP."""
    n0 = full_plane_integral(model)
    return min(max(2.0 * n0 - overlap_integral(d, model), n0), 2.0 * n0)


def concurrent_transmission_probability(d: float, model: ContentionModel) -> float:
    """q(d) = P(x transmits | 0 transmits) for two APs at distance d.

    Both mark integrals have closed forms once the plane integrals are known:
    a = λN₀ and c = λ·∫S_{0 or x}, with D = 1 − S(d) the probability that the
    larger-mark AP misses the other.
    """
    lam = model.density_per_m2
    miss = 1.0 - float(detection_probability(d, model))
    n0 = full_plane_integral(model)
    a = lam * n0
    c = lam * union_detection_integral(d, model) if lam > 0 else 0.0

    # Numerator: 2D ∫₀¹ [(1 − e^(−a(1−m₀)))/a] e^(−c·m₀) dm₀.
    if a < 1e-6:
        joint = 2.0 * miss * (_mean_exp(c) - _mean_linear_exp(c))
    else:
        joint = 2.0 * miss / a * (_mean_exp(c) - math.exp(-a) * _mean_exp(c - a))

    # Denominator: ∫₀¹ e^(−a·m₀)·[(1 − m₀) + D·m₀] dm₀.
    solo = _mean_exp(a) - (1.0 - miss) * _mean_linear_exp(a)
    if solo <= 0.0:
        raise ModelDomainError(
            "Transmission probability of the reference AP vanished",
            details={"distance_m": d, "load": a},
        )
    return min(max(joint / solo, 0.0), 1.0)


class QCache:
    """q(d) tabulated on a log-spaced grid with linear interpolation.

    Below the grid the value at d_min is used, beyond it the isolated
    transmission probability.
    """

    def __init__(
        self,
        grid: NDArray[np.float64],
        values: NDArray[np.float64],
        far_value: float,
    ):
        self.grid = grid
        self.values = values
        self.far_value = far_value

    def __call__(self, d: ArrayLike) -> NDArray[np.float64]:
        return np.interp(
            np.asarray(d, dtype=float),
            self.grid,
            self.values,
            left=self.values[0],
            right=self.far_value,
        )

    def __len__(self) -> int:
        return len(self.grid)


@lru_cache(maxsize=32)
def concurrency_cache(model: ContentionModel, points: int | None = None) -> QCache:
    """Build the q(d) table once per contention model."""
    points = get_settings().q_cache_points if points is None else points
    started = time.perf_counter()
    d_min = model.pathloss_ap_ap.d_min_m
    upper = max(2.0 * truncation_radius(model), 10.0 * d_min)
    grid = np.geomspace(d_min, upper, points)
    values = np.array(
        [concurrent_transmission_probability(float(d), model) for d in grid]
    )
    cache = QCache(grid, values, isolated_transmission_probability(model))
    logger.info(
        "Concurrency cache built",
        extra={
            "points": points,
            "upper_m": upper,
            "seconds": round(time.perf_counter() - started, 3),
        },
    )
    return cache


def transmission_probability_curve(
    r_grid: ArrayLike, model: ContentionModel, config: NetworkConfig | None = None
) -> MetricCurve:
    grid = np.asarray(r_grid, dtype=float)
    values = [transmission_probability(float(r), model) for r in grid]
    meta = {"fingerprint": fingerprint(config)} if config is not None else {}
    return MetricCurve(
        name="transmission_probability",
        grid_name="r_m",
        grid=grid.tolist(),
        values=values,
        meta=meta,
    )
