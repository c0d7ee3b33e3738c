"""Downlink SINR, rate, per-AP throughput and area spectral efficiency."""

import logging
import math
from collections.abc import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.core.exceptions import ModelDomainError
from src.core.fingerprint import fingerprint
from src.core.quadrature import gauss_legendre
from src.models.analysis import AnalysisReport, SinrModel, UplinkModel
from src.models.metrics import MetricCurve
from src.models.network import DeploymentModel, NetworkConfig
from src.services.csma import service as csma
from src.services.deployment import service as deployment
from src.services.propagation import service as propagation
from src.services.uplink import service as uplink

logger = logging.getLogger(__name__)

# Interferer distance grid, log-spaced from r outwards.
INTERFERER_NODES = 32
INTERFERER_PANELS = 16
INTERFERER_REACH_M = 1e5
INTERFERER_REACH_RATIO = 1e3
ANGLE_NODES = 64

RATE_NODES = 128
CCDF_FLOOR = 1e-6


def sinr_model(config: NetworkConfig) -> SinrModel:
    return SinrModel(
        contention=csma.contention_model(config),
        pathloss_ap_client=propagation.ap_client_pathloss(config),
        noise_power_w=config.noise_power_w,
        p_ap_w=config.p_ap_w,
        mu=config.fading_mu,
    )


def _serving_gain(r: float, model: SinrModel) -> float:
    return float(propagation.path_gain(model.pathloss_ap_client, r))


def _interference_kernel(
    r: float, model: SinrModel, cache: csma.QCache
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Nodes v and weights w·v·K(v) with K(v) = ∫₀^{2π} q(b(v, θ)) dθ.

    b is the serving-AP to interferer distance by the law of cosines, with
    the client at the origin and the serving AP at (r, 0).
    """
    reach = max(INTERFERER_REACH_M, INTERFERER_REACH_RATIO * r)
    start = max(r, model.pathloss_ap_client.d_min_m)
    log_v, w_log = gauss_legendre(
        math.log(start),
        math.log(reach),
        n=INTERFERER_NODES,
        panels=INTERFERER_PANELS,
    )
    v = np.exp(log_v)
    theta, w_theta = gauss_legendre(0.0, math.pi, n=ANGLE_NODES)
    b = np.sqrt(
        np.maximum(
            v[:, None] ** 2 + r**2 - 2.0 * r * v[:, None] * np.cos(theta), 0.0
        )
    )
    kernel = 2.0 * cache(b) @ w_theta
    # dv = v·d(log v), and the area element carries another v.
    return v, w_log * v**2 * kernel


def _tail_interference(
    x_reach: NDArray[np.float64], reach: float, model: SinrModel, far_q: float
) -> NDArray[np.float64]:
    """Closed-form interference beyond the grid, where x ≪ 1 and q is flat."""
    n = propagation.far_field_exponent(model.pathloss_ap_client)
    return 2.0 * math.pi * far_q * x_reach * reach**2 / (n - 2.0)


def sinr_ccdf(
    beta: ArrayLike,
    r: float,
    model: SinrModel,
    cache: csma.QCache | None = None,
) -> NDArray[np.float64] | float:
    """P(SINR > β) at a client served from distance r.

    Interferers are APs beyond r (the serving AP is the nearest) that transmit
    concurrently with the serving AP with probability q(distance).
    """
    betas = np.atleast_1d(np.asarray(beta, dtype=float))
    if np.any(betas < 0):
        raise ValueError("beta must be non-negative")
    gain_r = _serving_gain(r, model)
    s = model.mu * betas / (model.p_ap_w * gain_r)
    log_ccdf = -s * model.noise_power_w

    lam = model.density_per_m2
    if lam > 0:
        if cache is None:
            cache = csma.concurrency_cache(model.contention)
        v, weights = _interference_kernel(r, model, cache)
        gains = np.asarray(propagation.path_gain(model.pathloss_ap_client, v))
        ratio = gains / gain_r
        x = model.mu * betas[:, None] * ratio[None, :]
        interference = (x / (1.0 + x)) @ weights
        reach = float(v[-1])
        interference += _tail_interference(x[:, -1], reach, model, cache.far_value)
        log_ccdf -= lam * interference

    ccdf = np.clip(np.exp(log_ccdf), 0.0, 1.0)
    return float(ccdf[0]) if np.ndim(beta) == 0 else ccdf


def rate_from_ccdf(
    ccdf: Callable[[NDArray[np.float64]], ArrayLike], t_max: float, n: int = RATE_NODES
) -> float:
    """∫₀^t_max P(SINR > 2^t − 1) dt, i.e. E[log₂(1 + SINR)] in bps/Hz."""
    if t_max <= 0:
        return 0.0
    t, w = gauss_legendre(0.0, t_max, n=n)
    return float(np.dot(w, np.asarray(ccdf(np.exp2(t) - 1.0), dtype=float)))


def max_sinr(r: float, model: SinrModel) -> float:
    """β at which the noise-only CCDF drops to the truncation floor."""
    if model.noise_power_w <= 0:
        raise ModelDomainError("Rate integral needs a positive noise power")
    snr = model.p_ap_w * _serving_gain(r, model) / model.noise_power_w
    return math.log(1.0 / CCDF_FLOOR) * snr / model.mu


def expected_rate(
    r: float, model: SinrModel, cache: csma.QCache | None = None
) -> float:
    """T(r) = E[log₂(1 + SINR)] in bps/Hz."""
    if cache is None and model.density_per_m2 > 0:
        cache = csma.concurrency_cache(model.contention)
    t_max = math.log2(1.0 + max_sinr(r, model))
    return rate_from_ccdf(lambda b: sinr_ccdf(b, r, model, cache), t_max)


def ap_throughput(
    deployment_model: DeploymentModel,
    model: SinrModel,
    uplink_model: UplinkModel | None,
) -> float:
    """Per-AP throughput E[p_T(R)·T(R) | I_u = 1] in bps/Hz."""
    nodes, weights = deployment.serving_distance_nodes(deployment_model, uplink_model)
    cache = (
        csma.concurrency_cache(model.contention) if model.density_per_m2 > 0 else None
    )
    values = [
        csma.transmission_probability(float(r), model.contention)
        * expected_rate(float(r), model, cache)
        for r in nodes
    ]
    return deployment.expected_over_serving_distance(values, weights)


def area_spectral_efficiency(
    deployment_model: DeploymentModel,
    model: SinrModel,
    uplink_model: UplinkModel | None,
) -> float:
    """ASE in bps/Hz/km²."""
    if deployment_model.density_per_km2 <= 0:
        return 0.0
    return (
        ap_throughput(deployment_model, model, uplink_model)
        * deployment_model.density_per_km2
    )


def sinr_ccdf_curve(
    beta_grid: ArrayLike,
    r: float,
    model: SinrModel,
    config: NetworkConfig | None = None,
) -> MetricCurve:
    grid = np.asarray(beta_grid, dtype=float)
    values = np.atleast_1d(sinr_ccdf(grid, r, model))
    meta = {"r_m": f"{r:g}"}
    if config is not None:
        meta["fingerprint"] = fingerprint(config)
    return MetricCurve(
        name="sinr_ccdf",
        grid_name="beta",
        grid=grid.tolist(),
        values=values.tolist(),
        meta=meta,
    )


def link_throughput_curve(
    r_grid: ArrayLike, config: NetworkConfig, include_uplink: bool = True
) -> MetricCurve:
    """Single-link throughput p_T(r)·T(r)·B in Mbps, optionally × p_U(r)."""
    grid = np.asarray(r_grid, dtype=float)
    model = sinr_model(config)
    link = uplink.uplink_model(config)
    values = []
    for r in grid:
        mbps = (
            csma.transmission_probability(float(r), model.contention)
            * expected_rate(float(r), model)
            * config.bandwidth_hz
            / 1e6
        )
        if include_uplink:
            mbps *= float(uplink.uplink_viability(float(r), link))
        values.append(mbps)
    return MetricCurve(
        name="link_throughput_mbps",
        grid_name="r_m",
        grid=grid.tolist(),
        values=values,
        meta={
            "fingerprint": fingerprint(config),
            "uplink": str(include_uplink).lower(),
        },
    )


def analyze(config: NetworkConfig) -> AnalysisReport:
    """Every single-configuration metric for one network."""
    deployment_model = DeploymentModel.from_config(config)
    link = uplink.uplink_model(config)
    model = sinr_model(config)

    marginal = deployment.uplink_marginal(deployment_model, link)
    if marginal <= 0:
        raise ModelDomainError(
            "No client can associate with this configuration",
            details={"density_per_km2": config.density_per_km2},
        )
    throughput = ap_throughput(deployment_model, model, link)
    starvation = uplink.starvation_probability(deployment_model, link)
    report = AnalysisReport(
        fingerprint=fingerprint(config),
        config=config,
        mean_transmission_probability=csma.mean_transmission_probability(
            deployment_model, model.contention, link
        ),
        isolated_transmission_probability=csma.isolated_transmission_probability(
            model.contention
        ),
        coverage_range_m=uplink.coverage_range(link),
        downlink_range_m=uplink.downlink_range(config),
        contention_radius_m=csma.contention_radius(model.contention),
        uplink_marginal=marginal,
        starvation_probability=starvation,
        coverage_fraction=1.0 - starvation,
        throughput_bps_hz=throughput,
        throughput_mbps=throughput * config.bandwidth_hz / 1e6,
        ase_bps_hz_km2=throughput * config.density_per_km2,
        ase_mbps_km2=throughput * config.density_per_km2 * config.bandwidth_hz / 1e6,
    )
    logger.info(
        "Configuration analyzed",
        extra={
            "fingerprint": report.fingerprint,
            "mean_pt": report.mean_transmission_probability,
            "throughput_mbps": report.throughput_mbps,
        },
    )
    return report
