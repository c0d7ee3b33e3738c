"""Pathloss, received power and fading.

Losses are positive dB values. Everything downstream works with the linear
gain 10^(-loss/10), so the exponent of the detection laws is always
``mu * threshold / (power * gain)``.
"""

import logging
import math
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import optimize

from src.core.exceptions import ModelDomainError, NumericalError
from src.models.network import NetworkConfig
from src.models.propagation import (
    FadingModel,
    LinkGeometry,
    PathlossEvaluation,
    PathlossModel,
    PathlossVariant,
)

logger = logging.getLogger(__name__)

NEAR_SLOPE_DB = 25.0
FAR_SLOPE_DB = 40.0
BREAKPOINT_EXCESS_DB = 20.0

BISECTION_UPPER_M = 1e6
BISECTION_MAX_ITER = 200
BISECTION_XTOL_M = 0.01


def breakpoint_distance(geom: LinkGeometry) -> float:
    """Distance where the dual-slope exponent switches from 2.5 to 4."""
    lam = geom.wavelength_m
    s2 = geom.height_sum**2
    d2 = geom.height_difference**2
    quarter = (lam / 2.0) ** 2
    radicand = (s2 - d2) ** 2 - 2.0 * (s2 + d2) * quarter + quarter**2
    if radicand <= 0.0:
        raise ModelDomainError(
            "Breakpoint distance undefined for this geometry",
            details={
                "wavelength_m": lam,
                "h_t_m": geom.h_t_m,
                "h_r_m": geom.h_r_m,
                "radicand": radicand,
            },
        )
    return math.sqrt(radicand) / lam


def los_pathloss_db(geom: LinkGeometry) -> float:
    """Line-of-sight reference loss |20 log10(λ² / (8π h_t h_r))|."""
    ratio = geom.wavelength_m**2 / (8.0 * math.pi * geom.h_t_m * geom.h_r_m)
    return abs(20.0 * math.log10(ratio))


@lru_cache(maxsize=256)
def _dual_slope_constants(geom: LinkGeometry) -> tuple[float, float]:
    return breakpoint_distance(geom), los_pathloss_db(geom)


def _clamp(model: PathlossModel, d: ArrayLike) -> tuple[NDArray[np.float64], bool]:
    arr = np.asarray(d, dtype=float)
    clamped = bool(np.any(arr < model.d_min_m))
    if clamped:
        arr = np.maximum(arr, model.d_min_m)
    return arr, clamped


def _loss_db(model: PathlossModel, d: NDArray[np.float64]) -> NDArray[np.float64]:
    if model.variant is PathlossVariant.SUBURBAN_HATA:
        return model.hata_intercept_db + model.hata_slope_db * np.log10(d / 1000.0)

    assert model.geometry is not None
    r_bp, rho_los = _dual_slope_constants(model.geometry)
    ratio = np.log10(d / r_bp)
    slope = np.where(d < r_bp, NEAR_SLOPE_DB, FAR_SLOPE_DB)
    return rho_los + BREAKPOINT_EXCESS_DB + slope * ratio


def pathloss_db(model: PathlossModel, d: ArrayLike) -> NDArray[np.float64] | float:
    """Pathloss in dB; distances below ``d_min`` are clamped to it."""
    arr, clamped = _clamp(model, d)
    if clamped:
        logger.debug(
            "Distance clamped to pathloss floor",
            extra={"d_min_m": model.d_min_m, "variant": model.variant.value},
        )
    loss = _loss_db(model, arr)
    return float(loss) if loss.ndim == 0 else loss


def evaluate_pathloss(model: PathlossModel, d: float) -> PathlossEvaluation:
    """Scalar pathloss that reports whether ``d`` was below the floor."""
    arr, clamped = _clamp(model, d)
    if clamped:
        logger.warning(
            "Distance below pathloss validity floor",
            extra={"distance_m": d, "d_min_m": model.d_min_m},
        )
    return PathlossEvaluation(
        distance_m=float(arr), loss_db=float(_loss_db(model, arr)), clamped=clamped
    )


def db_to_gain(loss_db: ArrayLike) -> NDArray[np.float64] | float:
    """Linear gain for a loss in dB, capped at 1."""
    gain = np.minimum(np.power(10.0, -np.asarray(loss_db, dtype=float) / 10.0), 1.0)
    return float(gain) if gain.ndim == 0 else gain


def path_gain(model: PathlossModel, d: ArrayLike) -> NDArray[np.float64] | float:
    """Linear path gain in (0, 1]."""
    return db_to_gain(pathloss_db(model, d))


def received_power(
    p_tx: ArrayLike, gain: ArrayLike, fade: ArrayLike = 1.0
) -> NDArray[np.float64] | float:
    """Received power P·ρ·F in watts."""
    power = np.multiply(np.multiply(p_tx, gain), fade)
    return float(power) if np.ndim(power) == 0 else power


def exceedance_probability(
    p_tx: float,
    threshold_w: float,
    model: PathlossModel,
    d: ArrayLike,
    mu: float = 1.0,
) -> NDArray[np.float64] | float:
    """P(p_tx · ρ(d) · F > threshold) for F ~ Exp(mu)."""
    gain = np.asarray(path_gain(model, d), dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        prob = np.exp(-mu * threshold_w / (p_tx * gain))
    return float(prob) if prob.ndim == 0 else prob


def detection_range(
    p_tx: float,
    threshold_w: float,
    model: PathlossModel,
    mu: float = 1.0,
    level: float = 0.1,
) -> float | None:
    """Largest distance at which the exceedance probability is still >= level.

    Returns None when even the floor distance misses the level.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")

    def excess(d: float) -> float:
        return float(exceedance_probability(p_tx, threshold_w, model, d, mu)) - level

    if excess(model.d_min_m) < 0.0:
        return None
    if excess(BISECTION_UPPER_M) >= 0.0:
        raise NumericalError(
            "Detection range exceeds the bisection bracket",
            details={"upper_m": BISECTION_UPPER_M, "level": level},
        )
    root, info = optimize.bisect(
        excess,
        model.d_min_m,
        BISECTION_UPPER_M,
        xtol=BISECTION_XTOL_M,
        maxiter=BISECTION_MAX_ITER,
        full_output=True,
        disp=False,
    )
    if not info.converged:
        raise NumericalError(
            "Bisection for detection range did not converge",
            details={"iterations": info.iterations, "level": level},
        )
    return float(root)


def far_field_exponent(model: PathlossModel) -> float:
    """Power-law exponent n of the gain d^(-n) beyond the breakpoint."""
    if model.variant is PathlossVariant.SUBURBAN_HATA:
        return model.hata_slope_db / 10.0
    return FAR_SLOPE_DB / 10.0


def sample_fading(
    fading: FadingModel, rng: np.random.Generator, size: int | tuple[int, ...]
) -> NDArray[np.float64]:
    """Draw exponential fading coefficients with mean 1/mu."""
    return rng.exponential(scale=fading.mean, size=size)


def ap_ap_pathloss(config: NetworkConfig) -> PathlossModel:
    """Pathloss between two APs mounted at the AP height."""
    return _pathloss_for(config, config.h_ap_m, config.h_ap_m)


def ap_client_pathloss(config: NetworkConfig) -> PathlossModel:
    """Pathloss between an AP and a client at client height."""
    return _pathloss_for(config, config.h_ap_m, config.h_client_m)


def _pathloss_for(config: NetworkConfig, h_t: float, h_r: float) -> PathlossModel:
    geometry = None
    if config.pathloss_model is PathlossVariant.DUAL_SLOPE:
        geometry = LinkGeometry(wavelength_m=config.wavelength_m, h_t_m=h_t, h_r_m=h_r)
    return PathlossModel(
        variant=config.pathloss_model,
        geometry=geometry,
        d_min_m=config.d_min_m,
        hata_intercept_db=config.hata_intercept_db,
        hata_slope_db=config.hata_slope_db,
    )
