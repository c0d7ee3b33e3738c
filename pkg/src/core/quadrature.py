"""Numerical integration helpers shared by the analytic services."""

import logging
from collections.abc import Callable, Sequence
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray
from scipy import integrate

from src.core.config import get_settings
from src.core.exceptions import NumericalError

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

# quad reports ier > 0 for many benign roundoff cases; only fail when the
# error estimate is this far above the requested tolerance.
_TOLERANCE_SLACK = 100.0


@lru_cache(maxsize=32)
def _leggauss(n: int) -> tuple[FloatArray, FloatArray]:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return nodes, weights


def gauss_legendre(
    a: float, b: float, n: int = 64, panels: int = 1
) -> tuple[FloatArray, FloatArray]:
    """Composite Gauss-Legendre nodes and weights on [a, b].

    The interval is split into ``panels`` equal pieces with ``n`` nodes each.
    """
    if panels < 1 or n < 1:
        raise ValueError("panels and n must be positive")
    x, w = _leggauss(n)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def integrate_adaptive(
    func: Callable[[float], float],
    a: float,
    b: float,
    *,
    what: str,
    epsabs: float | None = None,
    epsrel: float | None = None,
    limit: int = 200,
    points: Sequence[float] | None = None,
) -> float:
    """Adaptive quadrature that raises NumericalError on real non-convergence."""
    settings = get_settings()
    epsabs = settings.quad_epsabs if epsabs is None else epsabs
    epsrel = settings.quad_epsrel if epsrel is None else epsrel

    if b <= a:
        return 0.0

    inner = None
    if points is not None:
        inner = [p for p in points if a < p < b] or None

    output = integrate.quad(
        func,
        a,
        b,
        epsabs=epsabs,
        epsrel=epsrel,
        limit=limit,
        points=inner,
        full_output=1,
    )
    value, abserr = float(output[0]), float(output[1])
    if len(output) > 3:
        target = max(epsabs, epsrel * abs(value))
        if not np.isfinite(value) or abserr > _TOLERANCE_SLACK * target:
            raise NumericalError(
                f"{what}: quadrature did not converge",
                details={
                    "value": value,
                    "achieved_error": abserr,
                    "requested_error": target,
                    "message": output[3],
                },
            )
        logger.debug(
            "Quadrature flagged but within slack",
            extra={"what": what, "achieved_error": abserr, "target": target},
        )
    return value
