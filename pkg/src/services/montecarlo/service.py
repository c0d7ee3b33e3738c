"""Monte Carlo oracle for the analytic model.

Each replication realizes a marked Poisson AP field with its own counter-based
random stream keyed by (seed, replication index), so results do not depend on
how replications are spread over worker processes.
"""

import csv
import itertools
import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import TypeVar

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import spatial

from src.core.config import get_settings
from src.core.exceptions import RejectionLimitError, ValidationError
from src.models.analysis import ContentionModel, SinrModel, UplinkModel
from src.models.metrics import Estimate, EstimateCurve
from src.models.network import DeploymentModel, NetworkConfig
from src.models.propagation import FadingModel, PathlossModel
from src.models.simulation import PointField, ReplicationRecord
from src.services.csma import service as csma
from src.services.propagation import service as propagation
from src.services.sinr import service as sinr
from src.services.uplink import service as uplink

logger = logging.getLogger(__name__)

T = TypeVar("T")

MIN_REPS = 100
MAX_CONSECUTIVE_REJECTIONS = 10_000

# Guard ring: APs beyond the contention radius at this detection level still
# contend but are never measured or counted as interferers.
GUARD_LEVEL = 1e-3
WINDOW_SPACINGS = 10.0
WINDOW_CONTENTION_RADII = 5.0
REACH_LEVEL = 1e-9

RECORD_FIELDS = ["estimator", "rep", "seed", "value", "points", "rejections"]

Outcome = tuple[float, int, int]


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    """Independent Philox stream for replication ``rep`` of run ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, rep])))


def _replicate(fn: Callable[[np.random.Generator], T], seed: int, rep: int) -> T:
    return fn(replication_rng(seed, rep))


def run_replications(
    fn: Callable[[np.random.Generator], T],
    n_reps: int,
    seed: int,
    workers: int | None = None,
) -> list[T]:
    """Run ``fn`` once per replication, results in replication order.

    ``fn`` must be picklable when ``workers`` > 1.
    """
    if n_reps < 1:
        raise ValidationError("At least one replication is required")
    workers = get_settings().workers if workers is None else workers
    task = partial(_replicate, fn, seed)
    if workers <= 1:
        return [task(rep) for rep in range(n_reps)]
    chunksize = max(1, n_reps // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, range(n_reps), chunksize=chunksize))


def _check_reps(n_reps: int) -> None:
    if n_reps < MIN_REPS:
        raise ValidationError(
            f"Monte Carlo estimates need at least {MIN_REPS} replications",
            details={"n_reps": n_reps},
        )


def default_window(model: ContentionModel) -> tuple[float, float]:
    """(half-width, guard) of the simulation window in meters.

    The measured region spans max(10 mean AP spacings, 5 contention radii);
    the guard ring is the contention radius at a 1e-3 detection level.
    """
    lam = model.density_per_m2
    spacing = 1.0 / math.sqrt(lam) if lam > 0 else 0.0
    radius = csma.contention_radius(model) or 0.0
    guard = csma.contention_radius(model, GUARD_LEVEL) or 0.0
    inner = max(
        WINDOW_SPACINGS * spacing,
        WINDOW_CONTENTION_RADII * radius,
        10.0 * model.pathloss_ap_ap.d_min_m,
    )
    return inner + guard, guard


def sample_field(
    density_per_m2: float,
    half_width: float,
    rng: np.random.Generator,
    guard: float = 0.0,
    exclude: tuple[tuple[float, float], float] | None = None,
) -> PointField:
    """Marked PPP on [−h, h]², optionally with an empty ball.

    ``exclude=(center, radius)`` drops every point inside the ball, which
    leaves a PPP on the window minus the ball.
    """
    area = (2.0 * half_width) ** 2
    count = int(rng.poisson(density_per_m2 * area))
    positions = rng.uniform(-half_width, half_width, size=(count, 2))
    marks = rng.uniform(0.0, 1.0, size=count)
    if exclude is not None:
        center, radius = exclude
        offsets = positions - np.asarray(center, dtype=float)
        keep = np.hypot(offsets[:, 0], offsets[:, 1]) >= radius
        positions, marks = positions[keep], marks[keep]
    return PointField(
        window_half_width_m=half_width, guard_m=guard, positions=positions, marks=marks
    )


def _detected(
    p_tx: float,
    threshold_w: float,
    pathloss: PathlossModel,
    distances: NDArray[np.float64],
    mu: float,
    rng: np.random.Generator,
) -> NDArray[np.bool_]:
    """Fresh fading per link; True where P·ρ(d)·F exceeds the threshold."""
    fades = propagation.sample_fading(FadingModel(mu=mu), rng, distances.shape[0])
    gains = np.asarray(propagation.path_gain(pathloss, distances), dtype=float)
    return np.asarray(propagation.received_power(p_tx, gains, fades)) > threshold_w


def _blocked(
    mark: float,
    other_marks: NDArray[np.float64],
    distances: NDArray[np.float64],
    model: ContentionModel,
    rng: np.random.Generator,
) -> bool:
    """Whether an AP senses some AP holding a smaller mark."""
    near = distances <= csma.truncation_radius(model)
    if not near.any():
        return False
    sensed = _detected(
        model.p_ap_w,
        model.sigma_w,
        model.pathloss_ap_ap,
        distances[near],
        model.mu,
        rng,
    )
    return bool(np.any(sensed & (other_marks[near] < mark)))


def _transmitting_mask(
    positions: NDArray[np.float64],
    marks: NDArray[np.float64],
    model: ContentionModel,
    rng: np.random.Generator,
    subset: NDArray[np.intp] | None = None,
) -> NDArray[np.bool_]:
    """Contention outcome for the APs in ``subset`` (all APs by default)."""
    count = marks.shape[0]
    if subset is None:
        subset = np.arange(count)
    if count == 0 or subset.size == 0:
        return np.zeros(subset.size, dtype=bool)

    tree = spatial.cKDTree(positions)
    neighbours = tree.query_ball_point(
        positions[subset], r=csma.truncation_radius(model)
    )
    sizes = np.fromiter((len(n) for n in neighbours), dtype=np.intp, count=subset.size)
    local = np.repeat(np.arange(subset.size), sizes)
    cols = np.fromiter(
        itertools.chain.from_iterable(neighbours), dtype=np.intp, count=int(sizes.sum())
    )
    rows = subset[local]
    distinct = rows != cols
    local, rows, cols = local[distinct], rows[distinct], cols[distinct]

    offsets = positions[rows] - positions[cols]
    distances = np.hypot(offsets[:, 0], offsets[:, 1])
    sensed = _detected(
        model.p_ap_w, model.sigma_w, model.pathloss_ap_ap, distances, model.mu, rng
    )
    blocking = sensed & (marks[cols] < marks[rows])
    return np.bincount(local[blocking], minlength=subset.size) == 0


def contention_outcome(
    field: PointField,
    model: ContentionModel,
    rng: np.random.Generator,
    extra_aps: Sequence[tuple[float, float, float]] = (),
) -> set[int]:
    """Indices of the APs that transmit.

    ``extra_aps`` are (x, y, mark) triples appended after the field's points.
    """
    positions, marks = field.positions, field.marks
    if extra_aps:
        extra = np.asarray(extra_aps, dtype=float).reshape(-1, 3)
        positions = np.vstack([positions, extra[:, :2]])
        marks = np.concatenate([marks, extra[:, 2]])
    mask = _transmitting_mask(positions, marks, model, rng)
    return {int(i) for i in np.flatnonzero(mask)}


def _distances_from(
    positions: NDArray[np.float64], point: tuple[float, float]
) -> NDArray[np.float64]:
    offsets = positions - np.asarray(point, dtype=float)
    return np.hypot(offsets[:, 0], offsets[:, 1])


def _summarize(
    name: str,
    outcomes: list[Outcome],
    seed: int,
    records: list[ReplicationRecord] | None,
) -> Estimate:
    values = [value for value, _, _ in outcomes]
    if records is not None:
        records.extend(
            ReplicationRecord(
                estimator=name,
                rep=rep,
                seed=seed,
                value=value,
                points=points,
                rejections=rejections,
            )
            for rep, (value, points, rejections) in enumerate(outcomes)
        )
    estimate = Estimate.from_samples(values)
    logger.info(
        "Monte Carlo estimate",
        extra={
            "estimator": name,
            "value": estimate.value,
            "stderr": estimate.stderr,
            "n": estimate.n,
            "rejections": sum(r for _, _, r in outcomes),
        },
    )
    return estimate


def _guard_extension(
    density_per_m2: float,
    half_width: float,
    extra_guard: float,
    rng: np.random.Generator,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """PPP points in the ring between the window and a wider square."""
    wide = sample_field(density_per_m2, half_width + extra_guard, rng)
    outside = np.any(np.abs(wide.positions) > half_width, axis=1)
    return wide.positions[outside], wide.marks[outside]


def _pt_replication(
    r: float,
    model: ContentionModel,
    half_width: float,
    extra_guard: float,
    rng: np.random.Generator,
) -> Outcome:
    field = sample_field(
        model.density_per_m2, half_width, rng, exclude=((r, 0.0), r)
    )
    mark = float(rng.uniform())
    positions, marks = field.positions, field.marks
    if extra_guard > 0:
        # Child stream, so the draws inside the window match the narrower run.
        ring, ring_marks = _guard_extension(
            model.density_per_m2, half_width, extra_guard, rng.spawn(1)[0]
        )
        positions = np.vstack([positions, ring])
        marks = np.concatenate([marks, ring_marks])
    distances = _distances_from(positions, (0.0, 0.0))
    blocked = _blocked(mark, marks, distances, model, rng)
    return (0.0 if blocked else 1.0), int(marks.shape[0]), 0


def estimate_pt(
    r: float,
    model: ContentionModel,
    n_reps: int,
    seed: int,
    workers: int | None = None,
    records: list[ReplicationRecord] | None = None,
    extra_guard_m: float = 0.0,
) -> Estimate:
    """Fraction of replications in which an AP with an empty B(client, r) transmits.

    The AP sits at the window centre and its client at (r, 0). ``extra_guard_m``
    widens the window for edge-effect checks without changing the draws
    inside the default window.
    """
    _check_reps(n_reps)
    if extra_guard_m < 0:
        raise ValidationError("Guard extension must be non-negative")
    half_width, _ = default_window(model)
    fn = partial(_pt_replication, r, model, half_width, extra_guard_m)
    return _summarize("pt", run_replications(fn, n_reps, seed, workers), seed, records)


def _q_replication(
    d: float,
    model: ContentionModel,
    half_width: float,
    rng: np.random.Generator,
) -> Outcome:
    other = (d, 0.0)
    for rejections in range(MAX_CONSECUTIVE_REJECTIONS + 1):
        field = sample_field(model.density_per_m2, half_width, rng)
        mark_0, mark_x = rng.uniform(size=2)
        to_0 = np.append(_distances_from(field.positions, (0.0, 0.0)), d)
        if _blocked(mark_0, np.append(field.marks, mark_x), to_0, model, rng):
            continue
        to_x = np.append(_distances_from(field.positions, other), d)
        blocked_x = _blocked(mark_x, np.append(field.marks, mark_0), to_x, model, rng)
        return (0.0 if blocked_x else 1.0), field.count, rejections
    raise RejectionLimitError(
        "Conditioning on the reference AP transmitting",
        MAX_CONSECUTIVE_REJECTIONS + 1,
        details={"distance_m": d},
    )


def estimate_q(
    d: float,
    model: ContentionModel,
    n_reps: int,
    seed: int,
    workers: int | None = None,
    records: list[ReplicationRecord] | None = None,
) -> Estimate:
    """Empirical q(d): how often the AP at (d, 0) transmits given the AP at 0 does."""
    _check_reps(n_reps)
    half_width, _ = default_window(model)
    fn = partial(_q_replication, d, model, half_width)
    return _summarize("q", run_replications(fn, n_reps, seed, workers), seed, records)


def _sinr(
    serving_distance: float,
    interferer_distances: NDArray[np.float64],
    model: SinrModel,
    rng: np.random.Generator,
) -> float:
    fading = FadingModel(mu=model.mu)
    pathloss = model.pathloss_ap_client
    serving_fade = propagation.sample_fading(fading, rng, 1)[0]
    signal = propagation.received_power(
        model.p_ap_w, propagation.path_gain(pathloss, serving_distance), serving_fade
    )
    fades = propagation.sample_fading(fading, rng, interferer_distances.shape[0])
    gains = np.asarray(propagation.path_gain(pathloss, interferer_distances))
    interference = float(
        np.sum(propagation.received_power(model.p_ap_w, gains, fades))
    )
    return float(signal) / (model.noise_power_w + interference)


def _interference_outcome(
    positions: NDArray[np.float64],
    marks: NDArray[np.float64],
    candidates: NDArray[np.intp],
    model: SinrModel,
    rng: np.random.Generator,
) -> NDArray[np.float64]:
    """Client distances of the ``candidates`` that win contention."""
    talking = _transmitting_mask(positions, marks, model.contention, rng, candidates)
    return _distances_from(positions[candidates[talking]], (0.0, 0.0))


def _sinr_replication(
    r: float,
    betas: NDArray[np.float64],
    model: SinrModel,
    half_width: float,
    guard: float,
    rng: np.random.Generator,
) -> tuple[NDArray[np.float64], int, int]:
    for rejections in range(MAX_CONSECUTIVE_REJECTIONS + 1):
        field = sample_field(
            model.density_per_m2, half_width, rng, guard, exclude=((0.0, 0.0), r)
        )
        positions = np.vstack([field.positions, [[r, 0.0]]])
        marks = np.append(field.marks, rng.uniform())
        serving = np.array([field.count])
        if not _transmitting_mask(positions, marks, model.contention, rng, serving)[0]:
            continue
        candidates = np.flatnonzero(field.inner_mask())
        interferers = _interference_outcome(positions, marks, candidates, model, rng)
        value = _sinr(r, interferers, model, rng)
        return (value > betas).astype(float), field.count, rejections
    raise RejectionLimitError(
        "Conditioning on the serving AP transmitting",
        MAX_CONSECUTIVE_REJECTIONS + 1,
        details={"r_m": r},
    )


def estimate_sinr_ccdf(
    r: float,
    beta_grid: ArrayLike,
    model: SinrModel,
    n_reps: int,
    seed: int,
    workers: int | None = None,
    records: list[ReplicationRecord] | None = None,
) -> EstimateCurve:
    """Empirical P(SINR > β) at a client served from distance r.

    The client sits at the window centre with its serving AP at (r, 0) and no
    other AP closer than r; replications where the serving AP loses
    contention are redrawn.
    """
    _check_reps(n_reps)
    betas = np.asarray(beta_grid, dtype=float)
    half_width, guard = default_window(model.contention)
    fn = partial(_sinr_replication, r, betas, model, half_width, guard)
    outcomes = run_replications(fn, n_reps, seed, workers)
    indicators = np.array([hits for hits, _, _ in outcomes])
    estimates = [
        Estimate.from_samples(indicators[:, k].tolist()) for k in range(betas.size)
    ]
    if records is not None:
        records.extend(
            ReplicationRecord(
                estimator="sinr_ccdf",
                rep=rep,
                seed=seed,
                value=float(hits.mean()),
                points=points,
                rejections=rejections,
            )
            for rep, (hits, points, rejections) in enumerate(outcomes)
        )
    logger.info(
        "Monte Carlo SINR CCDF",
        extra={"r_m": r, "n": n_reps, "rejections": sum(o[2] for o in outcomes)},
    )
    return EstimateCurve(
        name="sinr_ccdf",
        grid_name="beta",
        grid=betas.tolist(),
        estimates=estimates,
        meta={"r_m": f"{r:g}"},
    )


def _uplink_window(model: UplinkModel) -> float:
    reach = uplink.viability_range(model, REACH_LEVEL)
    return max(reach or 0.0, 10.0 * model.pathloss.d_min_m)


def _viable(
    distances: NDArray[np.float64], model: UplinkModel, rng: np.random.Generator
) -> NDArray[np.bool_]:
    return _detected(
        model.p_client_w, model.gamma_w, model.pathloss, distances, model.mu, rng
    )


def _starvation_replication(
    density_per_m2: float,
    model: UplinkModel,
    half_width: float,
    rng: np.random.Generator,
) -> Outcome:
    field = sample_field(density_per_m2, half_width, rng)
    distances = _distances_from(field.positions, (0.0, 0.0))
    starved = not np.any(_viable(distances, model, rng))
    return (1.0 if starved else 0.0), field.count, 0


def estimate_starvation(
    deployment: DeploymentModel,
    model: UplinkModel,
    n_reps: int,
    seed: int,
    workers: int | None = None,
    records: list[ReplicationRecord] | None = None,
) -> Estimate:
    """Fraction of client drops with no AP hearing the client's uplink."""
    _check_reps(n_reps)
    fn = partial(
        _starvation_replication,
        deployment.density_per_m2,
        model,
        _uplink_window(model),
    )
    outcomes = run_replications(fn, n_reps, seed, workers)
    return _summarize("starvation", outcomes, seed, records)


def _marginal_replication(
    density_per_m2: float,
    model: UplinkModel,
    half_width: float,
    rng: np.random.Generator,
) -> Outcome:
    field = sample_field(density_per_m2, half_width, rng)
    if field.count == 0:
        return 0.0, 0, 0
    distances = _distances_from(field.positions, (0.0, 0.0))
    nearest = distances[[int(np.argmin(distances))]]
    return float(_viable(nearest, model, rng)[0]), field.count, 0


def estimate_uplink_marginal(
    deployment: DeploymentModel,
    model: UplinkModel,
    n_reps: int,
    seed: int,
    workers: int | None = None,
    records: list[ReplicationRecord] | None = None,
) -> Estimate:
    """Fraction of client drops whose nearest AP hears the uplink."""
    _check_reps(n_reps)
    half_width = _uplink_window(model)
    if deployment.density_per_m2 > 0:
        half_width = max(half_width, 5.0 / math.sqrt(deployment.density_per_m2))
    fn = partial(_marginal_replication, deployment.density_per_m2, model, half_width)
    outcomes = run_replications(fn, n_reps, seed, workers)
    return _summarize("uplink_marginal", outcomes, seed, records)


def _throughput_replication(
    model: SinrModel,
    link: UplinkModel,
    half_width: float,
    guard: float,
    rng: np.random.Generator,
) -> Outcome:
    for rejections in range(MAX_CONSECUTIVE_REJECTIONS + 1):
        field = sample_field(model.density_per_m2, half_width, rng, guard)
        if field.count == 0:
            continue
        distances = _distances_from(field.positions, (0.0, 0.0))
        serving = int(np.argmin(distances))
        r = float(distances[serving])
        if not _viable(distances[[serving]], link, rng)[0]:
            continue
        positions, marks = field.positions, field.marks
        if not _transmitting_mask(
            positions, marks, model.contention, rng, np.array([serving])
        )[0]:
            return 0.0, field.count, rejections
        candidates = np.flatnonzero(field.inner_mask())
        candidates = candidates[candidates != serving]
        interferers = _interference_outcome(positions, marks, candidates, model, rng)
        rate = math.log2(1.0 + _sinr(r, interferers, model, rng))
        return rate, field.count, rejections
    raise RejectionLimitError(
        "Conditioning on a viable uplink to the nearest AP",
        MAX_CONSECUTIVE_REJECTIONS + 1,
    )


def estimate_ap_throughput(
    config: NetworkConfig,
    n_reps: int,
    seed: int,
    workers: int | None = None,
    records: list[ReplicationRecord] | None = None,
) -> Estimate:
    """Per-AP throughput in bps/Hz, with no analytic input.

    A client dropped at the window centre is served by its nearest AP when
    the uplink to that AP is viable (otherwise the drop is redrawn); the
    replication yields 1{AP transmits}·log₂(1 + SINR).
    """
    _check_reps(n_reps)
    model = sinr.sinr_model(config)
    half_width, guard = default_window(model.contention)
    fn = partial(
        _throughput_replication, model, uplink.uplink_model(config), half_width, guard
    )
    outcomes = run_replications(fn, n_reps, seed, workers)
    return _summarize("ap_throughput", outcomes, seed, records)


def write_replications_csv(records: Sequence[ReplicationRecord], path: Path) -> None:
    """Raw dump, one row per replication."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(RECORD_FIELDS)
        for record in records:
            writer.writerow(
                [
                    record.estimator,
                    record.rep,
                    record.seed,
                    format(record.value, ".17g"),
                    record.points,
                    record.rejections,
                ]
            )
    logger.info("Replications written", extra={"path": str(path), "rows": len(records)})
