"""Horizontal second differences and semiconcavity scans.

A function u is h-semiconcave with constant C when

    u(p.h) + u(p.h^-1) - 2 u(p) <= C |h|^2

for horizontal h. The scan measures the left hand side divided by |h|^2
over a grid, a ladder of step sizes and a set of directions, and reads a
verdict off the per-level suprema.
"""

import logging
import math
from typing import Sequence

import numpy as np

from carnot_kit.data_models.probe import LimitEstimate
from carnot_kit.data_models.probe import ProbeConfig
from carnot_kit.data_models.probe import ProbeReport
from carnot_kit.data_models.probe import ProbeSample
from carnot_kit.data_models.probe import ScaleSupremum
from carnot_kit.enums import VerdictEnum
from carnot_kit.exceptions import CarnotKitException
from carnot_kit.exceptions import ConfigurationError
from carnot_kit.fields import ScalarField
from carnot_kit.geodesics import fan_out
from carnot_kit.groups import check_horizontal
from carnot_kit.groups import check_point
from carnot_kit.groups import embed_horizontal
from carnot_kit.groups import left_translate
from carnot_kit.heisenberg import HEISENBERG
from carnot_kit.heisenberg import sphere_points
from carnot_kit.settings import DEFAULT_LADDER
from carnot_kit.utils import FloatArray
from carnot_kit.utils import canonical_key
from carnot_kit.utils import unit_directions

logger = logging.getLogger(__name__)


def _displaced(
    f: ScalarField, p: FloatArray, h: FloatArray, euclidean: bool
) -> tuple[FloatArray, FloatArray]:
    if euclidean:
        if not f.spec.is_abelian:
            raise ConfigurationError(
                "euclidean displacements are only defined for abelian specs"
            )
        step = embed_horizontal(f.spec, h)
        return p + step, p - step
    return (
        left_translate(f.spec, p, h),
        left_translate(f.spec, p, h, -1.0),
    )


def second_diff(
    f: ScalarField,
    p: Sequence[float] | FloatArray,
    h: Sequence[float] | FloatArray,
    euclidean: bool = False,
) -> float:
    """u(p.h) + u(p.h^-1) - 2 u(p) with group multiplication."""
    p_arr = check_point(f.spec, p)
    h_arr = check_horizontal(f.spec, h)
    forward, backward = _displaced(f, p_arr, h_arr, euclidean)
    return f(forward) + f(backward) - 2.0 * f(p_arr)


def _evaluate_points(
    f: ScalarField, points: FloatArray, workers: int
) -> tuple[FloatArray, list[CarnotKitException]]:
    if f.vectorised:
        try:
            return f.many(points), []
        except CarnotKitException:
            logger.debug("batched evaluation failed, retrying point-wise")
    errors: list[CarnotKitException] = []

    def safe(p: FloatArray) -> float:
        try:
            return f(p)
        except CarnotKitException as error:
            errors.append(error)
            return math.nan

    values = fan_out(safe, list(points), workers)
    return np.asarray(values, dtype=np.float64), errors


def verdict_from_sups(
    sups: Sequence[float], stabilization: float, blowup_growth: float
) -> VerdictEnum:
    """Blowup when every level at least multiplies the previous sup by
    ``blowup_growth``; bounded when the last two sups agree to
    ``stabilization``; inconclusive otherwise."""
    values = [float(s) for s in sups]
    if all(v > 0 for v in values) and all(
        b >= blowup_growth * a for a, b in zip(values, values[1:])
    ):
        return VerdictEnum.BLOWUP
    previous, last = values[-2], values[-1]
    if not (math.isfinite(previous) and math.isfinite(last)):
        return VerdictEnum.INCONCLUSIVE
    if abs(last - previous) <= stabilization * max(
        abs(previous), abs(last)
    ) + 1e-8:
        return VerdictEnum.BOUNDED
    return VerdictEnum.INCONCLUSIVE


def semiconcavity_scan(
    f: ScalarField,
    grid: Sequence[Sequence[float]] | FloatArray,
    ladder: Sequence[float] | None = None,
    dirs: Sequence[Sequence[float]] | None = None,
    config: ProbeConfig | None = None,
    label: str | None = None,
) -> ProbeReport:
    """Second-difference quotients of ``f`` over grid x ladder x dirs.

    Without ``dirs`` every point gets the coordinate axes of the first
    layer plus ``config.random_directions`` random unit directions.
    """
    cfg = config or ProbeConfig()
    if ladder is not None:
        cfg = ProbeConfig.model_validate(
            {**cfg.model_dump(), "ladder": list(ladder)}
        )
    levels = list(cfg.ladder)
    points = check_point(f.spec, grid).reshape(-1, f.spec.n)
    rng = np.random.default_rng(cfg.seed)
    fixed_dirs: list[FloatArray] | None = None
    if dirs is not None:
        if len(dirs) == 0:
            raise ConfigurationError("the direction set is empty")
        fixed_dirs = [check_horizontal(f.spec, d) for d in dirs]
        for d in fixed_dirs:
            if abs(float(np.linalg.norm(d)) - 1.0) > 1e-12:
                raise ConfigurationError(f"direction {d} is not a unit vector")

    tasks: list[tuple[FloatArray, FloatArray, float]] = []
    for p in points:
        if fixed_dirs is not None:
            point_dirs = fixed_dirs
        else:
            point_dirs = unit_directions(
                f.spec.n1, cfg.random_directions, rng
            )
        for d in point_dirs:
            for level in levels:
                tasks.append((p, d, level))

    plus = np.empty((len(tasks), f.spec.n))
    minus = np.empty((len(tasks), f.spec.n))
    for i, (p, d, level) in enumerate(tasks):
        plus[i], minus[i] = _displaced(f, p, level * d, cfg.euclidean)
    stacked = np.concatenate([points, plus, minus])
    values, errors = _evaluate_points(f, stacked, cfg.workers)
    base = values[: len(points)]
    index_of = {canonical_key(p): i for i, p in enumerate(points)}
    offset = len(points)
    count = len(tasks)

    samples: list[ProbeSample] = []
    failures = 0
    for i, (p, d, level) in enumerate(tasks):
        center = base[index_of[canonical_key(p)]]
        diff = values[offset + i] + values[offset + count + i] - 2.0 * center
        if not math.isfinite(diff):
            failures += 1
            continue
        samples.append(
            ProbeSample(
                p=p.tolist(),
                h=(level * d).tolist(),
                level=level,
                second_diff=diff,
                quotient2=diff / level**2,
                quotient1=diff / level,
            )
        )
    if failures:
        logger.warning(
            "%d of %d second differences of %s failed",
            failures,
            count,
            f.name,
        )
    if failures > cfg.failure_fraction * count:
        if errors:
            raise errors[0]
        raise CarnotKitException(
            f"{failures} of {count} second differences are not finite"
        )

    samples.sort(key=lambda s: (-s.level, s.p, s.h))
    per_scale_sup = []
    for level in levels:
        quotients = [s.quotient2 for s in samples if s.level == level]
        per_scale_sup.append(
            ScaleSupremum(
                level=level,
                sup=max(quotients) if quotients else math.nan,
                count=len(quotients),
            )
        )
    verdict = verdict_from_sups(
        [entry.sup for entry in per_scale_sup],
        cfg.stabilization,
        cfg.blowup_growth,
    )
    logger.info(
        "scan of %s over %d points: sups %s -> %s",
        f.name,
        len(points),
        [round(entry.sup, 6) for entry in per_scale_sup],
        verdict,
    )
    return ProbeReport(
        field=f.name,
        group=f.spec.name,
        samples=samples,
        per_scale_sup=per_scale_sup,
        verdict=verdict,
        failures=failures,
        label=label,
        config=cfg,
    )


def first_order_limit(
    f: ScalarField,
    p: Sequence[float] | FloatArray,
    direction: Sequence[float] | FloatArray,
    ladder: Sequence[float] | None = None,
) -> LimitEstimate:
    """Richardson-extrapolated limit of second_diff / |h| as h -> 0.

    The error estimate is the change between the last two extrapolants.
    A non-monotone quotient sequence marks the estimate inconclusive.
    """
    levels = ProbeConfig(ladder=list(ladder or DEFAULT_LADDER)).ladder
    d = check_horizontal(f.spec, direction)
    quotients = [second_diff(f, p, level * d) / level for level in levels]
    extrapolants = [
        (h0 * q1 - h1 * q0) / (h0 - h1)
        for h0, h1, q0, q1 in zip(
            levels, levels[1:], quotients, quotients[1:]
        )
    ]
    steps = np.diff(quotients)
    monotone = bool(np.all(steps >= 0) or np.all(steps <= 0))
    value = extrapolants[-1]
    error = abs(extrapolants[-1] - extrapolants[-2])
    if not monotone:
        logger.info("first order quotients of %s are not monotone", f.name)
    return LimitEstimate(
        value=value,
        error=error,
        quotients=quotients,
        levels=levels,
        inconclusive=not monotone,
    )


def fd_horizontal_hessian(
    f: ScalarField, p: Sequence[float] | FloatArray, step: float
) -> FloatArray:
    """Horizontal Hessian by central differences along p.(tau h).

    Diagonal entries come from second_diff along the axes, off-diagonal
    ones from polarization over (e_i + e_j)/sqrt(2) and (e_i - e_j)/sqrt(2).
    """
    m = f.spec.n1
    eye = np.eye(m)
    hess = np.zeros((m, m))
    scale = step * step
    for i in range(m):
        hess[i, i] = second_diff(f, p, step * eye[i]) / scale
    for i in range(m):
        for j in range(i + 1, m):
            plus = (eye[i] + eye[j]) / math.sqrt(2.0)
            minus = (eye[i] - eye[j]) / math.sqrt(2.0)
            q_plus = second_diff(f, p, step * plus) / scale
            q_minus = second_diff(f, p, step * minus) / scale
            hess[i, j] = hess[j, i] = 0.5 * (q_plus - q_minus)
    return hess


def fd_horizontal_gradient(
    f: ScalarField, p: Sequence[float] | FloatArray, step: float
) -> FloatArray:
    """Central differences (f(p.(s e_i)) - f(p.(-s e_i))) / 2s."""
    p_arr = check_point(f.spec, p)
    grad = np.zeros(f.spec.n1)
    for i, e in enumerate(np.eye(f.spec.n1)):
        forward, backward = _displaced(f, p_arr, step * e, False)
        grad[i] = (f(forward) - f(backward)) / (2.0 * step)
    return grad


def euclidean_sphere_estimate(
    f: ScalarField,
    points: Sequence[Sequence[float]] | FloatArray,
    radii: Sequence[float],
    random_directions: int = 8,
    seed: int = 0,
) -> float:
    """Sup of (f(p+v) + f(p-v) - 2 f(p)) / |v|^2 over Euclidean v.

    Used on points of the unit CC sphere, where the distance is smooth
    enough for a Euclidean semiconcavity bound.
    """
    arr = check_point(f.spec, points).reshape(-1, f.spec.n)
    rng = np.random.default_rng(seed)
    best = -math.inf
    for p in arr:
        for d in unit_directions(f.spec.n, random_directions, rng):
            for r in radii:
                v = r * d
                value = (f(p + v) + f(p - v) - 2.0 * f(p)) / (r * r)
                best = max(best, value)
    return best


def probe_grid(
    count_axis: int = 20,
    count_sphere: int = 40,
    count_bulk: int = 100,
    seed: int = 0,
) -> FloatArray:
    """Heisenberg grid: identity, center axis, unit sphere and bulk points."""
    rng = np.random.default_rng(seed)
    identity = np.zeros((1, HEISENBERG.n))
    heights = np.linspace(-2.0, 2.0, count_axis + 1)
    heights = heights[heights != 0.0][:count_axis]
    axis = np.stack(
        [np.zeros_like(heights), np.zeros_like(heights), heights], axis=-1
    )
    sphere = sphere_points(count_sphere, seed=seed)
    bulk = rng.uniform(-1.0, 1.0, size=(count_bulk, HEISENBERG.n))
    return np.concatenate([identity, axis, sphere, bulk])
