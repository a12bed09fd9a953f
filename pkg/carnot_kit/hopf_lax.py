"""Metric Hopf-Lax solutions of u_t + Phi(|grad_H u|) = 0.

    u(t, p) = inf_q [ g(q) + t Phi*(d(p, q) / t) ]

The infimum is attained in a CC ball around p whose radius R solves
t Phi*(R / t) = osc(g) + slack. Candidates come from a scrambled Sobol
sequence in a box around the ball, filtered first by the homogeneous norm
and then by the exact CC distance, and the best ones are refined with
Nelder-Mead in group coordinates.
"""

import logging
import math
from typing import Callable
from typing import Sequence

import numpy as np
from scipy import optimize
from scipy.interpolate import PchipInterpolator
from scipy.interpolate import RegularGridInterpolator
from scipy.stats import qmc

from carnot_kit import settings
from carnot_kit.backends import DistanceBackend
from carnot_kit.backends import make_backend
from carnot_kit.data_models.group import GroupSpec
from carnot_kit.data_models.hopf_lax import HopfLaxOptions
from carnot_kit.data_models.hopf_lax import HopfLaxResult
from carnot_kit.data_models.hopf_lax import InitialDatum
from carnot_kit.data_models.hopf_lax import PhiSpec
from carnot_kit.enums import BackendEnum
from carnot_kit.enums import BuiltinGroupEnum
from carnot_kit.enums import InitialDatumKindEnum
from carnot_kit.enums import PhiKindEnum
from carnot_kit.exceptions import ConfigurationError
from carnot_kit.exceptions import DimensionMismatchError
from carnot_kit.exceptions import DomainError
from carnot_kit.exceptions import NonSmoothLocusError
from carnot_kit.fields import ScalarField
from carnot_kit.geodesics import fan_out
from carnot_kit.groups import check_point
from carnot_kit.groups import homogeneous_norm
from carnot_kit.groups import inverse
from carnot_kit.groups import multiply
from carnot_kit.probe import fd_horizontal_gradient
from carnot_kit.utils import FloatArray
from carnot_kit.utils import canonical_key

logger = logging.getLogger(__name__)

_CONJUGATE_GRID = 4097
_MAX_RADIUS = 1e12
_OUTSIDE_BALL = 1e300


def power_phi(alpha: float) -> PhiSpec:
    return PhiSpec(kind=PhiKindEnum.POWER, params={"alpha": alpha})


def quadratic_phi() -> PhiSpec:
    return PhiSpec(kind=PhiKindEnum.QUADRATIC)


def tabulated_phi(table: Sequence[tuple[float, float]]) -> PhiSpec:
    """Phi given by nodes (tau, Phi(tau)); it is +inf past the last node."""
    return PhiSpec(
        kind=PhiKindEnum.TABULATED, table=[tuple(row) for row in table]
    )


def _interpolant(phi: PhiSpec) -> PchipInterpolator:
    cached = phi.cached("interpolant")
    if cached is None:
        table = np.asarray(phi.table, dtype=np.float64)
        cached = PchipInterpolator(table[:, 0], table[:, 1], extrapolate=False)
        phi.store("interpolant", cached)
    return cached  # type: ignore[return-value]


def phi_value(phi: PhiSpec, tau: float) -> float:
    if tau < 0.0 or not math.isfinite(tau):
        raise DomainError(f"Phi is defined on [0, inf), got {tau}")
    if phi.kind == PhiKindEnum.QUADRATIC:
        return 0.5 * tau * tau
    if phi.kind == PhiKindEnum.POWER:
        return tau**phi.alpha / phi.alpha
    value = _interpolant(phi)(tau)
    return math.inf if np.isnan(value) else float(value)


def _tabulated_conjugate(phi: PhiSpec) -> Callable[[float], float]:
    """Grid sup of s tau - Phi(tau) polished by a golden-section search."""
    interpolant = _interpolant(phi)
    tau_max = float(phi.table[-1][0])  # type: ignore[index]
    grid = np.linspace(0.0, tau_max, _CONJUGATE_GRID)
    values = interpolant(grid)

    def negated_gain(tau: float, s: float) -> float:
        tau = min(max(tau, 0.0), tau_max)
        return float(interpolant(tau)) - s * tau

    def conjugate(s: float) -> float:
        gains = s * grid - values
        i = int(np.argmax(gains))
        best = float(gains[i])
        if 0 < i < len(grid) - 1 and gains[i] > max(
            gains[i - 1], gains[i + 1]
        ):
            polish = optimize.minimize_scalar(
                negated_gain,
                bracket=(grid[i - 1], grid[i], grid[i + 1]),
                args=(s,),
                method="golden",
            )
            best = max(best, -float(polish.fun))
        return max(best, 0.0)

    return conjugate


def legendre_conjugate(phi: PhiSpec, s: float) -> float:
    """Phi*(s) = sup over tau >= 0 of s tau - Phi(tau)."""
    if s < 0.0 or not math.isfinite(s):
        raise DomainError(f"the conjugate is taken at s >= 0, got {s}")
    if phi.kind == PhiKindEnum.QUADRATIC:
        return 0.5 * s * s
    if phi.kind == PhiKindEnum.POWER:
        beta = phi.beta
        return s**beta / beta
    conjugate = phi.cached("conjugate")
    if conjugate is None:
        conjugate = _tabulated_conjugate(phi)
        phi.store("conjugate", conjugate)
    return conjugate(s)  # type: ignore[operator, no-any-return]


def legendre_conjugate_many(
    phi: PhiSpec, s: Sequence[float] | FloatArray
) -> FloatArray:
    arr = np.asarray(s, dtype=np.float64)
    if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
        raise DomainError("the conjugate is taken at finite s >= 0")
    if phi.kind == PhiKindEnum.QUADRATIC:
        return 0.5 * arr * arr
    if phi.kind == PhiKindEnum.POWER:
        beta = phi.beta
        return np.asarray(arr**beta / beta, dtype=np.float64)
    flat = [legendre_conjugate(phi, float(v)) for v in arr.ravel()]
    return np.asarray(flat, dtype=np.float64).reshape(arr.shape)


def search_radius(phi: PhiSpec, t: float, budget: float) -> float:
    """Solves t Phi*(R / t) = budget for R by bisection."""
    if budget <= 0.0:
        raise DomainError(f"radius budget must be positive, got {budget}")

    def excess(radius: float) -> float:
        return t * legendre_conjugate(phi, radius / t) - budget

    high = max(t, 1.0)
    while excess(high) < 0.0:
        high *= 2.0
        if high > _MAX_RADIUS:
            raise ConfigurationError(
                "t Phi*(R/t) stays below the oscillation budget; "
                "Phi* is bounded and no search radius exists"
            )
    return float(optimize.bisect(excess, 0.0, high, xtol=1e-12))


def default_backend(spec: GroupSpec, workers: int = 1) -> DistanceBackend:
    """Exact distance on the Heisenberg group, shooting elsewhere."""
    if spec.name == BuiltinGroupEnum.HEISENBERG:
        return make_backend(BackendEnum.EXACT, spec, workers=workers)
    return make_backend(BackendEnum.SHOOTING, spec, workers=workers)


def _capped(values: FloatArray, cap: float | None) -> FloatArray:
    return values if cap is None else np.minimum(values, cap)


def datum_field(
    spec: GroupSpec, g: InitialDatum, dist: DistanceBackend | None = None
) -> ScalarField:
    """The initial datum g as a vectorised field on ``spec``."""
    backend = dist or default_backend(spec)
    params = g.params

    if g.kind == InitialDatumKindEnum.CONSTANT:
        value = params.value

        def constant_many(points: FloatArray) -> FloatArray:
            return np.full(points.shape[0], value)

        return ScalarField(
            spec, lambda p: value, f"const({value:g})", constant_many
        )

    if g.kind == InitialDatumKindEnum.TABLE:
        axes = [np.asarray(axis, dtype=np.float64) for axis in params.axes]
        if len(axes) != spec.n:
            raise ConfigurationError(
                f"a table datum on {spec.name} needs {spec.n} axes, "
                f"got {len(axes)}"
            )
        interpolator = RegularGridInterpolator(
            axes, np.asarray(params.values, dtype=np.float64)
        )
        low = np.array([axis[0] for axis in axes])
        high = np.array([axis[-1] for axis in axes])

        def table_many(points: FloatArray) -> FloatArray:
            return np.asarray(
                interpolator(np.clip(points, low, high)), dtype=np.float64
            )

        return ScalarField(
            spec,
            lambda p: float(table_many(p.reshape(1, -1))[0]),
            "table",
            table_many,
        )

    anchors = check_point(spec, g.anchors(spec.n)).reshape(-1, spec.n)

    def distance_many(points: FloatArray) -> FloatArray:
        columns = [
            backend.d0_many(multiply(spec, inverse(spec, anchor), points))
            for anchor in anchors
        ]
        return _capped(np.min(np.stack(columns), axis=0), params.cap)

    name = "dist" if g.kind == InitialDatumKindEnum.DISTANCE else "dist_S"
    if params.cap is not None:
        name = f"min({name},{params.cap:g})"
    return ScalarField(
        spec,
        lambda p: float(distance_many(p.reshape(1, -1))[0]),
        name,
        distance_many,
    )


def _check_step_two(spec: GroupSpec) -> None:
    if spec.step != 2 or not spec.is_bilinear:
        raise ConfigurationError(
            f"Hopf-Lax solutions are only supported on step-2 groups, "
            f"not {spec.name!r}"
        )


def _ball_offsets(
    spec: GroupSpec,
    radius: float,
    backend: DistanceBackend,
    options: HopfLaxOptions,
) -> tuple[FloatArray, FloatArray]:
    """Sobol offsets w with d0(w) <= radius, and their lengths d0(w).

    Along a curve of length R from the identity the vertical coordinates
    stay below C0 R^2 / 2, which bounds the sampling box and the
    homogeneous-norm pre-filter.
    """
    c0 = spec.c0 or 0.0
    half_widths = np.where(spec.weights == 1.0, radius, 0.5 * c0 * radius**2)
    gauge_bound = radius * (1.0 + 0.25 * c0 * c0) ** 0.25
    sampler = qmc.Sobol(d=spec.n, scramble=True, seed=options.seed)
    m = max(1, math.ceil(math.log2(options.samples)))
    cube = sampler.random_base2(m)[: options.samples]
    offsets = (2.0 * cube - 1.0) * half_widths
    gauge = np.asarray(homogeneous_norm(spec, offsets))
    offsets = offsets[gauge <= gauge_bound * (1.0 + 1e-12)]
    if len(offsets) == 0:
        return np.zeros((0, spec.n)), np.zeros(0)
    lengths = backend.d0_many(offsets)
    inside = lengths <= radius
    return offsets[inside], lengths[inside]


def _ranked(
    values: FloatArray, points: FloatArray, spec: GroupSpec
) -> list[int]:
    """Indices by value, then smaller |q|_G, then lexicographic q."""
    norms = np.atleast_1d(homogeneous_norm(spec, points))
    return sorted(
        range(len(values)),
        key=lambda i: (
            float(values[i]),
            float(norms[i]),
            canonical_key(points[i]),
        ),
    )


def _refine(
    objective: Callable[[FloatArray], float],
    seeds: list[FloatArray],
    scales: FloatArray,
    options: HopfLaxOptions,
) -> list[tuple[float, FloatArray, int]]:
    def run(w0: FloatArray) -> tuple[float, FloatArray, int]:
        simplex = np.vstack([w0, w0 + np.diag(scales)])
        result = optimize.minimize(
            objective,
            w0,
            method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "xatol": 1e-10,
                "fatol": 1e-14,
                "maxfev": options.max_refine_evaluations,
                "adaptive": True,
            },
        )
        w = np.asarray(result.x, dtype=np.float64)
        return float(objective(w)), w, int(result.nfev)

    return fan_out(run, seeds, options.workers)


def _radius_budget(
    g: InitialDatum, phi: PhiSpec, g_p: float, slack: float
) -> float:
    inf, sup = g.bounds
    if sup is not None:
        return sup - inf + slack
    if phi.kind != PhiKindEnum.QUADRATIC:
        raise ConfigurationError(
            "unbounded initial data need a quadratic Phi"
        )
    return max(g_p - inf, 0.0) + slack


def _minimize_in_ball(
    spec: GroupSpec,
    p: FloatArray,
    radius: float,
    cost: Callable[[FloatArray, FloatArray], FloatArray],
    backend: DistanceBackend,
    options: HopfLaxOptions,
    extra: FloatArray,
) -> tuple[float, FloatArray, int, float]:
    """Minimizes cost(q, d(p, q)) over sampled q = p.w plus ``extra``.

    Returns (value, argmin, evaluations, refinement gap).
    """
    offsets, lengths = _ball_offsets(spec, radius, backend, options)
    parts = [np.zeros((1, spec.n)), offsets]
    part_lengths = [np.zeros(1), lengths]
    if len(extra):
        extra_offsets = multiply(spec, inverse(spec, p), extra)
        parts.insert(1, extra_offsets)
        part_lengths.insert(1, backend.d0_many(extra_offsets))
    offsets = np.concatenate(parts)
    lengths = np.concatenate(part_lengths)
    candidates = multiply(spec, p, offsets)
    values = cost(candidates, lengths)
    if not np.all(np.isfinite(values)):
        raise DomainError("the Hopf-Lax objective is not finite")
    order = _ranked(values, candidates, spec)
    best = order[0]
    sampled_value = float(values[best])
    value, argmin = sampled_value, candidates[best]
    evaluations = len(values)

    if options.refine_seeds == 0:
        return value, argmin, evaluations, 0.0

    seeds: list[FloatArray] = []
    seen: set[tuple[float, ...]] = set()
    for i in order:
        key = canonical_key(offsets[i])
        if key not in seen:
            seen.add(key)
            seeds.append(offsets[i])
        if len(seeds) == options.refine_seeds:
            break

    def objective(w: FloatArray) -> float:
        q = multiply(spec, p, w).reshape(1, -1)
        length = backend.d0_many(w.reshape(1, -1))
        result = float(cost(q, length)[0])
        if not math.isfinite(result):
            raise DomainError("the Hopf-Lax objective is not finite")
        return result

    scales = 0.05 * np.power(radius, spec.weights)
    refined = _refine(objective, seeds, scales, options)
    for refined_value, w, nfev in refined:
        evaluations += nfev
        q = multiply(spec, p, w)
        if (refined_value, canonical_key(q)) < (value, canonical_key(argmin)):
            value, argmin = refined_value, q
    return value, argmin, evaluations, max(sampled_value - value, 0.0)


def hopf_lax_value(
    spec: GroupSpec,
    g: InitialDatum,
    phi: PhiSpec,
    t: float,
    p: Sequence[float] | FloatArray,
    dist: DistanceBackend | None = None,
    options: HopfLaxOptions | None = None,
) -> HopfLaxResult:
    """u(t, p) by sampling the minimizing ball and refining the best seeds.

    The candidate set always contains q = p and the anchors of ``g``, so
    the value never exceeds g(p).
    """
    _check_step_two(spec)
    if not (t > 0.0 and math.isfinite(t)):
        raise DomainError(f"time must be positive, got {t}")
    opts = options or HopfLaxOptions()
    backend = dist or default_backend(spec, opts.workers)
    p_arr = check_point(spec, p)
    if p_arr.ndim != 1:
        raise DimensionMismatchError(
            "hopf_lax_value takes a single point", layer=1
        )
    g_field = datum_field(spec, g, backend)
    g_p = g_field(p_arr)
    if not math.isfinite(g_p):
        raise DomainError(f"initial datum is not finite at {p_arr.tolist()}")
    budget = _radius_budget(g, phi, g_p, opts.radius_slack)
    radius = search_radius(phi, t, budget)
    logger.debug(
        "hopf-lax t=%g p=%s: budget %g, radius %g",
        t,
        p_arr.tolist(),
        budget,
        radius,
    )

    def cost(q: FloatArray, lengths: FloatArray) -> FloatArray:
        return g_field.many(q) + t * legendre_conjugate_many(phi, lengths / t)

    anchors = check_point(spec, g.anchors(spec.n)).reshape(-1, spec.n)
    value, argmin, evaluations, gap = _minimize_in_ball(
        spec, p_arr, radius, cost, backend, opts, anchors
    )
    return HopfLaxResult(
        value=value,
        argmin=argmin.tolist(),
        search_radius=radius,
        evaluations=evaluations,
        refinement_gap=gap,
        t=t,
        p=p_arr.tolist(),
    )


def dense_oracle_options(seed: int = 0) -> HopfLaxOptions:
    """Brute-force reference: many samples and no refinement."""
    return HopfLaxOptions(
        samples=settings.DENSE_ORACLE_SAMPLES, refine_seeds=0, seed=seed
    )


def hopf_lax_field(
    spec: GroupSpec,
    g: InitialDatum,
    phi: PhiSpec,
    t: float,
    dist: DistanceBackend | None = None,
    options: HopfLaxOptions | None = None,
) -> ScalarField:
    """u(t, .) as a field; the pinned sampler seed makes it deterministic."""
    _check_step_two(spec)
    opts = options or HopfLaxOptions()
    backend = dist or default_backend(spec, opts.workers)

    def evaluate(p: FloatArray) -> float:
        return hopf_lax_value(spec, g, phi, t, p, backend, opts).value

    return ScalarField(spec, evaluate, f"u[t={t:g}]")


def ball_minimum(
    spec: GroupSpec,
    g: InitialDatum,
    t: float,
    p: Sequence[float] | FloatArray,
    dist: DistanceBackend | None = None,
    options: HopfLaxOptions | None = None,
) -> HopfLaxResult:
    """inf of g over the closed ball B_CC(p, t).

    This is the optimal-control solution for Phi(tau) = tau, whose
    conjugate is the indicator of [0, 1].
    """
    _check_step_two(spec)
    if not (t > 0.0 and math.isfinite(t)):
        raise DomainError(f"radius must be positive, got {t}")
    opts = options or HopfLaxOptions()
    backend = dist or default_backend(spec, opts.workers)
    p_arr = check_point(spec, p)
    g_field = datum_field(spec, g, backend)

    anchors = check_point(spec, g.anchors(spec.n)).reshape(-1, spec.n)
    if len(anchors):
        reach = backend.d0_many(multiply(spec, inverse(spec, p_arr), anchors))
        anchors = anchors[reach <= t]

    def cost(q: FloatArray, lengths: FloatArray) -> FloatArray:
        return np.where(lengths <= t, g_field.many(q), _OUTSIDE_BALL)

    value, argmin, evaluations, gap = _minimize_in_ball(
        spec, p_arr, t, cost, backend, opts, anchors
    )
    return HopfLaxResult(
        value=value,
        argmin=argmin.tolist(),
        search_radius=t,
        evaluations=evaluations,
        refinement_gap=gap,
        t=t,
        p=p_arr.tolist(),
    )


def dist_to_set(
    spec: GroupSpec,
    S: Sequence[Sequence[float]] | FloatArray,
    p: Sequence[float] | FloatArray,
    dist: DistanceBackend | None = None,
) -> float:
    """min over q in S of d(p, q) = d0(q^-1 . p)."""
    cloud = np.asarray(S, dtype=np.float64)
    if cloud.size == 0:
        raise DomainError("distance to an empty set is undefined")
    cloud = check_point(spec, cloud).reshape(-1, spec.n)
    backend = dist or default_backend(spec)
    p_arr = check_point(spec, p)
    offsets = multiply(spec, inverse(spec, cloud), p_arr)
    return float(np.min(backend.d0_many(offsets)))


def dist_to_set_field(
    spec: GroupSpec,
    S: Sequence[Sequence[float]] | FloatArray,
    dist: DistanceBackend | None = None,
    squared: bool = False,
) -> ScalarField:
    cloud = np.asarray(S, dtype=np.float64)
    if cloud.size == 0:
        raise DomainError("distance to an empty set is undefined")
    cloud = check_point(spec, cloud).reshape(-1, spec.n)
    backend = dist or default_backend(spec)
    power = 2.0 if squared else 1.0

    def evaluate_many(points: FloatArray) -> FloatArray:
        columns = [
            backend.d0_many(multiply(spec, inverse(spec, q), points))
            for q in cloud
        ]
        return np.min(np.stack(columns), axis=0) ** power

    return ScalarField(
        spec,
        lambda p: float(evaluate_many(p.reshape(1, -1))[0]),
        "dist_S^2" if squared else "dist_S",
        evaluate_many,
    )


def eikonal_residual(
    f: ScalarField,
    p: Sequence[float] | FloatArray,
    step: float = 1e-5,
    exclude: Callable[[FloatArray], bool] | None = None,
) -> float:
    """| |grad_H f(p)| - 1 | with a central-difference gradient."""
    p_arr = check_point(f.spec, p)
    if exclude is not None and exclude(p_arr):
        raise NonSmoothLocusError(
            f"{p_arr.tolist()} lies on an excluded non-smooth locus"
        )
    gradient = fd_horizontal_gradient(f, p_arr, step)
    return abs(float(np.linalg.norm(gradient)) - 1.0)
