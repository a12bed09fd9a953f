"""Self-verification suites.

``core`` checks the group algebra and the mu machinery, ``heisenberg``
cross-checks the closed-form distance against the numerical solvers and
the derivative formulas, and ``paper`` runs the semiconcavity, blow-up and
Hopf-Lax experiments. Every check returns ``CheckResult`` records whose
expected values carry a provenance tag.
"""

import logging
import math
from typing import Callable

import numpy as np

from carnot_kit import settings
from carnot_kit.backends import ExactHeisenbergBackend
from carnot_kit.backends import OracleBackend
from carnot_kit.data_models.geodesics import OracleOptions
from carnot_kit.data_models.geodesics import ShootingOptions
from carnot_kit.data_models.hopf_lax import DatumParams
from carnot_kit.data_models.hopf_lax import HopfLaxOptions
from carnot_kit.data_models.hopf_lax import InitialDatum
from carnot_kit.data_models.probe import ProbeConfig
from carnot_kit.data_models.probe import PsiProfile
from carnot_kit.data_models.report import CheckResult
from carnot_kit.data_models.report import ExperimentConfig
from carnot_kit.data_models.report import Report
from carnot_kit.enums import CheckStatusEnum
from carnot_kit.enums import InitialDatumKindEnum
from carnot_kit.enums import ProvenanceEnum
from carnot_kit.enums import SuiteEnum
from carnot_kit.enums import VerdictEnum
from carnot_kit.exceptions import CarnotKitException
from carnot_kit.exceptions import ConfigurationError
from carnot_kit.fields import compose_with_psi
from carnot_kit.fields import d0_field
from carnot_kit.fields import d0_squared_field
from carnot_kit.geodesics import control_oracle_distance
from carnot_kit.geodesics import flow_extremal
from carnot_kit.geodesics import shoot_distance
from carnot_kit.groups import correction
from carnot_kit.groups import dilate
from carnot_kit.groups import get_group
from carnot_kit.groups import inverse
from carnot_kit.groups import multiply
from carnot_kit.groups import registered_groups
from carnot_kit.heisenberg import HEISENBERG
from carnot_kit.heisenberg import d0_exact
from carnot_kit.heisenberg import d0_squared_exact
from carnot_kit.heisenberg import derivatives
from carnot_kit.heisenberg import mu
from carnot_kit.heisenberg import mu_inverse
from carnot_kit.heisenberg import norm_equivalence_constant
from carnot_kit.heisenberg import sphere_points
from carnot_kit.hopf_lax import dense_oracle_options
from carnot_kit.hopf_lax import dist_to_set_field
from carnot_kit.hopf_lax import eikonal_residual
from carnot_kit.hopf_lax import hopf_lax_field
from carnot_kit.hopf_lax import hopf_lax_value
from carnot_kit.hopf_lax import quadratic_phi
from carnot_kit.probe import euclidean_sphere_estimate
from carnot_kit.probe import fd_horizontal_hessian
from carnot_kit.probe import first_order_limit
from carnot_kit.probe import semiconcavity_scan
from carnot_kit.probe import probe_grid
from carnot_kit.utils import FloatArray
from carnot_kit.utils import get_current_time_iso

logger = logging.getLogger(__name__)

CheckFunction = Callable[[int, int], list[CheckResult]]


def _result(
    name: str,
    passed: bool,
    provenance: ProvenanceEnum,
    measured: float | str | None = None,
    expected: float | str | None = None,
    tolerance: float | None = None,
    detail: str | None = None,
) -> CheckResult:
    return CheckResult(
        name=name,
        status=CheckStatusEnum.PASS if passed else CheckStatusEnum.FAIL,
        measured=measured,
        expected=expected,
        tolerance=tolerance,
        provenance=provenance,
        detail=detail,
    )


def _random_points(
    rng: np.random.Generator, count: int, n: int, scale: float = 1.0
) -> FloatArray:
    return scale * rng.uniform(-1.0, 1.0, size=(count, n))


def _off_axis_points(
    rng: np.random.Generator, count: int, low: float, high: float
) -> FloatArray:
    """Heisenberg points with d0 in [low, high], away from the z axis."""
    points: list[FloatArray] = []
    while len(points) < count:
        raw = sphere_points(1, seed=int(rng.integers(2**31)))[0]
        if raw[0] ** 2 + raw[1] ** 2 < 0.05:
            continue
        r = rng.uniform(low, high)
        points.append(dilate(HEISENBERG, r, raw))
    return np.array(points)


# core


def check_group_axioms(seed: int, workers: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    for spec in registered_groups():
        p, q, r = (_random_points(rng, 100, spec.n) for _ in range(3))
        left = multiply(spec, multiply(spec, p, q), r)
        right = multiply(spec, p, multiply(spec, q, r))
        identity = np.zeros(spec.n)
        errors = [
            np.max(np.abs(left - right)),
            np.max(np.abs(multiply(spec, p, identity) - p)),
            np.max(np.abs(multiply(spec, p, inverse(spec, p)))),
        ]
        measured = float(max(errors))
        results.append(
            _result(
                f"group_axioms[{spec.name}]",
                measured <= 1e-12,
                ProvenanceEnum.TRIVIAL,
                measured,
                0.0,
                1e-12,
            )
        )
    return results


def check_dilation_automorphism(seed: int, workers: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    for spec in registered_groups():
        p, q = (_random_points(rng, 100, spec.n) for _ in range(2))
        worst = 0.0
        for r in (0.1, 0.5, 2.0, 10.0):
            lhs = dilate(spec, r, multiply(spec, p, q))
            rhs = multiply(spec, dilate(spec, r, p), dilate(spec, r, q))
            scale = np.maximum(np.abs(lhs), 1.0)
            worst = max(worst, float(np.max(np.abs(lhs - rhs) / scale)))
        results.append(
            _result(
                f"dilation_automorphism[{spec.name}]",
                worst <= 1e-12,
                ProvenanceEnum.TRIVIAL,
                worst,
                0.0,
                1e-12,
            )
        )
    return results


def check_correction_bound(seed: int, workers: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    for spec in registered_groups():
        if spec.c0 is None:
            continue
        p, q = (_random_points(rng, 1000, spec.n, 3.0) for _ in range(2))
        size = np.linalg.norm(correction(spec, p, q), axis=-1)
        bound = np.linalg.norm(p[:, : spec.n1], axis=-1) * np.linalg.norm(
            q[:, : spec.n1], axis=-1
        )
        ratio = float(np.max(size / bound))
        results.append(
            _result(
                f"correction_bound[{spec.name}]",
                ratio <= spec.c0 + 1e-12,
                ProvenanceEnum.PAPER,
                ratio,
                spec.c0,
                1e-12,
                "sup |R(p,q)| / (|p1| |q1|) against C0",
            )
        )
    return results


def check_mu_round_trip(seed: int, workers: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    values = np.concatenate(
        [
            rng.uniform(-1e3, 1e3, size=200),
            rng.uniform(-1.0, 1.0, size=200),
            np.geomspace(1e-12, 1e3, 100),
        ]
    )
    worst = 0.0
    for v in values:
        back = mu(mu_inverse(float(v)).value)
        worst = max(worst, abs(back - v) / max(1.0, abs(v)))
    return [
        _result(
            "mu_round_trip",
            worst <= 1e-12,
            ProvenanceEnum.DERIVED,
            worst,
            0.0,
            1e-12,
        )
    ]


def check_mu_seam(seed: int, workers: int) -> list[CheckResult]:
    s = settings.MU_SERIES_THRESHOLD
    below = mu(math.nextafter(s, 0.0))
    above = mu(s)
    jump = abs(above - below) / abs(above)
    return [
        _result(
            "mu_series_seam",
            jump <= 1e-14,
            ProvenanceEnum.DERIVED,
            jump,
            0.0,
            1e-14,
        )
    ]


# heisenberg


def check_exact_values(seed: int, workers: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    axis_error = abs(d0_squared_exact((0.0, 0.0, 1.0)) - 4.0 * math.pi)
    plane = rng.uniform(-3.0, 3.0, size=(100, 2))
    plane_error = max(
        abs(d0_squared_exact((x, y, 0.0)) - (x * x + y * y))
        for x, y in plane
    )
    return [
        _result(
            "d0sq_axis",
            axis_error <= 1e-10,
            ProvenanceEnum.PAPER,
            axis_error,
            4.0 * math.pi,
            1e-10,
        ),
        _result(
            "d0sq_plane",
            plane_error <= 1e-12,
            ProvenanceEnum.PAPER,
            plane_error,
            0.0,
            1e-12,
        ),
    ]


def check_exact_vs_shooting(seed: int, workers: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    points = _off_axis_points(rng, 50, 0.2, 2.0)
    options = ShootingOptions(seed=seed, workers=workers)
    worst = 0.0
    for p in points:
        exact = d0_squared_exact(p)
        shot = shoot_distance(HEISENBERG, p, options).distance ** 2
        worst = max(worst, abs(shot - exact) / max(1.0, exact))
    return [
        _result(
            "exact_vs_shooting",
            worst <= 1e-4,
            ProvenanceEnum.DERIVED,
            worst,
            0.0,
            1e-4,
        )
    ]


def check_exact_vs_oracle(seed: int, workers: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    points = _off_axis_points(rng, 20, 0.2, 2.0)
    options = OracleOptions(seed=seed, workers=workers)
    worst = 0.0
    for p in points:
        exact = d0_exact(p)
        oracle = control_oracle_distance(HEISENBERG, p, options=options)
        worst = max(worst, abs(oracle - exact) / exact)
    return [
        _result(
            "exact_vs_oracle",
            worst <= 1e-2,
            ProvenanceEnum.DERIVED,
            worst,
            0.0,
            1e-2,
        )
    ]


def check_homogeneity(seed: int, workers: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    backend = ExactHeisenbergBackend(HEISENBERG)
    p, q, g = (_random_points(rng, 50, 3, 2.0) for _ in range(3))
    radii = rng.uniform(0.1, 10.0, size=50)
    homogeneity = 0.0
    invariance = 0.0
    for pi, qi, gi, r in zip(p, q, g, radii):
        d = backend.distance(pi, qi)
        scaled = backend.distance(
            dilate(HEISENBERG, r, pi), dilate(HEISENBERG, r, qi)
        )
        moved = backend.distance(
            multiply(HEISENBERG, gi, pi), multiply(HEISENBERG, gi, qi)
        )
        homogeneity = max(homogeneity, abs(scaled - r * d) / (r * d))
        invariance = max(invariance, abs(moved - d) / d)
    return [
        _result(
            "dilation_homogeneity",
            homogeneity <= 1e-6,
            ProvenanceEnum.PAPER,
            homogeneity,
            0.0,
            1e-6,
        ),
        _result(
            "left_invariance",
            invariance <= 1e-6,
            ProvenanceEnum.TRIVIAL,
            invariance,
            0.0,
            1e-6,
        ),
    ]


def _smooth_points(rng: np.random.Generator, count: int) -> FloatArray:
    xy = rng.uniform(0.5, 1.5, size=(count, 2)) * rng.choice(
        [-1.0, 1.0], size=(count, 2)
    )
    z = rng.uniform(-0.5, 0.5, size=(count, 1))
    return np.hstack([xy, z])


def check_closed_form_vs_fd(seed: int, workers: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    field = d0_squared_field()
    worst = 0.0
    for p in _smooth_points(rng, 50):
        formula = derivatives(p).horizontal_hess_array()
        numeric = fd_horizontal_hessian(field, p, 1e-4)
        scale = max(1.0, float(np.max(np.abs(formula))))
        worst = max(worst, float(np.max(np.abs(formula - numeric))) / scale)
    return [
        _result(
            "closed_form_hessian_vs_fd",
            worst <= 1e-4,
            ProvenanceEnum.DERIVED,
            worst,
            0.0,
            1e-4,
        )
    ]


def check_eikonal_d0(seed: int, workers: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    points = _smooth_points(rng, 20)
    identity_gap = 0.0
    for p in points:
        grad = np.linalg.norm(derivatives(p).horizontal_grad)
        identity_gap = max(identity_gap, abs(grad - 2.0 * d0_exact(p)))
    field = d0_field(ExactHeisenbergBackend(HEISENBERG))
    residual = max(eikonal_residual(field, p, 1e-5) for p in points)
    return [
        _result(
            "horizontal_gradient_identity",
            identity_gap <= 1e-8,
            ProvenanceEnum.DERIVED,
            identity_gap,
            0.0,
            1e-8,
        ),
        _result(
            "eikonal_d0",
            residual <= 1e-4,
            ProvenanceEnum.PAPER,
            residual,
            0.0,
            1e-4,
        ),
    ]


def check_norm_equivalence(seed: int, workers: int) -> list[CheckResult]:
    constant = norm_equivalence_constant(10_000, seed)
    return [
        _result(
            "norm_equivalence_constant",
            math.isfinite(constant) and constant >= 1.0,
            ProvenanceEnum.PAPER,
            constant,
            "finite C >= 1",
        )
    ]


def check_flow_drift(seed: int, workers: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal(3)
    path = flow_extremal(HEISENBERG, xi, steps=1024)
    return [
        _result(
            "hamiltonian_drift",
            path.hamiltonian_drift <= 1e-8,
            ProvenanceEnum.DERIVED,
            path.hamiltonian_drift,
            0.0,
            1e-8,
        ),
        _result(
            "vertical_covector_drift",
            path.vertical_drift <= 1e-12,
            ProvenanceEnum.DERIVED,
            path.vertical_drift,
            0.0,
            1e-12,
        ),
    ]


# experiments


def check_d0_squared_scan(seed: int, workers: int) -> list[CheckResult]:
    config = ProbeConfig(seed=seed, workers=workers)
    report = semiconcavity_scan(
        d0_squared_field(), probe_grid(seed=seed), config=config
    )
    sups = [entry.sup for entry in report.per_scale_sup]
    drift = abs(sups[-1] - sups[-2]) / abs(sups[-2])
    return [
        _result(
            "d0sq_semiconcave",
            report.verdict == VerdictEnum.BOUNDED and drift <= 0.10,
            ProvenanceEnum.PAPER,
            report.verdict.value,
            VerdictEnum.BOUNDED.value,
            0.10,
            f"per-level sups {sups}",
        )
    ]


def check_first_order_limit(seed: int, workers: int) -> list[CheckResult]:
    field = d0_squared_field()
    results = []
    for height in (1.0, 4.0):
        expected = -4.0 * math.sqrt(4.0 * math.pi * height)
        estimate = first_order_limit(field, (0.0, 0.0, height), (1.0, 0.0))
        gap = abs(estimate.value - expected) / abs(expected)
        results.append(
            _result(
                f"first_order_limit[z={height:g}]",
                gap <= 0.01,
                ProvenanceEnum.PAPER,
                estimate.value,
                expected,
                0.01,
            )
        )
    report = semiconcavity_scan(
        field,
        [(0.0, 0.0, 1.0)],
        ladder=(1e-1, 3e-2, 1e-2),
        dirs=[(1.0, 0.0)],
    )
    quotient = report.sup_at(1e-2)
    results.append(
        _result(
            "no_semiconvexity_on_axis",
            quotient <= -1e3,
            ProvenanceEnum.PAPER,
            quotient,
            -1e3,
        )
    )
    return results


def check_engel_blowup(seed: int, workers: int) -> list[CheckResult]:
    engel = get_group("engel")
    backend = OracleBackend(
        engel,
        OracleOptions(
            segments=settings.ENGEL_ORACLE_SEGMENTS, seed=seed, workers=workers
        ),
    )
    config = ProbeConfig(
        ladder=list(settings.ENGEL_LADDER),
        blowup_growth=settings.ENGEL_BLOWUP_GROWTH,
        seed=seed,
    )
    report = semiconcavity_scan(
        d0_field(backend),
        [(0.0, 1.0, 0.0, 0.0)],
        dirs=[(1.0, 0.0)],
        config=config,
    )
    sups = [entry.sup for entry in report.per_scale_sup]
    ratios = [b / a if a > 0 else math.nan for a, b in zip(sups, sups[1:])]
    increasing = all(s > 0 for s in sups) and all(
        b > a for a, b in zip(sups, sups[1:])
    )
    return [
        _result(
            "engel_blowup",
            report.verdict == VerdictEnum.BLOWUP and increasing,
            ProvenanceEnum.PAPER,
            report.verdict.value,
            VerdictEnum.BLOWUP.value,
            detail=(
                f"quotient2 per level {sups}; ratios {ratios};"
                f" growth {settings.ENGEL_BLOWUP_GROWTH:g}"
            ),
        )
    ]


def check_identity_corner(seed: int, workers: int) -> list[CheckResult]:
    """d0 itself blows up at the identity, where its cone points up."""
    field = d0_field(ExactHeisenbergBackend(HEISENBERG))
    grid = [(0.0, 0.0, 0.0), (0.0, 0.0, 1.0), (0.05, 0.0, 1.0)]
    report = semiconcavity_scan(
        field, grid, config=ProbeConfig(seed=seed, random_directions=2)
    )
    return [
        _result(
            "d0_blowup_at_identity",
            report.verdict == VerdictEnum.BLOWUP,
            ProvenanceEnum.PAPER,
            report.verdict.value,
            VerdictEnum.BLOWUP.value,
        )
    ]


def check_compositions(seed: int, workers: int) -> list[CheckResult]:
    grid = probe_grid(seed=seed)
    field = d0_squared_field()
    report = semiconcavity_scan(
        field, grid, config=ProbeConfig(seed=seed, workers=workers)
    )
    constant = report.estimated_constant
    smooth = [p for p in grid if p[0] ** 2 + p[1] ** 2 > 1e-2]
    trace = max(
        float(np.trace(fd_horizontal_hessian(field, p, 1e-4)))
        for p in smooth
    )
    cubed = compose_with_psi(
        PsiProfile(exponent=3.0), d0_field(ExactHeisenbergBackend(HEISENBERG))
    )
    cubed_report = semiconcavity_scan(
        cubed, grid, config=ProbeConfig(seed=seed, workers=workers)
    )
    sphere_estimate = euclidean_sphere_estimate(
        field, sphere_points(20, seed=seed), (1e-2, 1e-3), seed=seed
    )
    return [
        _result(
            "sub_laplacian_bound",
            trace <= 2.0 * constant * (1.0 + 1e-3),
            ProvenanceEnum.PAPER,
            trace,
            2.0 * constant,
            1e-3,
        ),
        _result(
            "psi_cubed_composition",
            cubed_report.verdict == VerdictEnum.BOUNDED,
            ProvenanceEnum.PAPER,
            cubed_report.verdict.value,
            VerdictEnum.BOUNDED.value,
        ),
        _result(
            "sphere_euclidean_semiconcavity",
            math.isfinite(sphere_estimate),
            ProvenanceEnum.PAPER,
            sphere_estimate,
            "finite",
        ),
    ]


def capped_distance_datum(cap: float = 1.0) -> InitialDatum:
    return InitialDatum(
        kind=InitialDatumKindEnum.DISTANCE, params=DatumParams(cap=cap)
    )


def _hopf_lax_grid(seed: int) -> FloatArray:
    """Points with d0 well below 1, where u(t, p) = d0(p)^2 / 2t for t >= 1."""
    rng = np.random.default_rng(seed)
    sphere = dilate(HEISENBERG, 0.4, sphere_points(6, seed=seed))
    bulk = rng.uniform(-0.2, 0.2, size=(6, 3))
    bulk[:, 2] *= 0.05
    return np.vstack([sphere, bulk])


def check_hopf_lax(seed: int, workers: int) -> list[CheckResult]:
    datum = capped_distance_datum()
    phi = quadratic_phi()
    options = HopfLaxOptions(
        samples=512,
        refine_seeds=1,
        max_refine_evaluations=100,
        seed=seed,
        workers=1,
    )
    config = ProbeConfig(
        ladder=[1e-1, 1e-2, 1e-3],
        random_directions=2,
        seed=seed,
        workers=workers,
    )
    grid = _hopf_lax_grid(seed)
    sups = {}
    verdicts = {}
    for t in (1.0, 2.0):
        field = hopf_lax_field(HEISENBERG, datum, phi, t, options=options)
        report = semiconcavity_scan(field, grid, config=config)
        sups[t] = report.estimated_constant
        verdicts[t] = report.verdict
    ratio = sups[2.0] / sups[1.0]

    rng = np.random.default_rng(seed + 1)
    points = _random_points(rng, 20, 3, 0.8)
    points[:, 2] *= 0.125
    dense = options.model_copy(update={"samples": 2048, "refine_seeds": 4})
    g = d0_field(ExactHeisenbergBackend(HEISENBERG))
    above_datum = 0.0
    monotone_gap = 0.0
    for p in points:
        values = [
            hopf_lax_value(HEISENBERG, datum, phi, t, p, options=dense).value
            for t in (0.25, 0.5, 1.0, 2.0)
        ]
        above_datum = max(above_datum, max(values) - min(g(p), 1.0))
        steps = np.diff(values)
        monotone_gap = max(monotone_gap, float(np.max(steps)))

    axis = (0.0, 0.0, 1.0)
    sampled = hopf_lax_value(
        HEISENBERG, datum, phi, 0.5, axis, options=dense
    ).value
    reference = hopf_lax_value(
        HEISENBERG, datum, phi, 0.5, axis, options=dense_oracle_options(seed)
    ).value
    return [
        _result(
            "hopf_lax_semiconcave",
            all(v == VerdictEnum.BOUNDED for v in verdicts.values()),
            ProvenanceEnum.PAPER,
            ",".join(v.value for v in verdicts.values()),
            VerdictEnum.BOUNDED.value,
        ),
        _result(
            "hopf_lax_constant_ratio",
            0.375 <= ratio <= 0.625,
            ProvenanceEnum.PAPER,
            ratio,
            0.5,
            0.125,
        ),
        _result(
            "hopf_lax_below_datum",
            above_datum <= 1e-12,
            ProvenanceEnum.TRIVIAL,
            above_datum,
            0.0,
            1e-12,
        ),
        _result(
            "hopf_lax_time_monotone",
            monotone_gap <= 1e-4,
            ProvenanceEnum.DERIVED,
            monotone_gap,
            0.0,
            1e-4,
        ),
        _result(
            "hopf_lax_vs_dense_oracle",
            abs(sampled - reference) <= 1e-2,
            ProvenanceEnum.DERIVED,
            sampled,
            reference,
            1e-2,
        ),
    ]


TWO_POINT_SET = ((1.0, 0.0, 0.0), (-1.0, 0.0, 0.0))


def check_distance_to_set(seed: int, workers: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    backend = ExactHeisenbergBackend(HEISENBERG)
    field = dist_to_set_field(HEISENBERG, TWO_POINT_SET, backend)
    points = np.column_stack(
        [
            rng.uniform(0.3, 0.8, 20),
            rng.uniform(0.2, 0.6, 20) * rng.choice([-1.0, 1.0], 20),
            rng.uniform(-0.3, 0.3, 20),
        ]
    )
    residual = max(
        eikonal_residual(
            field, p, 1e-5, exclude=lambda q: abs(float(q[0])) < 1e-3
        )
        for p in points
    )
    squared = dist_to_set_field(
        HEISENBERG, TWO_POINT_SET, backend, squared=True
    )
    report = semiconcavity_scan(
        squared,
        _random_points(rng, 50, 3),
        config=ProbeConfig(seed=seed, workers=workers),
    )
    return [
        _result(
            "eikonal_dist_to_set",
            residual <= 1e-4,
            ProvenanceEnum.PAPER,
            residual,
            0.0,
            1e-4,
        ),
        _result(
            "dist_to_set_squared_semiconcave",
            report.verdict == VerdictEnum.BOUNDED,
            ProvenanceEnum.PAPER,
            report.verdict.value,
            VerdictEnum.BOUNDED.value,
        ),
    ]


SUITES: dict[SuiteEnum, list[CheckFunction]] = {
    SuiteEnum.CORE: [
        check_group_axioms,
        check_dilation_automorphism,
        check_correction_bound,
        check_mu_round_trip,
        check_mu_seam,
    ],
    SuiteEnum.HEISENBERG: [
        check_exact_values,
        check_exact_vs_shooting,
        check_exact_vs_oracle,
        check_homogeneity,
        check_closed_form_vs_fd,
        check_eikonal_d0,
        check_norm_equivalence,
        check_flow_drift,
    ],
    SuiteEnum.PAPER: [
        check_d0_squared_scan,
        check_first_order_limit,
        check_engel_blowup,
        check_identity_corner,
        check_compositions,
        check_hopf_lax,
        check_distance_to_set,
    ],
}


def run_suite(
    suite: SuiteEnum | str, seed: int = 0, workers: int = 1
) -> list[CheckResult]:
    try:
        checks = SUITES[SuiteEnum(suite)]
    except ValueError:
        raise ConfigurationError(f"unknown suite {suite!r}") from None
    results: list[CheckResult] = []
    for check in checks:
        logger.info("running %s", check.__name__)
        try:
            results.extend(check(seed, workers))
        except CarnotKitException as error:
            logger.warning("%s raised %r", check.__name__, error)
            results.append(
                CheckResult(
                    name=check.__name__.removeprefix("check_"),
                    status=CheckStatusEnum.FAIL,
                    provenance=ProvenanceEnum.DERIVED,
                    detail=f"{type(error).__name__}: {error}",
                )
            )
    return results


def verify(
    suite: SuiteEnum | str,
    seed: int = 0,
    workers: int = 1,
    config: ExperimentConfig | None = None,
) -> Report:
    echo = config or ExperimentConfig(
        command="verify", seed=seed, params={"suite": str(suite)}
    )
    return Report(
        generated_at=get_current_time_iso(),
        config=echo,
        checks=run_suite(suite, seed, workers),
    )
