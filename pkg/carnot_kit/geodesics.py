"""Normal extremals, the endpoint map and numerical CC distances.

Distances are computed two independent ways:

* ``shoot_distance`` searches initial covectors whose normal extremal ends
  at the target and keeps the shortest one;
* ``control_oracle_distance`` minimizes the energy of piecewise-constant
  controls under the endpoint constraint.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable
from typing import Sequence
from typing import TypeVar

import numpy as np
from scipy import linalg
from scipy import optimize
from scipy.stats import qmc

from carnot_kit import settings
from carnot_kit.data_models.geodesics import ExtremalPath
from carnot_kit.data_models.geodesics import OracleOptions
from carnot_kit.data_models.geodesics import OracleResult
from carnot_kit.data_models.geodesics import ShootingOptions
from carnot_kit.data_models.geodesics import ShootingResult
from carnot_kit.data_models.group import GroupSpec
from carnot_kit.enums import EndpointMethodEnum
from carnot_kit.enums import LawTypeEnum
from carnot_kit.exceptions import DimensionMismatchError
from carnot_kit.exceptions import DivergenceError
from carnot_kit.exceptions import DomainError
from carnot_kit.exceptions import OracleFailureError
from carnot_kit.exceptions import UnreachedTargetError
from carnot_kit.export import extremal_path_to_csv
from carnot_kit.groups import check_point
from carnot_kit.groups import embed_horizontal
from carnot_kit.groups import homogeneous_norm
from carnot_kit.groups import horizontal_frame
from carnot_kit.groups import horizontal_frame_jacobian
from carnot_kit.groups import multiply
from carnot_kit.utils import FloatArray

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

_NON_FINITE_RESIDUAL = 1e150


def fan_out(
    func: Callable[[T], R], items: Sequence[T], workers: int
) -> list[R]:
    """Maps ``func`` over ``items`` keeping the input order."""
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))


def hamiltonian(
    spec: GroupSpec,
    p: Sequence[float] | FloatArray,
    xi: Sequence[float] | FloatArray,
) -> float:
    """H(p, xi) = 1/2 sum_j <xi, X_j(p)>^2."""
    frame = horizontal_frame(spec, p)
    controls = frame.T @ check_point(spec, xi)
    return 0.5 * float(controls @ controls)


def _hamiltonian_rhs(
    spec: GroupSpec, p: FloatArray, xi: FloatArray
) -> tuple[FloatArray, FloatArray]:
    frame = horizontal_frame(spec, p)
    controls = frame.T @ xi
    jac = horizontal_frame_jacobian(spec, p)
    p_dot = frame @ controls
    xi_dot = -np.einsum("j,jra,r->a", controls, jac, xi)
    return p_dot, xi_dot


def flow_extremal(
    spec: GroupSpec,
    xi0: Sequence[float] | FloatArray,
    steps: int = settings.DEFAULT_FLOW_STEPS,
) -> ExtremalPath:
    """Integrates the normal extremal from the identity on [0, 1] with RK4."""
    if steps < settings.MIN_FLOW_STEPS:
        raise DomainError(
            f"flow_extremal needs at least {settings.MIN_FLOW_STEPS} steps, "
            f"got {steps}"
        )
    xi = check_point(spec, xi0).astype(np.float64).copy()
    p = np.zeros(spec.n)
    dt = 1.0 / steps
    times = [0.0]
    points = [p.tolist()]
    covectors = [xi.tolist()]
    h0 = hamiltonian(spec, p, xi)
    drift = 0.0
    n1 = spec.n1
    xi2_start = xi[n1:].copy()
    vertical_drift = 0.0
    for i in range(steps):
        k1p, k1x = _hamiltonian_rhs(spec, p, xi)
        k2p, k2x = _hamiltonian_rhs(
            spec, p + 0.5 * dt * k1p, xi + 0.5 * dt * k1x
        )
        k3p, k3x = _hamiltonian_rhs(
            spec, p + 0.5 * dt * k2p, xi + 0.5 * dt * k2x
        )
        k4p, k4x = _hamiltonian_rhs(spec, p + dt * k3p, xi + dt * k3x)
        p = p + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        xi = xi + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        t = (i + 1) * dt
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(xi))):
            raise DivergenceError(
                f"extremal left the finite range at t={t:g}", time=t
            )
        drift = max(drift, abs(hamiltonian(spec, p, xi) - h0))
        if spec.is_bilinear and spec.n > n1:
            vertical_drift = max(
                vertical_drift, float(np.max(np.abs(xi[n1:] - xi2_start)))
            )
        times.append(t)
        points.append(p.tolist())
        covectors.append(xi.tolist())
    return ExtremalPath(
        times=times,
        points=points,
        covectors=covectors,
        energy=h0,
        hamiltonian_drift=drift,
        vertical_drift=vertical_drift,
    )


def _bilinear_terminal(spec: GroupSpec, xi: FloatArray) -> FloatArray:
    # With u = xi1 - L p1 and L = sum_k lambda_k B_k the flow reduces to
    # u' = -2 L u, p1' = u, p2_k' = p1^T B_k u.
    n1 = spec.n1
    xi1 = xi[:n1]
    if spec.n == n1:
        return xi1.copy()
    lam = xi[n1:]
    generator = np.einsum("k,kij->ij", lam, spec.matrices)
    size = 2 * n1
    flow = np.zeros((size, size))
    flow[:n1, :n1] = -2.0 * generator
    flow[n1:, :n1] = np.eye(n1)
    w0 = np.concatenate([xi1, np.zeros(n1)])
    out = np.empty(spec.n)
    exp_flow = None
    for k, b in enumerate(spec.matrices):
        weight = np.zeros((size, size))
        weight[n1:, :n1] = b
        block = np.zeros((2 * size, 2 * size))
        block[:size, :size] = -flow.T
        block[:size, size:] = weight
        block[size:, size:] = flow
        # Van Loan: the integral of e^(F^T t) W e^(F t) over [0, 1]
        expm = linalg.expm(block)
        exp_flow = expm[size:, size:]
        gram = exp_flow.T @ expm[:size, size:]
        out[n1 + k] = float(w0 @ gram @ w0)
    assert exp_flow is not None
    out[:n1] = (exp_flow @ w0)[n1:]
    return out


def _engel_rhs(
    state: tuple[float, ...],
) -> tuple[float, ...]:
    x, y, z, s, a, b, c, d = state
    g = x * y / 12.0 + 0.5 * z
    u1 = a - 0.5 * y * c - g * d
    u2 = b + 0.5 * x * c + x * x / 12.0 * d
    return (
        u1,
        u2,
        -0.5 * y * u1 + 0.5 * x * u2,
        -g * u1 + x * x / 12.0 * u2,
        u1 * y / 12.0 * d - u2 * (0.5 * c + x / 6.0 * d),
        u1 * (0.5 * c + x / 12.0 * d),
        0.5 * u1 * d,
        0.0,
    )


def _engel_terminal(xi: FloatArray, steps: int) -> FloatArray:
    state = (0.0, 0.0, 0.0, 0.0) + tuple(float(v) for v in xi)
    dt = 1.0 / steps
    half = 0.5 * dt
    for _ in range(steps):
        k1 = _engel_rhs(state)
        k2 = _engel_rhs(tuple(s + half * k for s, k in zip(state, k1)))
        k3 = _engel_rhs(tuple(s + half * k for s, k in zip(state, k2)))
        k4 = _engel_rhs(tuple(s + dt * k for s, k in zip(state, k3)))
        state = tuple(
            s + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d)
            for s, a, b, c, d in zip(state, k1, k2, k3, k4)
        )
    return np.array(state[:4])


def terminal_point(
    spec: GroupSpec,
    xi: Sequence[float] | FloatArray,
    steps: int = settings.DEFAULT_FLOW_STEPS,
) -> FloatArray:
    """Endpoint at t = 1 of the normal extremal starting at the identity.

    Step-2 groups use the closed-form linear flow; Engel integrates with
    ``steps`` RK4 steps.
    """
    xi_arr = check_point(spec, xi)
    if spec.law.type == LawTypeEnum.ENGEL:
        return _engel_terminal(xi_arr, steps)
    return _bilinear_terminal(spec, xi_arr)


def _check_controls(spec: GroupSpec, controls: object) -> FloatArray:
    arr = np.asarray(controls, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != spec.n1:
        raise DimensionMismatchError(
            f"controls must have shape (M, {spec.n1}), got {arr.shape}",
            layer=1,
        )
    if arr.shape[0] < 1:
        raise DomainError("controls need at least one interval")
    return arr


def endpoint_map(
    spec: GroupSpec,
    controls: Sequence[Sequence[float]] | FloatArray,
    p0: Sequence[float] | FloatArray | None = None,
    method: EndpointMethodEnum | str = EndpointMethodEnum.EXACT,
    substeps: int = settings.ENGEL_SUBSTEPS,
) -> FloatArray:
    """Terminal point of the horizontal curve driven by ``controls``.

    ``controls`` holds one constant control per interval of equal length
    on [0, 1]. The exact method multiplies by the one-parameter subgroup
    ``(u dt, 0, ...)`` on each interval; the rk4 method integrates the
    vector fields with ``substeps`` steps per interval.
    """
    u = _check_controls(spec, controls)
    p = (
        np.zeros(spec.n)
        if p0 is None
        else check_point(spec, p0).astype(np.float64)
    )
    dt = 1.0 / u.shape[0]
    if EndpointMethodEnum(method) == EndpointMethodEnum.EXACT:
        for control in u:
            p = multiply(spec, p, embed_horizontal(spec, control * dt))
        return p
    h = dt / substeps
    for control in u:
        for _ in range(substeps):
            k1 = horizontal_frame(spec, p) @ control
            k2 = horizontal_frame(spec, p + 0.5 * h * k1) @ control
            k3 = horizontal_frame(spec, p + 0.5 * h * k2) @ control
            k4 = horizontal_frame(spec, p + h * k3) @ control
            p = p + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return p


def _covector_key(spec: GroupSpec, xi: FloatArray) -> tuple[float, ...]:
    return (
        float(np.linalg.norm(xi[: spec.n1])),
        float(np.linalg.norm(xi)),
        *(float(v) for v in xi),
    )


def _covector_starts(
    spec: GroupSpec, q: FloatArray, radius: float, count: int, seed: int
) -> list[FloatArray]:
    """Straight-line covector followed by Sobol points of the ball."""
    n = spec.n
    straight = np.zeros(n)
    straight[: spec.n1] = q[: spec.n1]
    starts = [straight]
    sampler = qmc.Sobol(d=n, scramble=True, seed=seed)
    m = max(1, math.ceil(math.log2(4 * count)))
    cube = 2.0 * sampler.random_base2(m) - 1.0
    inside = cube[np.linalg.norm(cube, axis=1) <= 1.0]
    starts.extend(radius * row for row in inside[: max(0, count - 1)])
    return starts


def _solve_start(
    spec: GroupSpec, q: FloatArray, xi0: FloatArray, opts: ShootingOptions
) -> tuple[FloatArray, float]:
    def residual(xi: FloatArray) -> FloatArray:
        r = terminal_point(spec, xi, opts.flow_steps) - q
        if not np.all(np.isfinite(r)):
            return np.full(spec.n, _NON_FINITE_RESIDUAL)
        return r

    def objective(xi: FloatArray) -> float:
        r = residual(xi)
        return 0.5 * float(r @ r)

    simplex = optimize.minimize(
        objective,
        xi0,
        method="Nelder-Mead",
        options={
            "xatol": 1e-12,
            "fatol": 1e-24,
            "maxfev": opts.max_evaluations,
            "adaptive": True,
        },
    )
    best_xi = np.asarray(simplex.x, dtype=np.float64)
    best_res = float(np.linalg.norm(residual(best_xi)))
    polish = optimize.root(
        residual, best_xi, method="hybr", options={"xtol": 1e-14}
    )
    polished = np.asarray(polish.x, dtype=np.float64)
    polished_res = float(np.linalg.norm(residual(polished)))
    if polished_res < best_res:
        best_xi, best_res = polished, polished_res
    return best_xi, best_res


def shoot_distance(
    spec: GroupSpec,
    q: Sequence[float] | FloatArray,
    options: ShootingOptions | None = None,
) -> ShootingResult:
    """CC distance from the identity to ``q`` by multi-start shooting."""
    opts = options or ShootingOptions()
    target = check_point(spec, q).astype(np.float64)
    if not np.any(target):
        return ShootingResult(
            distance=0.0,
            best_covector=[0.0] * spec.n,
            terminal_residual=0.0,
            starts_tried=0,
            search_radius=1.0,
        )
    gap = opts.acceptance_gap * (1.0 + float(np.linalg.norm(target)))
    radius = 2.0 * spec.n * float(homogeneous_norm(spec, target))
    best: tuple[FloatArray, float] | None = None
    best_residual = math.inf
    previous: float | None = None
    tried = 0
    converged = 0
    doublings = 0
    for round_index in range(opts.max_doublings + 1):
        doublings = round_index
        starts = _covector_starts(
            spec, target, radius, opts.starts, opts.seed + round_index
        )
        outcomes = fan_out(
            lambda xi0: _solve_start(spec, target, xi0, opts),
            starts,
            opts.workers,
        )
        tried += len(starts)
        for xi, res in outcomes:
            best_residual = min(best_residual, res)
            if res > gap:
                continue
            converged += 1
            if best is None or _covector_key(spec, xi) < _covector_key(
                spec, best[0]
            ):
                best = (xi, res)
        current = (
            None
            if best is None
            else float(np.linalg.norm(best[0][: spec.n1]))
        )
        logger.debug(
            "shooting round %d radius=%g converged=%d best=%s",
            round_index,
            radius,
            converged,
            current,
        )
        if (
            current is not None
            and previous is not None
            and abs(current - previous)
            <= opts.stabilization_rtol * max(current, 1e-300)
        ):
            break
        previous = current
        if round_index < opts.max_doublings:
            radius *= 2.0
    if best is None:
        raise UnreachedTargetError(
            f"no covector reached {target.tolist()} within {gap:g} "
            f"after {tried} starts",
            best_residual=best_residual,
        )
    xi, res = best
    distance = float(np.linalg.norm(xi[: spec.n1]))
    logger.info(
        "shooting distance to %s: %.12g (residual %.3g, %d/%d starts)",
        target.tolist(),
        distance,
        res,
        converged,
        tried,
    )
    return ShootingResult(
        distance=distance,
        best_covector=xi.tolist(),
        terminal_residual=res,
        starts_tried=tried,
        search_radius=radius,
        converged_starts=converged,
        doublings=doublings,
    )


def _chain_endpoint_bilinear(spec: GroupSpec, v: FloatArray) -> FloatArray:
    # p2_k = sum_{i<j} v_i^T B_k v_j
    out = np.empty(spec.n)
    total = v.sum(axis=0)
    out[: spec.n1] = total
    if spec.n > spec.n1:
        before = np.cumsum(v, axis=0) - v
        out[spec.n1 :] = np.einsum("mi,kij,mj->k", before, spec.matrices, v)
    return out


def _vjp_bilinear(
    spec: GroupSpec, v: FloatArray, weight: FloatArray
) -> FloatArray:
    grad = np.broadcast_to(weight[: spec.n1], v.shape).copy()
    if spec.n > spec.n1:
        before = np.cumsum(v, axis=0) - v
        after = v.sum(axis=0) - before - v
        mixed = np.einsum("k,kij->ij", weight[spec.n1 :], spec.matrices)
        grad += (after - before) @ mixed.T
    return grad


def _engel_chain(v: FloatArray) -> list[tuple[float, float, float, float]]:
    x = y = z = s = 0.0
    chain = [(x, y, z, s)]
    for a, b in v.tolist():
        w = x * b - a * y
        s = s - 0.5 * a * z + (x - a) * w / 12.0
        z = z + 0.5 * w
        x, y = x + a, y + b
        chain.append((x, y, z, s))
    return chain


def _vjp_engel(v: FloatArray, weight: FloatArray) -> FloatArray:
    chain = _engel_chain(v)
    gx, gy, gz, gs = (float(c) for c in weight)
    grad = np.empty_like(v)
    for i in range(v.shape[0] - 1, -1, -1):
        x, y, z, _ = chain[i]
        a, b = float(v[i, 0]), float(v[i, 1])
        w = x * b - a * y
        d = x - a
        ds_da = -0.5 * z - (w + d * y) / 12.0
        grad[i, 0] = gx - 0.5 * y * gz + ds_da * gs
        grad[i, 1] = gy + 0.5 * x * gz + d * x / 12.0 * gs
        gx, gy, gz = (
            gx + 0.5 * b * gz + (w + d * b) / 12.0 * gs,
            gy - 0.5 * a * gz - d * a / 12.0 * gs,
            gz - 0.5 * a * gs,
        )
    return grad


def chain_endpoint(spec: GroupSpec, v: FloatArray) -> FloatArray:
    """Product of the horizontal displacements ``v_0 . v_1 ... v_{M-1}``."""
    if spec.law.type == LawTypeEnum.ENGEL:
        return np.array(_engel_chain(v)[-1])
    return _chain_endpoint_bilinear(spec, v)


def chain_vjp(
    spec: GroupSpec, v: FloatArray, weight: FloatArray
) -> FloatArray:
    """Gradient of ``weight . chain_endpoint(v)`` with respect to ``v``."""
    if spec.law.type == LawTypeEnum.ENGEL:
        return _vjp_engel(v, weight)
    return _vjp_bilinear(spec, v, weight)


def _augmented_energy(
    flat: FloatArray,
    spec: GroupSpec,
    target: FloatArray,
    segments: int,
    multiplier: FloatArray,
    penalty: float,
) -> tuple[float, FloatArray]:
    """Energy plus the augmented-Lagrangian endpoint term, with gradient."""
    v = flat.reshape(segments, spec.n1)
    c = chain_endpoint(spec, v) - target
    value = (
        segments * float(np.sum(v * v))
        + float(multiplier @ c)
        + 0.5 * penalty * float(c @ c)
    )
    grad = 2.0 * segments * v + chain_vjp(spec, v, multiplier + penalty * c)
    return value, grad.ravel()


def _oracle_restart(
    spec: GroupSpec,
    target: FloatArray,
    v0: FloatArray,
    opts: OracleOptions,
) -> tuple[FloatArray, float]:
    segments = v0.shape[0]
    multiplier = np.zeros(spec.n)
    penalty = opts.penalty_start
    x = v0.ravel()
    previous = math.inf
    norm = math.inf
    for outer in range(opts.max_outer):
        res = optimize.minimize(
            _augmented_energy,
            x,
            args=(spec, target, segments, multiplier, penalty),
            jac=True,
            method="BFGS",
            options={"gtol": 1e-10, "maxiter": 4000},
        )
        x = np.asarray(res.x, dtype=np.float64)
        c = chain_endpoint(spec, x.reshape(segments, spec.n1)) - target
        norm = float(np.linalg.norm(c))
        logger.debug(
            "oracle outer %d penalty=%g residual=%.3g", outer, penalty, norm
        )
        if norm <= opts.residual_tol:
            break
        multiplier = multiplier + penalty * c
        if norm > 0.25 * previous:
            penalty = min(penalty * opts.penalty_growth, opts.penalty_max)
        previous = norm
    return x.reshape(segments, spec.n1), norm


def control_oracle_solve(
    spec: GroupSpec,
    q: Sequence[float] | FloatArray,
    segments: int | None = None,
    options: OracleOptions | None = None,
) -> OracleResult:
    """Energy-minimal piecewise-constant controls reaching ``q``."""
    opts = options or OracleOptions()
    count = opts.segments if segments is None else segments
    if not (
        settings.ORACLE_MIN_SEGMENTS <= count <= settings.ORACLE_MAX_SEGMENTS
    ):
        raise DomainError(
            f"segments must lie in [{settings.ORACLE_MIN_SEGMENTS}, "
            f"{settings.ORACLE_MAX_SEGMENTS}], got {count}"
        )
    target = check_point(spec, q).astype(np.float64)
    if not np.any(target):
        return OracleResult(
            distance=0.0,
            residual=0.0,
            controls=np.zeros((count, spec.n1)).tolist(),
            converged_restarts=0,
            restarts=0,
        )
    rng = np.random.default_rng(opts.seed)
    gauge = float(homogeneous_norm(spec, target))
    initial = [
        (
            target[: spec.n1][None, :]
            + gauge * rng.standard_normal((count, spec.n1))
        )
        / count
        for _ in range(opts.restarts)
    ]
    outcomes = fan_out(
        lambda v0: _oracle_restart(spec, target, v0, opts),
        initial,
        opts.workers,
    )
    best: tuple[float, FloatArray, float] | None = None
    converged = 0
    best_residual = math.inf
    for v, residual in outcomes:
        best_residual = min(best_residual, residual)
        if residual > opts.residual_tol:
            continue
        converged += 1
        distance = math.sqrt(count * float(np.sum(v * v)))
        if best is None or distance < best[0]:
            best = (distance, v, residual)
    if best is None:
        raise OracleFailureError(
            f"penalty continuation stayed at residual {best_residual:.3g} "
            f"for target {target.tolist()}",
            residual=best_residual,
        )
    distance, v, residual = best
    return OracleResult(
        distance=distance,
        residual=residual,
        controls=(v * count).tolist(),
        converged_restarts=converged,
        restarts=opts.restarts,
    )


def control_oracle_distance(
    spec: GroupSpec,
    q: Sequence[float] | FloatArray,
    segments: int | None = None,
    options: OracleOptions | None = None,
) -> float:
    return control_oracle_solve(spec, q, segments, options).distance


def dump_path_csv(path: ExtremalPath, filepath: str) -> None:
    extremal_path_to_csv(path, filepath)
