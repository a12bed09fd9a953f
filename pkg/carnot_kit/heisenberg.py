"""Closed-form Carnot-Caratheodory distance on the Heisenberg group.

Points are ``(x, y, z)`` and the product adds ``(x y' - x' y) / 2`` to the
sum of the z coordinates.
The distance from the identity is written through

    mu(s) = (2s - sin 2s) / (2 sin^2 s),

an increasing diffeomorphism of (-pi, pi) onto R, and the angle
``theta = mu^-1(4|z| / (x^2 + y^2))``.
"""

import logging
import math
from typing import Sequence

import numpy as np
from scipy import optimize

from carnot_kit import settings
from carnot_kit.data_models.heisenberg import HessianBundle
from carnot_kit.data_models.heisenberg import MuInversion
from carnot_kit.exceptions import DomainError
from carnot_kit.exceptions import NonSmoothLocusError
from carnot_kit.groups import check_point
from carnot_kit.groups import get_group
from carnot_kit.groups import homogeneous_norm
from carnot_kit.utils import FloatArray

logger = logging.getLogger(__name__)

HEISENBERG = get_group("heisenberg")
THETA_MAX = math.nextafter(math.pi, 0.0)

_SERIES_TERMS = 10
# x - sin x = sum_k (-1)^(k+1) x^(2k+1) / (2k+1)!
_X_MINUS_SIN = [
    (-1) ** (k + 1) / math.factorial(2 * k + 1)
    for k in range(1, _SERIES_TERMS + 1)
]
# sin s - s cos s = sum_k (-1)^(k+1) 2k s^(2k+1) / (2k+1)!
_SIN_MINUS_S_COS = [
    (-1) ** (k + 1) * 2 * k / math.factorial(2 * k + 1)
    for k in range(1, _SERIES_TERMS + 1)
]


def _odd_series(coefficients: list[float], x: FloatArray) -> FloatArray:
    x2 = x * x
    total = np.zeros_like(x)
    for c in reversed(coefficients):
        total = total * x2 + c
    return total * x2 * x


def x_minus_sin(x: FloatArray | float) -> FloatArray:
    arr = np.asarray(x, dtype=np.float64)
    small = np.abs(arr) < settings.STABLE_NUMERATOR_THRESHOLD
    return np.where(
        small, _odd_series(_X_MINUS_SIN, arr), arr - np.sin(arr)
    )


def sin_minus_s_cos(s: FloatArray | float) -> FloatArray:
    arr = np.asarray(s, dtype=np.float64)
    small = np.abs(arr) < settings.STABLE_NUMERATOR_THRESHOLD
    return np.where(
        small,
        _odd_series(_SIN_MINUS_S_COS, arr),
        np.sin(arr) - arr * np.cos(arr),
    )


def _mu_array(s: FloatArray) -> FloatArray:
    with np.errstate(divide="ignore", invalid="ignore"):
        closed = x_minus_sin(2.0 * s) / (2.0 * np.sin(s) ** 2)
    series = 2.0 * s / 3.0 + 4.0 * s**3 / 45.0
    return np.where(np.abs(s) < settings.MU_SERIES_THRESHOLD, series, closed)


def _mu_prime_array(s: FloatArray) -> FloatArray:
    with np.errstate(divide="ignore", invalid="ignore"):
        closed = 2.0 * sin_minus_s_cos(s) / np.sin(s) ** 3
    series = 2.0 / 3.0 + 4.0 * s**2 / 15.0
    return np.where(np.abs(s) < settings.MU_SERIES_THRESHOLD, series, closed)


def _check_angle(s: float) -> float:
    if not (math.isfinite(s) and abs(s) < math.pi):
        raise DomainError(f"mu is defined on (-pi, pi), got {s}")
    return float(s)


def _odd_series_scalar(coefficients: list[float], x: float) -> float:
    x2 = x * x
    total = 0.0
    for c in reversed(coefficients):
        total = total * x2 + c
    return total * x2 * x


def _mu_scalar(s: float) -> float:
    if abs(s) < settings.MU_SERIES_THRESHOLD:
        return 2.0 * s / 3.0 + 4.0 * s**3 / 45.0
    x = 2.0 * s
    if abs(x) < settings.STABLE_NUMERATOR_THRESHOLD:
        numerator = _odd_series_scalar(_X_MINUS_SIN, x)
    else:
        numerator = x - math.sin(x)
    return numerator / (2.0 * math.sin(s) ** 2)


def mu(s: float) -> float:
    return _mu_scalar(_check_angle(s))


def mu_prime(s: float) -> float:
    s = _check_angle(s)
    if abs(s) < settings.MU_SERIES_THRESHOLD:
        return 2.0 / 3.0 + 4.0 * s**2 / 15.0
    if abs(s) < settings.STABLE_NUMERATOR_THRESHOLD:
        numerator = _odd_series_scalar(_SIN_MINUS_S_COS, s)
    else:
        numerator = math.sin(s) - s * math.cos(s)
    return 2.0 * numerator / math.sin(s) ** 3


def mu_inverse(v: float) -> MuInversion:
    """Inverts mu by bracketed bisection and a Newton polish."""
    if not math.isfinite(v):
        raise DomainError(f"mu_inverse needs a finite input, got {v}")
    target = abs(v)
    if target == 0.0:
        return MuInversion(value=0.0, input=v, iterations=0, residual=0.0)
    if target >= mu(THETA_MAX):
        value = math.copysign(THETA_MAX, v)
        return MuInversion(
            value=value,
            input=v,
            iterations=0,
            residual=abs(mu(value) - v),
        )
    if target < 1e-6:
        # mu(s) = 2s/3 + O(s^3); Newton from the linear inverse
        iterations = 0
        theta = 1.5 * target
    else:
        root, info = optimize.bisect(
            lambda s: _mu_scalar(s) - target,
            0.0,
            THETA_MAX,
            xtol=1e-300,
            rtol=4.0 * np.finfo(float).eps,
            maxiter=200,
            full_output=True,
        )
        iterations = info.iterations
        theta = float(root)
    best = abs(mu(theta) - target)
    for _ in range(2):
        candidate = theta - (mu(theta) - target) / mu_prime(theta)
        if not 0.0 <= candidate < math.pi:
            break
        residual = abs(mu(candidate) - target)
        iterations += 1
        if residual >= best:
            break
        theta, best = candidate, residual
    return MuInversion(
        value=math.copysign(theta, v),
        input=v,
        iterations=iterations,
        residual=best,
    )


def mu_inverse_many(values: Sequence[float] | FloatArray) -> FloatArray:
    """Vectorised inverse of mu: fixed bisection then two Newton steps."""
    v = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise DomainError("mu_inverse_many needs finite inputs")
    target = np.abs(v)
    lo = np.zeros_like(target)
    hi = np.full_like(target, THETA_MAX)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        below = _mu_array(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    theta = 0.5 * (lo + hi)
    for _ in range(2):
        step = (_mu_array(theta) - target) / _mu_prime_array(theta)
        theta = np.clip(theta - step, 0.0, THETA_MAX)
    theta = np.where(target >= mu(THETA_MAX), THETA_MAX, theta)
    theta = np.where(target == 0.0, 0.0, theta)
    return np.copysign(theta, v)


def _d0_squared_from_theta(
    theta: float, r2: float, abs_z: float
) -> float:
    if theta == 0.0:
        return r2
    if theta <= 0.5 * math.pi:
        return (theta / math.sin(theta)) ** 2 * r2
    # same value as above, well conditioned as theta -> pi
    return 8.0 * abs_z * theta**2 / (2.0 * theta - math.sin(2.0 * theta))


def d0_squared_exact(p: Sequence[float] | FloatArray) -> float:
    x, y, z = (float(c) for c in check_point(HEISENBERG, p))
    r2 = x * x + y * y
    abs_z = abs(z)
    if r2 == 0.0:
        return 4.0 * math.pi * abs_z
    if abs_z == 0.0:
        return r2
    ratio = 4.0 * abs_z / r2
    if not math.isfinite(ratio):
        return 4.0 * math.pi * abs_z
    theta = mu_inverse(ratio).value
    return _d0_squared_from_theta(theta, r2, abs_z)


def d0_exact(p: Sequence[float] | FloatArray) -> float:
    return math.sqrt(d0_squared_exact(p))


def d0_squared_exact_many(
    points: Sequence[Sequence[float]] | FloatArray,
) -> FloatArray:
    arr = check_point(HEISENBERG, points)
    x, y, z = arr[..., 0], arr[..., 1], arr[..., 2]
    r2 = x * x + y * y
    abs_z = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = 4.0 * abs_z / r2
        axis = (r2 == 0.0) | ~np.isfinite(ratio)
        theta = mu_inverse_many(np.where(axis, 0.0, ratio))
        low = np.where(theta > 0.0, (theta / np.sin(theta)) ** 2, 1.0) * r2
        high = 8.0 * abs_z * theta**2 / x_minus_sin(2.0 * theta)
        value = np.where(theta <= 0.5 * math.pi, low, high)
    return np.where(axis, 4.0 * math.pi * abs_z, value)


def theta_of(p: Sequence[float] | FloatArray) -> float:
    """Angle theta(p) = mu^-1(4|z| / (x^2 + y^2)) off the axis."""
    x, y, z = (float(c) for c in check_point(HEISENBERG, p))
    r2 = x * x + y * y
    if r2 == 0.0:
        raise NonSmoothLocusError(f"theta is undefined on the axis: {p}")
    return mu_inverse(4.0 * abs(z) / r2).value


def _theta_cot_theta(theta: float) -> float:
    if theta < 1e-8:
        return 1.0 - theta * theta / 3.0
    return theta / math.tan(theta)


def frame_matrix(p: Sequence[float] | FloatArray) -> FloatArray:
    """Columns X_1(p) = (1, 0, -y/2) and X_2(p) = (0, 1, x/2)."""
    x, y, _ = (float(c) for c in check_point(HEISENBERG, p))
    return np.array([[1.0, 0.0], [0.0, 1.0], [-0.5 * y, 0.5 * x]])


def derivatives(p: Sequence[float] | FloatArray) -> HessianBundle:
    """Euclidean and horizontal gradient and Hessian of d0^2 at ``p``.

    Refused on the center axis ``x = y = 0``, where d0^2 has a corner.
    On the plane ``z = 0`` the theta -> 0 limit applies.
    """
    x, y, z = (float(c) for c in check_point(HEISENBERG, p))
    r2 = x * x + y * y
    if r2 == 0.0:
        raise NonSmoothLocusError(
            f"d0^2 is not differentiable on the center axis, got {(x, y, z)}"
        )
    sigma = math.copysign(1.0, z) if z != 0.0 else 0.0
    theta = theta_of((x, y, z))
    tc = _theta_cot_theta(theta)
    m = mu(theta)
    mp = mu_prime(theta)

    grad = np.array([2.0 * tc * x, 2.0 * tc * y, 4.0 * theta * sigma])
    q = 4.0 * m * m / (r2 * mp)
    c = -8.0 * m * sigma / (r2 * mp)
    hess = np.array(
        [
            [2.0 * tc + q * x * x, q * x * y, c * x],
            [q * x * y, 2.0 * tc + q * y * y, c * y],
            [c * x, c * y, 16.0 / (r2 * mp)],
        ]
    )
    frame = frame_matrix((x, y, z))
    horizontal_grad = frame.T @ grad
    horizontal_hess = frame.T @ hess @ frame
    horizontal_hess = 0.5 * (horizontal_hess + horizontal_hess.T)
    return HessianBundle(
        theta=theta,
        euclidean_grad=grad.tolist(),
        euclidean_hess=hess.tolist(),
        horizontal_grad=horizontal_grad.tolist(),
        horizontal_hess=horizontal_hess.tolist(),
    )


def horizontal_top_eigenvalue(p: Sequence[float] | FloatArray) -> float:
    """Largest eigenvalue of the horizontal Hessian of d0^2 at ``p``.

    Equals ``2 theta cot theta + 4 (1 + mu^2) / mu'`` and tends to 8 on the
    horizontal plane.
    """
    bundle = derivatives(p)
    return float(np.linalg.eigvalsh(bundle.horizontal_hess_array())[-1])


def sphere_points(count: int, seed: int = 0) -> FloatArray:
    """Random points on the unit CC sphere ``d0 = 1``."""
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((count, 3))
    raw[:, 2] *= 0.5
    d = np.sqrt(d0_squared_exact_many(raw))
    scale = 1.0 / d
    return raw * np.stack([scale, scale, scale**2], axis=-1)


def norm_equivalence_constant(samples: int = 10_000, seed: int = 0) -> float:
    """Empirical C with 1/C <= d0(p) / |p|_G <= C over random points."""
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((samples, 3))
    # spread the samples over several orders of magnitude and anisotropy
    raw[:, :2] *= np.exp(rng.uniform(-3.0, 3.0, size=(samples, 1)))
    raw[:, 2] *= np.exp(rng.uniform(-3.0, 3.0, size=samples))
    d = np.sqrt(d0_squared_exact_many(raw))
    gauge = np.asarray(homogeneous_norm(HEISENBERG, raw))
    ratio = d / gauge
    constant = float(max(np.max(ratio), 1.0 / np.min(ratio)))
    logger.debug(
        "norm equivalence over %d samples: ratio in [%g, %g]",
        samples,
        float(np.min(ratio)),
        float(np.max(ratio)),
    )
    return constant
