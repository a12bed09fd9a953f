"""Group algebra of the supported Carnot groups in exponential coordinates.

Every operation accepts a single point of shape ``(n,)`` or a batch of shape
``(..., n)``. Step-2 groups use ``p.q = p + q + (0, B(p1, q1))``; the Engel
group uses its closed-form step-3 law on coordinates ``(x, y, z, s)``.
"""

import logging
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from carnot_kit.data_models.group import GroupSpec
from carnot_kit.data_models.group import LawSpec
from carnot_kit.enums import BuiltinGroupEnum
from carnot_kit.enums import LawTypeEnum
from carnot_kit.exceptions import ConfigurationError
from carnot_kit.exceptions import DimensionMismatchError
from carnot_kit.exceptions import DomainError
from carnot_kit.utils import FloatArray

logger = logging.getLogger(__name__)

ArrayLike = Sequence[float] | FloatArray


def _heisenberg() -> GroupSpec:
    return GroupSpec(
        name=BuiltinGroupEnum.HEISENBERG.value,
        step=2,
        layer_dims=(2, 1),
        law=LawSpec(
            type=LawTypeEnum.BILINEAR,
            matrices=[[[0.0, 0.5], [-0.5, 0.0]]],
        ),
    )


def _rxh() -> GroupSpec:
    # coordinates (w, x, y, z); w is a free horizontal direction
    return GroupSpec(
        name=BuiltinGroupEnum.RXH.value,
        step=2,
        layer_dims=(3, 1),
        law=LawSpec(
            type=LawTypeEnum.BILINEAR,
            matrices=[[[0.0, 0.0, 0.0], [0.0, 0.0, 0.5], [0.0, -0.5, 0.0]]],
        ),
    )


def _engel() -> GroupSpec:
    return GroupSpec(
        name=BuiltinGroupEnum.ENGEL.value,
        step=3,
        layer_dims=(2, 1, 1),
        law=LawSpec(type=LawTypeEnum.ENGEL),
    )


def _abelian3() -> GroupSpec:
    return GroupSpec(
        name=BuiltinGroupEnum.ABELIAN3.value,
        step=2,
        layer_dims=(3, 0),
        law=LawSpec(type=LawTypeEnum.BILINEAR, matrices=[]),
    )


_REGISTRY = {
    BuiltinGroupEnum.HEISENBERG: _heisenberg(),
    BuiltinGroupEnum.RXH: _rxh(),
    BuiltinGroupEnum.ENGEL: _engel(),
    BuiltinGroupEnum.ABELIAN3: _abelian3(),
}


def get_group(name: str | BuiltinGroupEnum) -> GroupSpec:
    try:
        return _REGISTRY[BuiltinGroupEnum(name)]
    except ValueError:
        raise ConfigurationError(
            f"unknown group {name!r}; registered groups are "
            f"{[g.value for g in BuiltinGroupEnum]}"
        ) from None


def registered_groups() -> list[GroupSpec]:
    return list(_REGISTRY.values())


def load_group(path: str | Path) -> GroupSpec:
    return GroupSpec.model_validate_json(Path(path).read_text())


def dump_group(spec: GroupSpec, path: str | Path) -> None:
    Path(path).write_text(spec.model_dump_json(indent=4))


def _offending_layer(spec: GroupSpec, length: int) -> int:
    end = 0
    for index, dim in enumerate(spec.layer_dims, start=1):
        end += dim
        if length < end:
            return index
    return spec.step + 1


def check_point(spec: GroupSpec, p: ArrayLike) -> FloatArray:
    """Returns ``p`` as a float array after checking its trailing length."""
    array = np.asarray(p, dtype=np.float64)
    length = array.shape[-1] if array.ndim else 0
    if length != spec.n:
        layer = _offending_layer(spec, length)
        raise DimensionMismatchError(
            f"{spec.name} points have {spec.n} coordinates "
            f"{spec.layer_dims}, got {length}; layer {layer} does not match",
            layer=layer,
        )
    return array


def check_horizontal(spec: GroupSpec, h: ArrayLike) -> FloatArray:
    array = np.asarray(h, dtype=np.float64)
    length = array.shape[-1] if array.ndim else 0
    if length != spec.n1:
        raise DimensionMismatchError(
            f"{spec.name} horizontal vectors have {spec.n1} entries, "
            f"got {length}",
            layer=1,
        )
    return array


def layer_weights(spec: GroupSpec) -> FloatArray:
    return spec.weights.copy()


def bilinear(spec: GroupSpec, u: ArrayLike, v: ArrayLike) -> FloatArray:
    """B(u, v) with components ``u^T B_k v``."""
    return np.einsum(
        "...i,kij,...j->...k",
        np.asarray(u, dtype=np.float64),
        spec.matrices,
        np.asarray(v, dtype=np.float64),
    )


def _engel_multiply(p: FloatArray, q: FloatArray) -> FloatArray:
    x, y, z, s = np.moveaxis(p, -1, 0)
    xt, yt, zt, st = np.moveaxis(q, -1, 0)
    w = x * yt - xt * y
    z_out = z + zt + 0.5 * w
    s_out = s + st + 0.5 * (x * zt - xt * z) + (x - xt) * w / 12.0
    return np.stack([x + xt, y + yt, z_out, s_out], axis=-1)


def multiply(spec: GroupSpec, p: ArrayLike, q: ArrayLike) -> FloatArray:
    p_arr = check_point(spec, p)
    q_arr = check_point(spec, q)
    if spec.law.type == LawTypeEnum.ENGEL:
        return _engel_multiply(p_arr, q_arr)
    out = p_arr + q_arr
    n1 = spec.n1
    if spec.n > n1:
        out[..., n1:] += bilinear(spec, p_arr[..., :n1], q_arr[..., :n1])
    return out


def inverse(spec: GroupSpec, p: ArrayLike) -> FloatArray:
    return -check_point(spec, p)


def dilate(spec: GroupSpec, r: float, p: ArrayLike) -> FloatArray:
    if not (r > 0.0 and math.isfinite(r)):
        raise DomainError(f"dilation factor must be positive, got {r}")
    return check_point(spec, p) * np.power(r, spec.weights)


def homogeneous_norm(spec: GroupSpec, p: ArrayLike) -> FloatArray | float:
    """The gauge ``(sum_i |p_i|^(2 s!/i))^(1/(2 s!))``.

    The largest homogeneous layer size is factored out before raising to
    the high exponent, so the result neither overflows nor underflows.
    """
    array = check_point(spec, p)
    exponent = 2.0 * math.factorial(spec.step)
    scaled = []
    start = 0
    for index, dim in enumerate(spec.layer_dims, start=1):
        block = array[..., start : start + dim]
        start += dim
        if dim == 0:
            continue
        scaled.append(np.linalg.norm(block, axis=-1) ** (1.0 / index))
    sizes = np.stack(scaled, axis=-1)
    top = np.max(sizes, axis=-1)
    safe = np.where(top > 0.0, top, 1.0)
    total = np.sum((sizes / safe[..., None]) ** exponent, axis=-1)
    value = np.where(top > 0.0, top * total ** (1.0 / exponent), 0.0)
    if np.ndim(value) == 0:
        return float(value)
    return value


def embed_horizontal(spec: GroupSpec, h: ArrayLike) -> FloatArray:
    h_arr = check_horizontal(spec, h)
    out = np.zeros(h_arr.shape[:-1] + (spec.n,))
    out[..., : spec.n1] = h_arr
    return out


def left_translate(
    spec: GroupSpec, p: ArrayLike, h: ArrayLike, tau: float = 1.0
) -> FloatArray:
    """The point ``p.(tau h)`` on the horizontal segment through ``p``."""
    step = embed_horizontal(spec, tau * check_horizontal(spec, h))
    return multiply(spec, p, step)


def horizontal_frame(spec: GroupSpec, p: ArrayLike) -> FloatArray:
    """Columns X_1(p), ..., X_m(p) of the left-invariant horizontal frame.

    Returns an array of shape ``(..., n, n1)``.
    """
    array = check_point(spec, p)
    n1 = spec.n1
    batch = array.shape[:-1]
    frame = np.zeros(batch + (spec.n, n1))
    frame[..., :n1, :] = np.eye(n1)
    if spec.law.type == LawTypeEnum.ENGEL:
        x, y, z = array[..., 0], array[..., 1], array[..., 2]
        frame[..., 2, 0] = -0.5 * y
        frame[..., 3, 0] = -(x * y / 12.0 + 0.5 * z)
        frame[..., 2, 1] = 0.5 * x
        frame[..., 3, 1] = x * x / 12.0
    elif spec.n > n1:
        # X_j vertical part: B(p1, e_j)_k = sum_a p1_a B_k[a, j]
        frame[..., n1:, :] = np.einsum(
            "...a,kaj->...kj", array[..., :n1], spec.matrices
        )
    return frame


def horizontal_frame_jacobian(spec: GroupSpec, p: ArrayLike) -> FloatArray:
    """Derivatives ``J[j, row, a] = d X_j[row] / d p_a``, shape (n1, n, n)."""
    array = check_point(spec, p)
    n1 = spec.n1
    jac = np.zeros((n1, spec.n, spec.n))
    if spec.law.type == LawTypeEnum.ENGEL:
        x, y = float(array[0]), float(array[1])
        jac[0, 2, 1] = -0.5
        jac[0, 3, 0] = -y / 12.0
        jac[0, 3, 1] = -x / 12.0
        jac[0, 3, 2] = -0.5
        jac[1, 2, 0] = 0.5
        jac[1, 3, 0] = x / 6.0
    elif spec.n > n1:
        # constant in p: d/dp_a of sum_a p_a B_k[a, j] is B_k[a, j]
        jac[:, n1:, :n1] = np.transpose(spec.matrices, (2, 0, 1))
    return jac


def right_step_jacobians(
    spec: GroupSpec, p: ArrayLike, v: ArrayLike
) -> tuple[FloatArray, FloatArray]:
    """Jacobians of ``p.v`` with respect to ``p`` and to ``v``."""
    p_arr = check_point(spec, p)
    v_arr = check_point(spec, v)
    n = spec.n
    jac_p = np.eye(n)
    jac_v = np.eye(n)
    if spec.law.type == LawTypeEnum.ENGEL:
        x, y, z = (float(c) for c in p_arr[:3])
        xt, yt, zt = (float(c) for c in v_arr[:3])
        w = x * yt - xt * y
        d = x - xt
        jac_p[2, 0] = 0.5 * yt
        jac_p[2, 1] = -0.5 * xt
        jac_p[3, 0] = 0.5 * zt + (w + d * yt) / 12.0
        jac_p[3, 1] = -d * xt / 12.0
        jac_p[3, 2] = -0.5 * xt
        jac_v[2, 0] = -0.5 * y
        jac_v[2, 1] = 0.5 * x
        jac_v[3, 0] = -0.5 * z + (-w - d * y) / 12.0
        jac_v[3, 1] = d * x / 12.0
        jac_v[3, 2] = 0.5 * x
        return jac_p, jac_v
    n1 = spec.n1
    if n > n1:
        jac_p[n1:, :n1] = np.einsum("kaj,j->ka", spec.matrices, v_arr[:n1])
        jac_v[n1:, :n1] = np.einsum("a,kaj->kj", p_arr[:n1], spec.matrices)
    return jac_p, jac_v


def correction(spec: GroupSpec, p: ArrayLike, q: ArrayLike) -> FloatArray:
    """R(p, q) = p.q - p - q."""
    return multiply(spec, p, q) - check_point(spec, p) - check_point(spec, q)
