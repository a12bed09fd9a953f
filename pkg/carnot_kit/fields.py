"""Scalar fields on a group, the inputs of the semiconcavity probe."""

from typing import Callable
from typing import Sequence

import numpy as np

from carnot_kit.backends import DistanceBackend
from carnot_kit.data_models.group import GroupSpec
from carnot_kit.data_models.probe import PsiProfile
from carnot_kit.groups import check_point
from carnot_kit.groups import get_group
from carnot_kit.heisenberg import d0_squared_exact
from carnot_kit.heisenberg import d0_squared_exact_many
from carnot_kit.utils import FloatArray

Evaluate = Callable[[FloatArray], float]
EvaluateMany = Callable[[FloatArray], FloatArray]


class ScalarField:
    """A deterministic rule ``Point -> float`` bound to a group.

    ``evaluate_many`` is an optional batched rule over arrays of shape
    ``(k, n)``; fields without one are evaluated point by point.
    """

    def __init__(
        self,
        spec: GroupSpec,
        evaluate: Evaluate,
        name: str,
        evaluate_many: EvaluateMany | None = None,
    ) -> None:
        self.spec = spec
        self.name = name
        self._evaluate = evaluate
        self._evaluate_many = evaluate_many

    @property
    def vectorised(self) -> bool:
        return self._evaluate_many is not None

    def __call__(self, p: Sequence[float] | FloatArray) -> float:
        return float(self._evaluate(check_point(self.spec, p)))

    def many(
        self, points: Sequence[Sequence[float]] | FloatArray
    ) -> FloatArray:
        arr = check_point(self.spec, points).reshape(-1, self.spec.n)
        if self._evaluate_many is not None:
            return np.asarray(self._evaluate_many(arr), dtype=np.float64)
        return np.array([self._evaluate(row) for row in arr])

    def __repr__(self) -> str:
        return f"ScalarField({self.name!r} on {self.spec.name!r})"


def d0_squared_field() -> ScalarField:
    """Closed-form d0^2 on the Heisenberg group."""
    return ScalarField(
        get_group("heisenberg"),
        d0_squared_exact,
        "d0sq",
        evaluate_many=d0_squared_exact_many,
    )


def d0_field(backend: DistanceBackend) -> ScalarField:
    return ScalarField(
        backend.spec,
        backend.d0,
        f"d0[{backend.kind}]",
        evaluate_many=backend.d0_many,
    )


def d0_squared_backend_field(backend: DistanceBackend) -> ScalarField:
    return compose_with_psi(PsiProfile(exponent=2.0), d0_field(backend))


def negated(field: ScalarField) -> ScalarField:
    def evaluate(p: FloatArray) -> float:
        return -field(p)

    def evaluate_many(points: FloatArray) -> FloatArray:
        return -field.many(points)

    return ScalarField(field.spec, evaluate, f"-{field.name}", evaluate_many)


def horizontal_norm_squared_field(spec: GroupSpec) -> ScalarField:
    """|p^(1)|^2, the squared length of the first layer."""
    n1 = spec.n1

    def evaluate_many(points: FloatArray) -> FloatArray:
        return np.sum(points[..., :n1] ** 2, axis=-1)

    return ScalarField(
        spec,
        lambda p: float(evaluate_many(p)),
        "horizontal_norm_sq",
        evaluate_many,
    )


def linear_field(
    spec: GroupSpec,
    coefficients: Sequence[float],
    offset: float = 0.0,
) -> ScalarField:
    """Affine function ``c . p + offset`` of the coordinates."""
    c = check_point(spec, coefficients)

    def evaluate_many(points: FloatArray) -> FloatArray:
        return points @ c + offset

    return ScalarField(
        spec, lambda p: float(evaluate_many(p)), "linear", evaluate_many
    )


def compose_with_psi(
    psi: PsiProfile | Callable[[float], float],
    f_dist: ScalarField,
    name: str | None = None,
) -> ScalarField:
    """Pointwise ``Psi(f_dist(p))``."""
    if isinstance(psi, PsiProfile):
        profile = psi
        label = name or (
            f"{profile.coefficient:g}*{f_dist.name}^{profile.exponent:g}"
        )

        def evaluate_many(points: FloatArray) -> FloatArray:
            values = f_dist.many(points)
            return profile.coefficient * values**profile.exponent

        return ScalarField(
            f_dist.spec,
            lambda p: profile(f_dist(p)),
            label,
            evaluate_many,
        )
    func = psi
    return ScalarField(
        f_dist.spec,
        lambda p: float(func(f_dist(p))),
        name or f"psi({f_dist.name})",
    )
