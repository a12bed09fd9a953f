import math

import numpy as np
from pydantic import BaseModel
from pydantic import field_validator

from carnot_kit.utils import FloatArray


class MuInversion(BaseModel):
    value: float
    input: float
    iterations: int
    residual: float

    @field_validator("value")
    @classmethod
    def validate_inside_domain(cls, value: float) -> float:
        if not abs(value) < math.pi:
            raise ValueError(f"inverse value {value} is outside (-pi, pi)")
        return value


class HessianBundle(BaseModel):
    """First and second derivatives of d0^2 at a smooth point."""

    theta: float
    euclidean_grad: list[float]
    euclidean_hess: list[list[float]]
    horizontal_grad: list[float]
    horizontal_hess: list[list[float]]

    def grad_array(self) -> FloatArray:
        return np.asarray(self.euclidean_grad)

    def hess_array(self) -> FloatArray:
        return np.asarray(self.euclidean_hess)

    def horizontal_grad_array(self) -> FloatArray:
        return np.asarray(self.horizontal_grad)

    def horizontal_hess_array(self) -> FloatArray:
        return np.asarray(self.horizontal_hess)
