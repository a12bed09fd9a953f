import math

import numpy as np
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import PrivateAttr
from pydantic import field_validator
from pydantic import model_validator

from carnot_kit.enums import LawTypeEnum
from carnot_kit.utils import FloatArray


class LawSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    type: LawTypeEnum
    matrices: list[list[list[float]]] | None = None


class GroupSpec(BaseModel):
    """A concrete Carnot group in exponential coordinates.

    Step-2 groups carry one skew-symmetric ``n1 x n1`` matrix per second
    layer coordinate, so that ``B(u, v)_k = u^T B_k v``. The Engel group
    uses its own closed-form law and carries no matrices.
    """

    model_config = ConfigDict(frozen=True)

    name: str
    step: int
    layer_dims: tuple[int, ...]
    law: LawSpec

    _matrices: FloatArray = PrivateAttr()
    _weights: FloatArray = PrivateAttr()
    _c0: float | None = PrivateAttr(default=None)

    @field_validator("step")
    @classmethod
    def validate_step(cls, value: int) -> int:
        if value not in (2, 3):
            raise ValueError(f"step must be 2 or 3, got {value}")
        return value

    @model_validator(mode="after")
    def validate_law(self) -> "GroupSpec":
        if len(self.layer_dims) != self.step:
            raise ValueError(
                f"layer_dims {self.layer_dims} has {len(self.layer_dims)} "
                f"entries for a step {self.step} group"
            )
        if self.layer_dims[0] < 1:
            raise ValueError("the first layer must be nonempty")
        if self.law.type == LawTypeEnum.ENGEL:
            if tuple(self.layer_dims) != (2, 1, 1) or self.step != 3:
                raise ValueError("the engel law requires layer_dims (2,1,1)")
            if self.law.matrices:
                raise ValueError("the engel law takes no matrices")
            return self
        if self.step != 2:
            raise ValueError("a bilinear law defines a step 2 group")
        n1, n2 = self.layer_dims
        matrices = self.law.matrices or []
        if len(matrices) != n2:
            raise ValueError(
                f"expected {n2} matrices for layer_dims {self.layer_dims}, "
                f"got {len(matrices)}"
            )
        if n2 == 0:
            return self
        array = np.asarray(matrices, dtype=np.float64)
        if array.shape != (n2, n1, n1):
            raise ValueError(
                f"matrices must have shape {(n2, n1, n1)}, got {array.shape}"
            )
        if not np.all(np.isfinite(array)):
            raise ValueError("matrices must be finite")
        if np.any(array + np.swapaxes(array, 1, 2) != 0.0):
            raise ValueError("every B_k must be exactly skew-symmetric")
        return self

    def model_post_init(self, __context: object) -> None:
        if self.law.type == LawTypeEnum.BILINEAR:
            n1, n2 = self.layer_dims
            if n2 > 0:
                self._matrices = np.asarray(
                    self.law.matrices, dtype=np.float64
                )
            else:
                self._matrices = np.zeros((0, n1, n1))
            self._c0 = math.sqrt(
                sum(
                    float(np.abs(b).sum()) ** 2
                    for b in self._matrices
                )
            )
        else:
            self._matrices = np.zeros((0, 2, 2))
            self._c0 = None
        self._weights = np.repeat(
            np.arange(1, self.step + 1, dtype=np.float64), self.layer_dims
        )

    @property
    def n(self) -> int:
        return int(sum(self.layer_dims))

    @property
    def n1(self) -> int:
        return int(self.layer_dims[0])

    @property
    def is_bilinear(self) -> bool:
        return self.law.type == LawTypeEnum.BILINEAR

    @property
    def is_abelian(self) -> bool:
        return self.is_bilinear and not np.any(self._matrices)

    @property
    def matrices(self) -> FloatArray:
        """The stack of B_k, shape (n2, n1, n1)."""
        return self._matrices

    @property
    def weights(self) -> FloatArray:
        """Dilation weight of every coordinate (its layer index)."""
        return self._weights

    @property
    def c0(self) -> float | None:
        """Constant of the bound |R(p, q)| <= C0 |p| |q|; None for Engel."""
        return self._c0

