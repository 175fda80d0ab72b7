"""Right-hand sides in autonomous form, with Jacobian structure descriptors."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, TypeAlias

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray


class StructureKind(str, Enum):
    """Storage class of a Jacobian, used to pick the linear backend.

    Examples:
        >>> StructureKind.BANDED
        'banded'
    """

    DENSE = "dense"
    BANDED = "banded"
    SPARSE = "sparse"


@dataclass(frozen=True, eq=False)
class JacobianStructure:
    kind: StructureKind = StructureKind.DENSE
    lower: int = 0
    upper: int = 0
    pattern: sp.csc_matrix | None = None

    @classmethod
    def dense(cls) -> "JacobianStructure":
        return cls(StructureKind.DENSE)

    @classmethod
    def banded(cls, lower: int, upper: int) -> "JacobianStructure":
        return cls(StructureKind.BANDED, lower=lower, upper=upper)

    @classmethod
    def sparse(cls, pattern: Any) -> "JacobianStructure":
        csc = sp.csc_matrix(pattern, dtype=float)
        csc.data[:] = 1.0
        return cls(StructureKind.SPARSE, pattern=csc)

    def pattern_for(self, dim: int) -> sp.csc_matrix | None:
        """Boolean nonzero pattern, or None when every entry may be nonzero."""
        if self.kind is StructureKind.SPARSE:
            return self.pattern
        if self.kind is StructureKind.BANDED:
            offsets = list(range(-self.lower, self.upper + 1))
            diagonals = [np.ones(dim - abs(k)) for k in offsets]
            return sp.diags(diagonals, offsets, shape=(dim, dim), format="csc")
        return None

    def describe(self) -> str:
        if self.kind is StructureKind.BANDED:
            return f"banded({self.lower},{self.upper})"
        if self.kind is StructureKind.SPARSE and self.pattern is not None:
            return f"sparse(nnz={self.pattern.nnz})"
        return self.kind.value


Vector: TypeAlias = NDArray[Any]
RhsFunction: TypeAlias = Callable[[Vector], Vector]
JacobianFunction: TypeAlias = Callable[[Vector], Any]
# (t, y, count) -> array of shape (count, dim), row k is y^(k)(t) of the solution through y
DerivativesFunction: TypeAlias = Callable[[float, Vector, int], Vector]
SolutionFunction: TypeAlias = Callable[[float], Vector]


@dataclass(frozen=True, eq=False)
class OdeSystem:
    """An autonomous system y' = f(y) of dimension `dim`.

    Non-autonomous problems carry time as the state component `time_index` with t' = 1.
    `jacobian` may return a dense array or a scipy.sparse matrix; it must honour `structure`.
    """

    name: str
    dim: int
    rhs: RhsFunction
    y0: Vector
    t0: float = 0.0
    t_end: float = 1.0
    jacobian: JacobianFunction | None = None
    structure: JacobianStructure = field(default_factory=JacobianStructure.dense)
    exact_derivatives: DerivativesFunction | None = None
    exact_solution: SolutionFunction | None = None
    time_index: int | None = None
    parameters: dict[str, Any] = field(default_factory=dict)

    @property
    def dtype(self) -> np.dtype[Any]:
        return np.asarray(self.y0).dtype

    def evaluate(self, y: Vector) -> Vector:
        """f(y), checked against the declared dimension."""
        value = np.asarray(self.rhs(y))
        if value.shape != (self.dim,):
            raise ValueError(
                f"{self.name}: rhs returned shape {value.shape}, expected ({self.dim},)"
            )
        return value

    def physical(self, y: Vector) -> Vector:
        """The state without the time component of an augmented system."""
        if self.time_index is None:
            return np.asarray(y)
        return np.delete(np.asarray(y), self.time_index)
