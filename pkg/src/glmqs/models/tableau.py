"""GLM tableau data and the matrices of the Nordsieck order conditions.

A tableau holds the coefficients (c, A, U, B, V) of one step

    Y = h (A ⊗ I) F + (U ⊗ I) y_prev,     y_next = h (B ⊗ I) F + (V ⊗ I) y_prev,

with r = s = p + 1, q = p, and Nordsieck blocks y_j ≈ h^(j-1) y^(j-1)(t).
"""

import math
from dataclasses import dataclass, replace
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .custom_error import TableauValidationError

STRUCTURE_TOL = 1e-12

_MATRIX_FIELDS = ("c", "A", "U", "B", "V")


@dataclass(frozen=True, eq=False)
class GlmTableau:
    """An implicit GLM with diagonal stage parameter λ.

    Arrays are copied to read-only float arrays on construction and every structural
    invariant is checked; a tableau that exists is a valid tableau.

    Examples:
        >>> t = builtin_tableau("GLMQS-1")
        >>> t.r, t.s, t.q
        (2, 2, 1)
    """

    name: str
    p: int
    lam: float
    c: NDArray[np.float64]
    A: NDArray[np.float64]
    U: NDArray[np.float64]
    B: NDArray[np.float64]
    V: NDArray[np.float64]
    coeff_digits: int = 16
    printed_error_constant: float | None = None

    def __post_init__(self) -> None:
        for key in _MATRIX_FIELDS:
            value = np.array(getattr(self, key), dtype=float)
            value.setflags(write=False)
            object.__setattr__(self, key, value)
        object.__setattr__(self, "lam", float(self.lam))
        validate_structure(self)

    @property
    def q(self) -> int:
        return self.p

    @property
    def s(self) -> int:
        return self.p + 1

    @property
    def r(self) -> int:
        return self.p + 1

    def with_changes(self, **changes: Any) -> "GlmTableau":
        """Copy with some fields replaced; the result is validated again."""
        return replace(self, **changes)

    def perturbed(self, matrix: str, index: tuple[int, int], delta: float) -> "GlmTableau":
        """Copy with one matrix entry shifted by `delta` (0-based index)."""
        values = np.array(getattr(self, matrix))
        values[index] += delta
        return self.with_changes(**{matrix: values})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GlmTableau):
            return NotImplemented
        return (
            self.name == other.name
            and self.p == other.p
            and self.lam == other.lam
            and self.coeff_digits == other.coeff_digits
            and self.printed_error_constant == other.printed_error_constant
            and all(
                np.array_equal(getattr(self, key), getattr(other, key))
                for key in _MATRIX_FIELDS
            )
        )

    __hash__ = None  # type: ignore[assignment]


def validate_structure(t: GlmTableau) -> None:
    """Check shapes, triangular structure and the forced first columns.

    Raises:
        TableauValidationError: naming the offending field with 1-based indices.
    """
    if not isinstance(t.p, (int, np.integer)) or t.p < 1:
        raise TableauValidationError(f"p: order must be a positive integer, got {t.p!r}")
    r = s = t.p + 1
    shapes = {"c": (s,), "A": (s, s), "U": (s, r), "B": (r, s), "V": (r, r)}
    for key, shape in shapes.items():
        actual = getattr(t, key).shape
        if actual != shape:
            raise TableauValidationError(
                f"{key}: expected shape {shape} for r = s = p + 1 = {r}, got {actual}"
            )
        if not np.all(np.isfinite(getattr(t, key))):
            raise TableauValidationError(f"{key}: entries must be finite")
    if not math.isfinite(t.lam) or t.lam <= 0.0:
        raise TableauValidationError(f"lambda: must be positive, got {t.lam!r}")

    tol = STRUCTURE_TOL * max(1.0, abs(t.lam))
    for i in range(s):
        for j in range(i + 1, s):
            if t.A[i, j] != 0.0:
                raise TableauValidationError(
                    f"A[{i + 1},{j + 1}]: A must be lower triangular, got {t.A[i, j]!r}"
                )
        if abs(t.A[i, i] - t.lam) > tol:
            raise TableauValidationError(
                f"A[{i + 1},{i + 1}]: diagonal must equal lambda = {t.lam!r}, got {t.A[i, i]!r}"
            )

    if abs(t.V[0, 0] - 1.0) > STRUCTURE_TOL:
        raise TableauValidationError(f"V[1,1]: must be 1, got {t.V[0, 0]!r}")
    for i in range(1, r):
        for j in range(0, i + 1):
            if t.V[i, j] != 0.0:
                raise TableauValidationError(
                    f"V[{i + 1},{j + 1}]: V must be upper triangular with zero diagonal "
                    f"below the first entry, got {t.V[i, j]!r}"
                )
    for i in range(s):
        if abs(t.U[i, 0] - 1.0) > STRUCTURE_TOL:
            raise TableauValidationError(f"U[{i + 1},1]: first column must be ones")


@dataclass(frozen=True, eq=False)
class OrderConditionSystem:
    """C_r, K_r and E_r = exp(K_r) for abscissae c and r external stages."""

    Cr: NDArray[np.float64]
    Kr: NDArray[np.float64]
    Er: NDArray[np.float64]
    w_degree: int

    @classmethod
    def for_abscissae(cls, c: ArrayLike, r: int) -> "OrderConditionSystem":
        c = np.asarray(c, dtype=float)
        Cr = np.column_stack([c**j / math.factorial(j) for j in range(r)])
        Kr = np.eye(r, k=1)
        Er = np.zeros((r, r))
        for i in range(r):
            for j in range(i, r):
                Er[i, j] = 1.0 / math.factorial(j - i)
        return cls(Cr=Cr, Kr=Kr, Er=Er, w_degree=r)

    @classmethod
    def for_tableau(cls, t: GlmTableau) -> "OrderConditionSystem":
        return cls.for_abscissae(t.c, t.r)
