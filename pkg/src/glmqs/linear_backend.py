"""Factor-once, solve-many handles for the Newton iteration matrix I - hλJ."""

import logging
from abc import ABC, abstractmethod
from typing import Any

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.typing import NDArray

from .models.custom_error import FactorizationError
from .models.ode_system import JacobianStructure, StructureKind

logger = logging.getLogger(__name__)

PERMC_SPEC = "COLAMD"


def _pivot_check(diagonal: NDArray[Any], label: str) -> None:
    magnitude = np.abs(diagonal)
    if not np.all(np.isfinite(magnitude)):
        raise FactorizationError(f"{label}: non-finite pivot in iteration matrix")
    scale = float(np.max(magnitude)) if magnitude.size else 0.0
    small = magnitude <= np.finfo(float).eps * max(scale, 1.0)
    if np.any(small):
        row = int(np.argmax(small))
        raise FactorizationError(f"{label}: iteration matrix is singular at row {row}")


class LinearBackend(ABC):
    """Holds one factorization of I - hλJ and solves against it."""

    def __init__(self, dim: int) -> None:
        self.dim = dim

    @abstractmethod
    def factor(self, jacobian: Any, h_lambda: float) -> None:
        """Factorize I - h_lambda * jacobian."""

    @abstractmethod
    def solve(self, rhs: NDArray[Any]) -> NDArray[Any]:
        """Solve (I - hλJ) x = rhs with the current factorization."""


class DenseBackend(LinearBackend):
    def __init__(self, dim: int) -> None:
        super().__init__(dim)
        self._lu: tuple[NDArray[Any], NDArray[Any]] | None = None

    def factor(self, jacobian: Any, h_lambda: float) -> None:
        J = jacobian.toarray() if sp.issparse(jacobian) else np.asarray(jacobian)
        matrix = np.eye(self.dim, dtype=np.result_type(J, float)) - h_lambda * J
        if not np.all(np.isfinite(matrix)):
            raise FactorizationError("dense: iteration matrix has non-finite entries")
        lu, piv = scipy.linalg.lu_factor(matrix, check_finite=False)
        _pivot_check(np.diag(lu), "dense")
        self._lu = (lu, piv)

    def solve(self, rhs: NDArray[Any]) -> NDArray[Any]:
        if self._lu is None:
            raise FactorizationError("dense: solve called before factor")
        return scipy.linalg.lu_solve(self._lu, rhs, check_finite=False)


class BandedBackend(LinearBackend):
    """LAPACK gbtrf/gbtrs on LAPACK band storage with kl extra rows for pivoting."""

    def __init__(self, dim: int, lower: int, upper: int) -> None:
        super().__init__(dim)
        self.lower = lower
        self.upper = upper
        self._factor: tuple[NDArray[Any], NDArray[Any], Any] | None = None

    def _band_storage(self, jacobian: Any, h_lambda: float) -> NDArray[Any]:
        kl, ku, n = self.lower, self.upper, self.dim
        coo = sp.coo_matrix(jacobian) if sp.issparse(jacobian) else sp.coo_matrix(
            np.asarray(jacobian)
        )
        ab = np.zeros((2 * kl + ku + 1, n), dtype=np.result_type(coo.dtype, float))
        offset = coo.col - coo.row
        inside = (offset <= ku) & (offset >= -kl)
        if not np.all(inside | (coo.data == 0)):
            raise FactorizationError(
                f"banded: Jacobian has entries outside the declared band ({kl},{ku})"
            )
        rows, cols, data = coo.row[inside], coo.col[inside], coo.data[inside]
        np.add.at(ab, (kl + ku + rows - cols, cols), -h_lambda * data)
        ab[kl + ku, :] += 1.0
        return ab

    def factor(self, jacobian: Any, h_lambda: float) -> None:
        ab = self._band_storage(jacobian, h_lambda)
        if not np.all(np.isfinite(ab)):
            raise FactorizationError("banded: iteration matrix has non-finite entries")
        gbtrf, gbtrs = scipy.linalg.get_lapack_funcs(("gbtrf", "gbtrs"), (ab,))
        lu, piv, info = gbtrf(ab, self.lower, self.upper)
        if info > 0:
            raise FactorizationError(f"banded: iteration matrix is singular at row {info - 1}")
        if info < 0:
            raise FactorizationError(f"banded: illegal value in argument {-info} of gbtrf")
        _pivot_check(lu[self.lower + self.upper, :], "banded")
        self._factor = (lu, piv, gbtrs)

    def solve(self, rhs: NDArray[Any]) -> NDArray[Any]:
        if self._factor is None:
            raise FactorizationError("banded: solve called before factor")
        lu, piv, gbtrs = self._factor
        x, info = gbtrs(lu, self.lower, self.upper, rhs.astype(lu.dtype), piv)
        if info != 0:
            raise FactorizationError(f"banded: gbtrs failed with info = {info}")
        return x


class SparseBackend(LinearBackend):
    """SuperLU with COLAMD ordering; the assembled CSC pattern is kept across refreshes."""

    def __init__(self, dim: int, pattern: sp.csc_matrix | None = None) -> None:
        super().__init__(dim)
        self._lu: Any = None
        self._set_pattern(sp.csc_matrix((dim, dim)) if pattern is None else pattern)

    def _set_pattern(self, pattern: Any) -> None:
        base = (sp.identity(self.dim, format="csc") + abs(sp.csc_matrix(pattern))).tocsc()
        base.sort_indices()
        base.data[:] = 1.0
        self._pattern = base
        coo = base.tocoo()
        self._rows, self._cols = coo.row, coo.col
        self._diagonal = np.flatnonzero(coo.row == coo.col)

    def _covers(self, J: sp.csc_matrix) -> bool:
        nonzero = (J != 0).astype(float)
        return (nonzero - nonzero.multiply(self._pattern)).count_nonzero() == 0

    def factor(self, jacobian: Any, h_lambda: float) -> None:
        J = sp.csc_matrix(jacobian)
        if not self._covers(J):
            logger.debug("sparse: Jacobian left its pattern, rebuilding the assembly")
            self._set_pattern(self._pattern + abs(J))
        values = np.asarray(J[self._rows, self._cols]).ravel()
        data = -h_lambda * values
        data[self._diagonal] += 1.0
        matrix = sp.csc_matrix(
            (data, self._pattern.indices, self._pattern.indptr), shape=(self.dim, self.dim)
        )
        if not np.all(np.isfinite(matrix.data)):
            raise FactorizationError("sparse: iteration matrix has non-finite entries")
        try:
            self._lu = spla.splu(matrix, permc_spec=PERMC_SPEC)
        except RuntimeError as e:
            raise FactorizationError(f"sparse: {e}") from e
        _pivot_check(self._lu.U.diagonal(), "sparse")

    def solve(self, rhs: NDArray[Any]) -> NDArray[Any]:
        if self._lu is None:
            raise FactorizationError("sparse: solve called before factor")
        return self._lu.solve(rhs)


def linear_backend(structure: JacobianStructure, dim: int) -> LinearBackend:
    """Backend for the declared Jacobian structure."""
    if structure.kind is StructureKind.BANDED:
        return BandedBackend(dim, structure.lower, structure.upper)
    if structure.kind is StructureKind.SPARSE:
        return SparseBackend(dim, structure.pattern)
    return DenseBackend(dim)
