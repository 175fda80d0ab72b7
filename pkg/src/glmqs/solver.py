"""Sequential stage equations of one GLM step, solved by modified Newton iteration.

Stage j solves Y_j = hλ f(Y_j) + r_j with r_j = h Σ_{k<j} a_jk F_k + Σ_k u_jk y_k, so the
stages come one after another and share the iteration matrix I - hλJ.
"""

import logging
from typing import Any

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray

from .linear_backend import LinearBackend, linear_backend
from .models.configs import JacobianReuse, NewtonConfig
from .models.custom_error import StageFailureError
from .models.nordsieck import SolverStats, StageValues
from .models.ode_system import OdeSystem
from .models.tableau import GlmTableau

logger = logging.getLogger(__name__)

_EPS = float(np.finfo(float).eps)
FD_STEP = float(np.sqrt(_EPS))
ROUNDOFF_FACTOR = 16.0


def column_groups(pattern: sp.csc_matrix) -> list[list[int]]:
    """Greedy grouping of columns whose nonzero rows do not overlap."""
    n_rows, n_cols = pattern.shape
    groups: list[list[int]] = []
    occupied: list[NDArray[np.bool_]] = []
    for col in range(n_cols):
        rows = pattern.indices[pattern.indptr[col] : pattern.indptr[col + 1]]
        for members, used in zip(groups, occupied):
            if not np.any(used[rows]):
                members.append(col)
                used[rows] = True
                break
        else:
            used = np.zeros(n_rows, dtype=bool)
            used[rows] = True
            groups.append([col])
            occupied.append(used)
    return groups


def finite_difference_jacobian(
    system: OdeSystem,
    y: NDArray[Any],
    f0: NDArray[Any] | None = None,
    stats: SolverStats | None = None,
) -> Any:
    """One-sided differences with increment sqrt(eps)·(1 + |y_i|).

    With a banded or sparse structure, structurally orthogonal columns share one rhs
    evaluation and the result is returned as a CSC matrix.
    """
    y = np.asarray(y)
    evaluations = 0
    if f0 is None:
        f0 = system.evaluate(y)
        evaluations += 1
    dtype = np.result_type(y, f0, float)
    increments = FD_STEP * (1.0 + np.abs(y))
    pattern = system.structure.pattern_for(system.dim)

    if pattern is None:
        J = np.empty((system.dim, system.dim), dtype=dtype)
        for col in range(system.dim):
            shifted = y.astype(dtype, copy=True)
            shifted[col] += increments[col]
            J[:, col] = (system.evaluate(shifted) - f0) / increments[col]
            evaluations += 1
        if stats is not None:
            stats.rhs_evaluations += evaluations
        return J

    pattern = sp.csc_matrix(pattern)
    pattern.sort_indices()
    data = np.zeros(pattern.nnz, dtype=dtype)
    for group in column_groups(pattern):
        shifted = y.astype(dtype, copy=True)
        shifted[group] += increments[group]
        delta = system.evaluate(shifted) - f0
        evaluations += 1
        for col in group:
            start, stop = pattern.indptr[col], pattern.indptr[col + 1]
            data[start:stop] = delta[pattern.indices[start:stop]] / increments[col]
    if stats is not None:
        stats.rhs_evaluations += evaluations
    return sp.csc_matrix(
        (data, pattern.indices.copy(), pattern.indptr.copy()), shape=pattern.shape
    )


class _Divergence(Exception):
    def __init__(self, reason: str, residual: float) -> None:
        super().__init__(reason)
        self.reason = reason
        self.residual = residual


class NewtonStageSolver:
    """Owns the Jacobian, its factorization and the counters for one integration run.

    Not thread-safe; use one instance per run.
    """

    def __init__(
        self,
        tableau: GlmTableau,
        system: OdeSystem,
        config: NewtonConfig | None = None,
        backend: LinearBackend | None = None,
    ) -> None:
        self.tableau = tableau
        self.system = system
        self.config = config or NewtonConfig()
        self.backend = backend or linear_backend(system.structure, system.dim)
        self.stats = SolverStats()
        self._jacobian: Any = None
        self._abs_jacobian: Any = None
        self._factored_for: float | None = None
        self._fresh = False

    def _rhs(self, y: NDArray[Any]) -> NDArray[Any]:
        self.stats.rhs_evaluations += 1
        return self.system.evaluate(y)

    def evaluate_jacobian(self, y: NDArray[Any]) -> None:
        if self.system.jacobian is None:
            J = finite_difference_jacobian(self.system, y, stats=self.stats)
        else:
            J = self.system.jacobian(y)
        self._jacobian = J
        self._abs_jacobian = abs(J) if sp.issparse(J) else np.abs(J)
        self._factored_for = None
        self._fresh = True
        self.stats.jacobian_evaluations += 1

    def _factor(self, h_lambda: float) -> None:
        if self._factored_for != h_lambda:
            self.backend.factor(self._jacobian, h_lambda)
            self._factored_for = h_lambda
            self.stats.factorizations += 1

    def _weighted_norm(self, residual: NDArray[Any], y: NDArray[Any], h_lambda: float) -> float:
        cfg = self.config
        magnitude = np.abs(y)
        floor = ROUNDOFF_FACTOR * _EPS * h_lambda * (self._abs_jacobian @ magnitude)
        weights = cfg.abs_tol + cfg.rel_tol * magnitude + np.asarray(floor).ravel()
        return float(np.max(np.abs(residual) / weights))

    def _can_refresh(self) -> bool:
        return self.config.jacobian_reuse is not JacobianReuse.NEVER and not self._fresh

    def _newton(
        self, stage: int, rj: NDArray[Any], h_lambda: float
    ) -> tuple[NDArray[Any], NDArray[Any], int, float]:
        cfg = self.config
        y = rj.copy()
        fy = self._rhs(y)
        residual = y - h_lambda * fy - rj
        norm = self._weighted_norm(residual, y, h_lambda)
        iterations = 0
        while norm > 1.0:
            if iterations >= cfg.max_iters:
                raise _Divergence(f"no convergence in {cfg.max_iters} iterations", norm)
            self._factor(h_lambda)
            y = y + self.backend.solve(-residual)
            fy = self._rhs(y)
            residual = y - h_lambda * fy - rj
            iterations += 1
            self.stats.newton_iterations += 1
            previous, norm = norm, self._weighted_norm(residual, y, h_lambda)
            if not np.isfinite(norm) or norm > cfg.divergence_factor * previous:
                raise _Divergence("Newton iteration diverged", norm)
            if norm > 1.0 and norm > cfg.slow_ratio * previous and self._can_refresh():
                logger.debug("stage %d: slow convergence (%.3g), refreshing Jacobian", stage, norm)
                self.evaluate_jacobian(y)
        self._fresh = False
        return y, fy, iterations, norm

    def _solve_stage(
        self, stage: int, rj: NDArray[Any], h_lambda: float
    ) -> tuple[NDArray[Any], NDArray[Any], int, float]:
        if self.config.jacobian_reuse is JacobianReuse.PER_STAGE:
            self.evaluate_jacobian(rj)
        while True:
            try:
                return self._newton(stage, rj, h_lambda)
            except _Divergence as failure:
                if not self._can_refresh():
                    raise StageFailureError(
                        f"stage {stage}: {failure.reason} "
                        f"(weighted residual {failure.residual:.3e})",
                        stage,
                        failure.residual,
                    ) from None
                logger.debug("stage %d: %s, retrying with a fresh Jacobian", stage, failure.reason)
                self.evaluate_jacobian(rj)

    def solve(self, h: float, blocks: NDArray[Any]) -> StageValues:
        """Stages for one step of size h from the external blocks y^[n-1] (shape (r, d))."""
        t = self.tableau
        dtype = np.result_type(blocks, float)
        prev = t.U @ blocks
        Y = np.empty((t.s, self.system.dim), dtype=dtype)
        F = np.empty_like(Y)
        if h == 0.0:
            for j in range(t.s):
                Y[j] = prev[j]
                F[j] = self._rhs(Y[j])
            return StageValues(Y=Y, F=F, newton_iters=[0] * t.s, residuals=[0.0] * t.s)

        policy = self.config.jacobian_reuse
        if policy is JacobianReuse.PER_STEP or self._jacobian is None:
            self.evaluate_jacobian(np.asarray(blocks[0], dtype=dtype))
        h_lambda = h * t.lam
        iterations: list[int] = []
        residuals: list[float] = []
        for j in range(t.s):
            rj = prev[j] + h * (t.A[j, :j] @ F[:j]) if j else prev[j].astype(dtype)
            Y[j], F[j], count, norm = self._solve_stage(j + 1, rj, h_lambda)
            iterations.append(count)
            residuals.append(norm)
        return StageValues(Y=Y, F=F, newton_iters=iterations, residuals=residuals)


def solve_stages(
    t: GlmTableau,
    system: OdeSystem,
    h: float,
    blocks: NDArray[Any],
    config: NewtonConfig | None = None,
) -> StageValues:
    """One-off stage solve with a fresh solver instance."""
    if h < 0:
        raise ValueError(f"step size must be nonnegative, got {h!r}")
    if blocks.shape != (t.r, system.dim):
        raise ValueError(
            f"Nordsieck blocks have shape {blocks.shape}, expected ({t.r}, {system.dim})"
        )
    return NewtonStageSolver(t, system, config).solve(h, blocks)
