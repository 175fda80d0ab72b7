from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray


@dataclass(frozen=True)
class NordsieckState:
    """External vector y^[n] at time t: block j approximates h^j y^(j)(t), j = 0..r-1."""

    t: float
    h: float
    blocks: NDArray[Any]

    @property
    def r(self) -> int:
        return int(self.blocks.shape[0])

    @property
    def dim(self) -> int:
        return int(self.blocks.shape[1])

    @property
    def solution(self) -> NDArray[Any]:
        return self.blocks[0]

    def copy(self) -> "NordsieckState":
        return NordsieckState(self.t, self.h, self.blocks.copy())


@dataclass
class SolverStats:
    steps: int = 0
    newton_iterations: int = 0
    jacobian_evaluations: int = 0
    factorizations: int = 0
    rhs_evaluations: int = 0

    def __iadd__(self, other: "SolverStats") -> "SolverStats":
        self.steps += other.steps
        self.newton_iterations += other.newton_iterations
        self.jacobian_evaluations += other.jacobian_evaluations
        self.factorizations += other.factorizations
        self.rhs_evaluations += other.rhs_evaluations
        return self

    def as_dict(self) -> dict[str, int]:
        return {
            "steps": self.steps,
            "newton_iterations": self.newton_iterations,
            "jacobian_evaluations": self.jacobian_evaluations,
            "factorizations": self.factorizations,
            "rhs_evaluations": self.rhs_evaluations,
        }


@dataclass
class StageValues:
    """Converged internal stages Y and stage derivatives F = f(Y), each of shape (s, d)."""

    Y: NDArray[Any]
    F: NDArray[Any]
    newton_iters: list[int]
    residuals: list[float]
    converged: bool = True


@dataclass
class IntegrationResult:
    y_end: NDArray[Any]
    t_end: float
    final_state: NordsieckState
    stats: SolverStats
    times: list[float] | None = None
    states: list[NDArray[Any]] | None = None
    start_source: str = ""
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return self.stats.steps

    def trajectory(self) -> NDArray[Any]:
        if self.states is None:
            return np.empty((0, self.y_end.shape[0]))
        return np.vstack(self.states)
