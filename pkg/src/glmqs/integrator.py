"""Fixed-step GLM integration in Nordsieck form, including the starting procedure."""

import logging
from dataclasses import replace
from typing import Any

import numpy as np
import scipy.integrate
from numpy.typing import NDArray

from .models.configs import NewtonConfig
from .models.custom_error import NotFoundError, ReferenceFailureError, StageFailureError
from .models.nordsieck import IntegrationResult, NordsieckState, SolverStats
from .models.ode_system import OdeSystem
from .models.tableau import GlmTableau
from .solver import NewtonStageSolver
from .utils import inverse_factorials

logger = logging.getLogger(__name__)

START_RTOL = 1e-13
START_ATOL = 1e-15


def exact_start(system: OdeSystem, t0: float, y0: NDArray[Any], h: float, r: int) -> NDArray[Any]:
    """Blocks h^j y^(j)(t0) from the system's exact derivatives."""
    if system.exact_derivatives is None:
        raise NotFoundError(f"{system.name}: no exact derivatives for the starting values")
    derivatives = np.asarray(system.exact_derivatives(t0, np.asarray(y0), r))
    scales = np.array([h**j for j in range(r)])
    return scales[:, None] * derivatives


def radau_values(
    system: OdeSystem, t0: float, y0: NDArray[Any], times: NDArray[np.float64]
) -> NDArray[Any]:
    """Tight-tolerance Radau IIA solution at the given times (rows)."""

    def fun(t: float, y: NDArray[Any]) -> NDArray[Any]:
        return system.evaluate(y)

    jac: Any = None
    if system.jacobian is not None:
        jacobian = system.jacobian

        def jac(t: float, y: NDArray[Any]) -> Any:
            return jacobian(y)

    solution = scipy.integrate.solve_ivp(
        fun,
        (t0, float(times[-1])),
        np.asarray(y0),
        method="Radau",
        t_eval=times,
        rtol=START_RTOL,
        atol=START_ATOL,
        jac=jac,
    )
    if not solution.success:
        raise ReferenceFailureError(
            f"{system.name}: starting values failed ({solution.message})", float("nan")
        )
    return np.asarray(solution.y).T


def interpolated_start(
    system: OdeSystem, t0: float, y0: NDArray[Any], h: float, r: int
) -> NDArray[Any]:
    """Blocks from a Hermite fit in s = (t - t0)/h.

    Conditions: y(0) = y0, y'(0) = h f(y0) and reference values at s = 1..r-1. With the
    interpolant Σ a_j s^j, block j = j! a_j.
    """
    p = r - 1
    y0 = np.asarray(y0)
    nodes = np.arange(1, p + 1, dtype=float)
    values = radau_values(system, t0, y0, t0 + h * nodes)
    degree = p + 1
    rows = [np.eye(degree + 1)[0], np.eye(degree + 1)[1]]
    rows += [nodes[i] ** np.arange(degree + 1) for i in range(p)]
    matrix = np.vstack(rows)
    data = np.vstack([y0, h * system.evaluate(y0), values])
    coefficients = np.linalg.solve(matrix, data)
    return coefficients[:r] / inverse_factorials(r)[:, None]


def start_nordsieck(
    t: GlmTableau,
    system: OdeSystem,
    t0: float,
    y0: NDArray[Any],
    h: float,
) -> NordsieckState:
    """Initial external vector with block j ≈ h^j y^(j)(t0)."""
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h!r}")
    if system.exact_derivatives is not None:
        blocks = exact_start(system, t0, y0, h, t.r)
    else:
        blocks = interpolated_start(system, t0, y0, h, t.r)
    blocks[0] = np.asarray(y0)
    return NordsieckState(t=t0, h=h, blocks=blocks)


def advance(t: GlmTableau, solver: NewtonStageSolver, state: NordsieckState) -> NordsieckState:
    """y^[n] = h B F + V y^[n-1]."""
    stages = solver.solve(state.h, state.blocks)
    blocks = state.h * (t.B @ stages.F) + t.V @ state.blocks
    solver.stats.steps += 1
    return NordsieckState(t=state.t + state.h, h=state.h, blocks=blocks)


def step(
    t: GlmTableau,
    system: OdeSystem,
    state: NordsieckState,
    config: NewtonConfig | None = None,
) -> NordsieckState:
    """One step with a fresh stage solver."""
    if state.blocks.shape != (t.r, system.dim):
        raise ValueError(
            f"state has shape {state.blocks.shape}, expected ({t.r}, {system.dim})"
        )
    return advance(t, NewtonStageSolver(t, system, config), state)


def integrate(
    t: GlmTableau,
    system: OdeSystem,
    t0: float,
    t_end: float,
    steps: int,
    config: NewtonConfig | None = None,
    store_trajectory: bool = False,
    start: NordsieckState | None = None,
) -> IntegrationResult:
    """Exactly `steps` uniform steps of h = (t_end - t0)/steps from t0.

    The starting procedure works on its own reference values and uses none of the steps.

    Raises:
        StageFailureError: annotated with the 1-based step number.
    """
    if not t_end > t0:
        raise ValueError(f"t_end must exceed t0, got [{t0!r}, {t_end!r}]")
    if steps < t.p + 1:
        raise ValueError(f"{t.name} needs at least {t.p + 1} steps, got {steps}")
    h = (t_end - t0) / steps
    state = start or start_nordsieck(t, system, t0, system.y0, h)
    solver = NewtonStageSolver(t, system, config)
    times: list[float] | None = [t0] if store_trajectory else None
    states: list[NDArray[Any]] | None = [state.solution.copy()] if store_trajectory else None

    for n in range(1, steps + 1):
        try:
            state = advance(t, solver, state)
        except StageFailureError as e:
            raise e.at_step(n) from e
        state = replace(state, t=t0 + n * h)
        if times is not None and states is not None:
            times.append(state.t)
            states.append(state.solution.copy())

    stats: SolverStats = solver.stats
    logger.debug(
        "%s on %s: %d steps, %d Newton iterations, %d Jacobians",
        t.name,
        system.name,
        stats.steps,
        stats.newton_iterations,
        stats.jacobian_evaluations,
    )
    return IntegrationResult(
        y_end=state.solution.copy(),
        t_end=state.t,
        final_state=state,
        stats=stats,
        times=times,
        states=states,
        start_source="exact" if system.exact_derivatives is not None else "radau",
    )
