import math
from dataclasses import FrozenInstanceError

import numpy as np
import pytest
from glmqs.harness import estimate_order
from glmqs.integrator import exact_start, integrate, start_nordsieck, step
from glmqs.models.builtin_tableaus import BUILTIN_NAMES, builtin_tableau
from glmqs.models.custom_error import NotFoundError, StageFailureError
from glmqs.models.nordsieck import NordsieckState
from glmqs.models.ode_system import OdeSystem
from glmqs.problems import dahlquist, polynomial, prothero_robinson
from glmqs.solver import NewtonStageSolver
from glmqs.stability import stability_matrix


def _constant_system():
    return OdeSystem(
        name="constant",
        dim=2,
        rhs=lambda y: np.zeros(2),
        y0=np.array([1.0, 2.0]),
        jacobian=lambda y: np.zeros((2, 2)),
        exact_derivatives=lambda t, y, count: np.vstack([y] + [np.zeros(2)] * (count - 1)),
    )


def _decay_without_derivatives():
    return OdeSystem(
        name="decay",
        dim=1,
        rhs=lambda y: -y,
        y0=np.array([1.0]),
        jacobian=lambda y: np.array([[-1.0]]),
    )


@pytest.mark.unit
def test_exact_start_blocks_for_growth():
    t = builtin_tableau("GLMQS-2")
    state = start_nordsieck(t, dahlquist(1.0), 0.0, np.array([1.0]), 0.1)
    assert state.blocks[:, 0] == pytest.approx([1.0, 0.1, 0.01], rel=1e-14)
    assert state.t == 0.0 and state.h == 0.1


@pytest.mark.unit
def test_exact_start_blocks_for_cubic():
    t = builtin_tableau("GLMQS-3")
    system = polynomial(3)
    state = start_nordsieck(t, system, 0.0, system.y0, 0.1)
    assert state.blocks[:, 0] == pytest.approx([1.0, 0.1, 0.02, 0.006], rel=1e-14)
    assert state.blocks[:, 1] == pytest.approx([0.0, 0.1, 0.0, 0.0], abs=1e-15)


@pytest.mark.unit
def test_interpolated_start_without_derivatives():
    t = builtin_tableau("GLMQS-2")
    state = start_nordsieck(t, _decay_without_derivatives(), 0.0, np.array([1.0]), 0.1)
    assert state.blocks[0, 0] == 1.0
    assert state.blocks[1, 0] == pytest.approx(-0.1, abs=1e-14)
    assert state.blocks[2, 0] == pytest.approx(0.01, abs=1e-3)


@pytest.mark.unit
def test_start_rejects_nonpositive_step():
    t = builtin_tableau("GLMQS-1")
    with pytest.raises(ValueError, match="step size"):
        start_nordsieck(t, dahlquist(), 0.0, np.array([1.0]), 0.0)


@pytest.mark.unit
def test_exact_start_needs_exact_derivatives():
    with pytest.raises(NotFoundError, match="no exact derivatives"):
        exact_start(_decay_without_derivatives(), 0.0, np.array([1.0]), 0.1, 3)


@pytest.mark.unit
@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_constant_solution_is_preserved(name):
    result = integrate(builtin_tableau(name), _constant_system(), 0.0, 1.0, 10)
    assert np.allclose(result.y_end, [1.0, 2.0], atol=1e-14)
    assert result.stats.steps == 10


@pytest.mark.unit
@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_one_step_applies_the_stability_matrix(name):
    t = builtin_tableau(name)
    zeta, h = -3.0 + 1.0j, 0.1
    blocks = (np.random.default_rng(4).uniform(-1.0, 1.0, (t.r, 1)) + 0j) / np.arange(
        1, t.r + 1
    )[:, None]
    after = step(t, dahlquist(zeta), NordsieckState(0.0, h, blocks))
    expected = stability_matrix(t, h * zeta).M @ blocks
    assert np.allclose(after.blocks, expected, rtol=1e-10, atol=1e-12)
    assert after.t == pytest.approx(h)


@pytest.mark.unit
def test_linear_test_equation_matches_stability_matrix_for_random_pairs():
    t = builtin_tableau("GLMQS-2")
    rng = np.random.default_rng(21)
    h = 0.1
    for _ in range(50):
        omega = complex(-rng.uniform(0.0, 10.0), rng.uniform(-10.0, 10.0))
        blocks = rng.uniform(-1.0, 1.0, (t.r, 1)) + 1j * rng.uniform(-1.0, 1.0, (t.r, 1))
        after = step(t, dahlquist(omega / h), NordsieckState(0.0, h, blocks))
        expected = stability_matrix(t, omega).M @ blocks
        assert np.allclose(after.blocks, expected, rtol=1e-10, atol=1e-12)


@pytest.mark.unit
@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_n_steps_apply_the_stability_matrix_power(name):
    t = builtin_tableau(name)
    rng = np.random.default_rng(37)
    steps = 10
    for _ in range(50):
        omega = complex(-rng.uniform(0.0, 10.0), rng.uniform(-10.0, 10.0))
        h = rng.uniform(0.01, 0.5)
        system = dahlquist(omega / h)
        t_end = steps * h
        start = start_nordsieck(t, system, 0.0, system.y0, t_end / steps)
        result = integrate(t, system, 0.0, t_end, steps, start=start.copy())
        M = stability_matrix(t, start.h * system.parameters["zeta"]).M
        expected = np.linalg.matrix_power(M, steps) @ start.blocks
        gap = np.linalg.norm(result.final_state.blocks - expected)
        assert gap <= 1e-8 * np.linalg.norm(expected) + 1e-12 * np.linalg.norm(start.blocks)


@pytest.mark.unit
def test_step_rejects_mismatched_state():
    t = builtin_tableau("GLMQS-2")
    with pytest.raises(ValueError, match="shape"):
        step(t, dahlquist(), NordsieckState(0.0, 0.1, np.ones((2, 1))))


_METHOD_DEGREES = [
    (name, degree) for name in BUILTIN_NAMES for degree in range(builtin_tableau(name).p + 1)
]


@pytest.mark.unit
@pytest.mark.parametrize("name, degree", _METHOD_DEGREES)
def test_polynomials_up_to_the_order_are_exact(name, degree):
    t = builtin_tableau(name)
    system = polynomial(degree)
    result = integrate(t, system, 0.0, 1.0, 10)
    exact = system.exact_solution(1.0)
    assert abs(result.y_end[0] - exact[0]) <= 1e-8 * (1.0 + abs(exact[0]))
    assert result.y_end[1] == pytest.approx(1.0, abs=1e-12)
    assert result.t_end == pytest.approx(1.0)


# GLMQS-3 has a vanishing error constant, so on decay it runs one order high
# until round-off takes over at N = 320.
DECAY_ORDER_WINDOWS = {
    "GLMQS-1": (0.8, 1.2),
    "GLMQS-2": (1.8, 2.2),
    "GLMQS-3": (3.0, 4.2),
    "GLMQS-4": (3.8, 4.2),
}


@pytest.mark.unit
@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_observed_order_on_decay(name):
    t = builtin_tableau(name)
    system = dahlquist(-1.0)
    errors = []
    for steps in (40, 80, 160, 320):
        result = integrate(t, system, 0.0, 1.0, steps)
        errors.append(abs(result.y_end[0] - math.exp(-1.0)))
    low, high = DECAY_ORDER_WINDOWS[name]
    for coarse, fine in zip(errors, errors[1:]):
        assert low <= math.log2(coarse / fine) <= high


@pytest.mark.unit
@pytest.mark.parametrize("name", ["GLMQS-1", "GLMQS-2"])
def test_prothero_robinson_keeps_the_classical_order(name):
    t = builtin_tableau(name)
    system = prothero_robinson(-1e6)
    step_counts = (20, 40, 80)
    errors = []
    for steps in step_counts:
        result = integrate(t, system, 0.0, 1.0, steps)
        errors.append(abs(result.y_end[0] - math.cos(1.0)))
    assert errors[0] <= 0.05
    for k in range(len(step_counts) - 1):
        observed = estimate_order(errors[k], errors[k + 1], step_counts[k], step_counts[k + 1])
        assert observed == pytest.approx(t.p, abs=0.4)


@pytest.mark.unit
@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_stiff_decay_stays_inside_the_unit_envelope(name):
    result = integrate(
        builtin_tableau(name), prothero_robinson(-1e6), 0.0, 0.5, 5, store_trajectory=True
    )
    assert result.stats.steps == 5
    assert np.all(np.abs(result.trajectory()[:, 0]) <= 1.0 + 1e-3)


@pytest.mark.unit
def test_integrate_argument_checks():
    t = builtin_tableau("GLMQS-2")
    with pytest.raises(ValueError, match="t_end"):
        integrate(t, dahlquist(), 1.0, 1.0, 10)
    with pytest.raises(ValueError, match="at least 3 steps"):
        integrate(t, dahlquist(), 0.0, 1.0, 2)


@pytest.mark.unit
def test_stage_failure_carries_the_step_number(mocker):
    original = NewtonStageSolver.solve
    calls = []

    def flaky(self, h, blocks):
        calls.append(h)
        if len(calls) == 3:
            raise StageFailureError("iteration cap reached", 2, 1.0)
        return original(self, h, blocks)

    mocker.patch.object(NewtonStageSolver, "solve", flaky)
    with pytest.raises(StageFailureError) as excinfo:
        integrate(builtin_tableau("GLMQS-2"), dahlquist(), 0.0, 1.0, 10)
    assert excinfo.value.step == 3
    assert excinfo.value.stage == 2
    assert str(excinfo.value).startswith("step 3:")


@pytest.mark.unit
def test_trajectory_is_stored_on_request():
    t = builtin_tableau("GLMQS-1")
    result = integrate(t, dahlquist(-1.0), 0.0, 1.0, 8, store_trajectory=True)
    assert result.times is not None and len(result.times) == 9
    assert result.times[0] == 0.0
    assert result.times[-1] == pytest.approx(1.0)
    assert result.trajectory().shape == (9, 1)
    assert result.trajectory()[0, 0] == 1.0
    assert result.start_source == "exact"
    assert integrate(t, dahlquist(-1.0), 0.0, 1.0, 8).times is None


@pytest.mark.unit
def test_radau_start_source_is_reported():
    result = integrate(builtin_tableau("GLMQS-2"), _decay_without_derivatives(), 0.0, 1.0, 20)
    assert result.start_source == "radau"
    assert result.y_end[0] == pytest.approx(math.exp(-1.0), abs=1e-3)


@pytest.mark.unit
def test_supplied_start_is_used():
    t = builtin_tableau("GLMQS-1")
    system = dahlquist(-1.0)
    start = start_nordsieck(t, system, 0.0, system.y0, 0.1)
    first = integrate(t, system, 0.0, 1.0, 10, start=start.copy())
    second = integrate(t, system, 0.0, 1.0, 10)
    assert np.array_equal(first.y_end, second.y_end)


@pytest.mark.unit
def test_states_are_immutable_values():
    t = builtin_tableau("GLMQS-1")
    system = dahlquist(-1.0)
    start = start_nordsieck(t, system, 0.0, system.y0, 0.1)
    with pytest.raises(FrozenInstanceError):
        start.t = 0.5
    result = integrate(t, system, 0.0, 1.0, 10, start=start)
    assert start.t == 0.0
    assert start.blocks[0, 0] == 1.0
    assert result.final_state is not start
    assert result.final_state.t == pytest.approx(1.0)
