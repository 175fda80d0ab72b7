import numpy as np
import pytest
from glmqs.construct import (
    FREE_PARAMETERS,
    assemble_from_parameters,
    certification_checks,
    certify_published,
    optimize_error_constant,
)
from glmqs.models.builtin_tableaus import builtin_tableau
from glmqs.models.configs import FreeParameterSet
from glmqs.models.custom_error import ConfigError, InfeasibleError
from glmqs.verification import error_constant, verify_tableau

GLMQS_1 = builtin_tableau("GLMQS-1")
GLMQS_2 = builtin_tableau("GLMQS-2")


def _p1_printed_point():
    return FreeParameterSet.point(lam=GLMQS_1.lam, v12=float(GLMQS_1.V[0, 1]))


def _p2_printed_point():
    return FreeParameterSet.point(lam=GLMQS_2.lam, v13=float(GLMQS_2.V[0, 2]))


@pytest.mark.unit
def test_free_parameters_per_order():
    assert FREE_PARAMETERS == {1: ("lam", "v12"), 2: ("lam", "v13")}


@pytest.mark.unit
def test_order_one_recovers_the_published_tableau():
    t = assemble_from_parameters(1, _p1_printed_point())
    for key in ("c", "A", "U", "B", "V"):
        assert np.allclose(getattr(t, key), getattr(GLMQS_1, key), atol=1e-9), key
    assert t.p == 1 and t.coeff_digits == 16


@pytest.mark.unit
def test_order_one_interior_point_satisfies_the_order_conditions():
    t = assemble_from_parameters(1, FreeParameterSet.point(lam=0.5, v12=-0.5), name="interior")
    residuals = verify_tableau(t).residuals
    assert residuals.stage_residual <= 1e-10
    assert residuals.order_residual <= 1e-10
    assert t.name == "interior"


@pytest.mark.unit
def test_assembly_is_deterministic():
    params = FreeParameterSet.point(lam=0.5, v12=-0.5)
    first = assemble_from_parameters(1, params)
    second = assemble_from_parameters(1, params)
    assert np.array_equal(first.B, second.B)
    assert np.array_equal(first.V, second.V)


@pytest.mark.unit
def test_order_two_construction_at_the_published_point():
    t = assemble_from_parameters(2, _p2_printed_point())
    lam = GLMQS_2.lam
    assert t.lam == lam
    assert np.allclose(t.c, GLMQS_2.c)
    assert np.allclose(t.A, GLMQS_2.A, atol=1e-15)
    # The published third column of U is not consistent with stage order 2.
    assert np.allclose(t.U[:, :2], GLMQS_2.U[:, :2], atol=1e-15)
    assert t.U[1, 2] == pytest.approx(GLMQS_2.U[1, 2] - 0.125, abs=1e-14)
    assert t.V[0, 2] == GLMQS_2.V[0, 2]
    assert t.V[1, 2] == pytest.approx(0.25 - lam, abs=1e-12)
    assert t.B[2] == pytest.approx([-2.0, 2.0, 0.0], abs=1e-12)
    assert t.B[1, 1] == pytest.approx(1.5 + 2.0 * lam, abs=1e-12)
    assert t.B[1, 0] == pytest.approx(-0.5 - 2.0 * lam, abs=1e-12)
    verification = verify_tableau(t)
    assert verification.residuals.stage_residual <= 1e-10
    assert verification.residuals.order_residual <= 1e-10
    assert verification.iqs.passed


@pytest.mark.unit
def test_order_two_error_constant_at_the_published_point():
    # The order-consistent U moves the first rows of B and V, and E with them.
    t = assemble_from_parameters(2, _p2_printed_point())
    assert t.B[0, 2] == pytest.approx(-0.47016, abs=5e-4)
    assert t.V[0, 1] == pytest.approx(-0.70514, abs=5e-4)
    assert error_constant(t).E == pytest.approx(0.10663, abs=5e-4)
    assert error_constant(GLMQS_2).E == pytest.approx(0.0195824, abs=1e-5)


@pytest.mark.unit
def test_unsupported_order():
    with pytest.raises(ConfigError, match="p = 1 or 2"):
        assemble_from_parameters(3, FreeParameterSet.point(lam=1.0, v12=0.0))


@pytest.mark.unit
def test_missing_free_parameter():
    with pytest.raises(ConfigError, match="needs v13"):
        assemble_from_parameters(2, FreeParameterSet.point(lam=0.4, v12=0.0))


@pytest.mark.unit
def test_unexpected_free_parameter():
    params = FreeParameterSet.point(lam=0.4, v12=0.0, v13=0.1)
    with pytest.raises(ConfigError, match="has no parameter v13"):
        assemble_from_parameters(1, params)


@pytest.mark.unit
def test_free_parameter_box():
    bounds = FreeParameterSet.box(lam=(0.2, 0.8), v12=(-1.0, 0.0))
    assert bounds.names == ["lam", "v12"]
    assert bounds.values == {"lam": 0.5, "v12": -0.5}
    assert bounds.limits("v12") == (-1.0, 0.0)
    assert bounds.clip("lam", 0.95) == 0.8
    assert bounds.clip("v12", -1.5) == -1.0
    assert bounds.clip("v12", -0.25) == -0.25
    unbounded = FreeParameterSet(values={"lam": 0.4})
    assert unbounded.limits("lam") == (0.4, 0.4)
    assert unbounded.clip("lam", 1.0) == 0.4
    with pytest.raises(ConfigError, match="outside bounds"):
        bounds.with_values(lam=0.9)


@pytest.mark.unit
def test_compass_search_stays_in_the_box(mocker):
    mocker.patch("glmqs.construct._feasible", return_value=(True, 1.0, 0.0))
    bounds = FreeParameterSet.box(lam=(0.4, 0.6), v12=(-0.6, -0.4))
    result = optimize_error_constant(1, bounds, screen_points=2, max_evaluations=8)
    assert len(result.optimizer_trace) > 4
    for entry in result.optimizer_trace:
        assert 0.4 <= entry["lam"] <= 0.6
        assert -0.6 <= entry["v12"] <= -0.4
    assert result.E == min(e["E"] for e in result.optimizer_trace if e["feasible"])


@pytest.mark.unit
def test_degenerate_box_reproduces_the_published_error_constant():
    lam, v12 = GLMQS_1.lam, float(GLMQS_1.V[0, 1])
    bounds = FreeParameterSet.box(lam=(lam, lam), v12=(v12, v12))
    result = optimize_error_constant(1, bounds, screen_points=3, scan_points=256)
    assert result.E == pytest.approx(0.22741, abs=1e-4)
    assert result.feasible
    assert result.parameters == {"lam": lam, "v12": v12}
    assert len(result.optimizer_trace) == 1
    assert result.tableau.name == "optimized-p1"
    assert {check.name for check in result.checks} >= {"order", "a_stability", "l_stability"}


@pytest.mark.unit
def test_infeasible_box(mocker):
    mocker.patch("glmqs.construct._feasible", return_value=(False, 1.5, 0.0))
    bounds = FreeParameterSet.box(lam=(0.4, 0.6), v12=(-0.6, -0.4))
    with pytest.raises(InfeasibleError, match="no Schur-feasible point"):
        optimize_error_constant(1, bounds, screen_points=2)


@pytest.mark.unit
def test_certification_checks_names():
    names = [check.name for check in certification_checks(GLMQS_1, grid_points=256)]
    assert names == [
        "stage_order",
        "order",
        "iqs",
        "quadratic_form",
        "a_stability",
        "l_stability",
        "error_constant",
    ]


@pytest.mark.unit
@pytest.mark.parametrize("name", ["GLMQS-1", "GLMQS-3"])
def test_certify_published_passes(name):
    result = certify_published(name, grid_points=512)
    assert result.passed, [c for c in result.checks if not c.passed]
    assert result.printed_E == builtin_tableau(name).printed_error_constant
    assert result.grid_points == 512


@pytest.mark.unit
def test_certify_published_reports_the_stage_order_misprint():
    result = certify_published("GLMQS-2", grid_points=256)
    by_name = {check.name: check for check in result.checks}
    assert not by_name["stage_order"].passed
    assert by_name["stage_order"].value == pytest.approx(0.125, abs=1e-12)
    assert by_name["a_stability"].passed
    assert not result.passed
