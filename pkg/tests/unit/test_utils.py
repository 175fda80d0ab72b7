import numpy as np
import pytest
from glmqs.utils import (
    digits_tolerance,
    format_number,
    inverse_factorials,
    nilpotent_radius_tolerance,
    relative_l2,
    symmetric_log_grid,
    uniform_abscissae,
)


@pytest.mark.unit
def test_uniform_abscissae():
    assert uniform_abscissae(3).tolist() == [0.0, 0.5, 1.0]
    assert uniform_abscissae(5).tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert uniform_abscissae(1).tolist() == [0.0]


@pytest.mark.unit
def test_digits_tolerance_tiers():
    assert digits_tolerance(16) == pytest.approx(1e-9)
    assert digits_tolerance(11) == pytest.approx(1e-9)
    assert digits_tolerance(10) == pytest.approx(1e-8)
    assert digits_tolerance(8) == pytest.approx(1e-6)


@pytest.mark.unit
def test_nilpotent_radius_tolerance():
    assert nilpotent_radius_tolerance(1e-9, 3) == pytest.approx(1e-3)
    assert nilpotent_radius_tolerance(1e-30, 2) == 1e-6
    assert nilpotent_radius_tolerance(1e-9, 0) == 1e-6


@pytest.mark.unit
def test_inverse_factorials():
    assert inverse_factorials(4) == pytest.approx([1.0, 1.0, 0.5, 1.0 / 6.0])


@pytest.mark.unit
def test_symmetric_log_grid_even():
    grid = symmetric_log_grid(4, 1e-2, 1e2)
    assert grid == pytest.approx([-100.0, -0.01, 0.01, 100.0])


@pytest.mark.unit
def test_symmetric_log_grid_odd_includes_zero():
    grid = symmetric_log_grid(5, 1e-2, 1e2)
    assert grid.shape == (5,)
    assert grid[2] == 0.0
    assert np.all(np.diff(grid) > 0)


@pytest.mark.unit
def test_symmetric_log_grid_single_point():
    assert symmetric_log_grid(1, 1e-6, 1e9).tolist() == [0.0]


@pytest.mark.unit
def test_format_number():
    assert format_number(None) == ""
    assert format_number(320) == "320"
    assert format_number(np.int64(5)) == "5"
    assert format_number(0.1) == "0.10000000000000001"
    assert format_number(2.5) == "2.5"


@pytest.mark.unit
def test_relative_l2():
    assert relative_l2(np.array([3.0, 4.0]), np.array([0.0, 10.0])) == pytest.approx(0.5)
    assert relative_l2(np.array([3.0, 4.0]), np.zeros(2)) == pytest.approx(5.0)
