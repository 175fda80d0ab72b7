import math
from typing import Any

import numpy as np
from numpy.typing import NDArray


def uniform_abscissae(s: int) -> NDArray[np.float64]:
    """Equally spaced abscissae c_i = i/(s-1) on [0, 1]."""
    if s == 1:
        return np.zeros(1)
    return np.arange(s, dtype=float) / (s - 1)


def digits_tolerance(coeff_digits: int) -> float:
    """Verification tolerance tier for coefficients printed with the given digit count."""
    return 10.0 ** -(min(coeff_digits, 11) - 2)


def nilpotent_radius_tolerance(coefficient_tol: float, index: int) -> float:
    """Radius a nilpotent block of the given index can reach under perturbation of size tol."""
    if index <= 0:
        return 1e-6
    return max(1e-6, coefficient_tol ** (1.0 / index))


def inverse_factorials(n: int) -> NDArray[np.float64]:
    """Return [1/0!, 1/1!, ..., 1/(n-1)!]."""
    return np.array([1.0 / math.factorial(j) for j in range(n)])


def symmetric_log_grid(points: int, y_min: float, y_max: float) -> NDArray[np.float64]:
    """Imaginary-axis sample ordinates: `points` values, half negative, log-spaced in |y|."""
    if points <= 1:
        return np.zeros(1)
    half = max(points // 2, 1)
    positive = np.logspace(np.log10(y_min), np.log10(y_max), half)
    grid = np.concatenate([-positive[::-1], positive])
    if points % 2:
        grid = np.insert(grid, half, 0.0)
    return grid


def format_number(value: Any) -> str:
    """Repeatable text form with 17 significant digits; blanks for missing values."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return f"{float(value):.17g}"


def relative_l2(error: NDArray[Any], reference: NDArray[Any]) -> float:
    """Relative Euclidean norm ||error|| / ||reference||."""
    scale = float(np.linalg.norm(reference))
    if scale == 0.0:
        return float(np.linalg.norm(error))
    return float(np.linalg.norm(error)) / scale
