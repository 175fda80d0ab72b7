"""Result records returned by verification, stability analysis, construction and studies."""

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .tableau import GlmTableau


@dataclass(frozen=True)
class ResidualReport:
    """Max-abs residuals of the stage-order and order relations, with worst 1-based locations."""

    stage_residual: float
    stage_location: tuple[int, int]
    order_residual: float
    order_location: tuple[int, int]
    stage_tolerance: float
    order_tolerance: float

    @property
    def passed(self) -> bool:
        return (
            self.stage_residual <= self.stage_tolerance
            and self.order_residual <= self.order_tolerance
        )


@dataclass(frozen=True, eq=False)
class IqsCertificate:
    X: NDArray[np.float64]
    residual_BA: float
    residual_BU: float
    tolerance: float = 0.0

    @property
    def passed(self) -> bool:
        return max(self.residual_BA, self.residual_BU) <= self.tolerance


@dataclass(frozen=True, eq=False)
class ErrorConstantReport:
    E: float
    beta: NDArray[np.float64]
    b_row: NDArray[np.float64]
    v_row: NDArray[np.float64]
    B_tilde: NDArray[np.float64]
    V_tilde: NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class StabilityMatrixSample:
    omega: complex
    M: NDArray[np.complex128]
    spectral_radius: float
    eigenvalues: NDArray[np.complex128]


@dataclass(frozen=True, eq=False)
class StabilityPolynomial:
    """(1-λω)^r det(ηI - M(ω)) = η^(r-2) (quad_leading η² - p1 η + p0).

    Each polynomial is stored as ascending coefficients in ω. `spurious` holds the coefficient
    polynomials of η^k for k < r-2, which vanish for a quadratically stable method.
    """

    lam: float
    r: int
    quad_leading: NDArray[np.float64]
    p1: NDArray[np.float64]
    p0: NDArray[np.float64]
    spurious: NDArray[np.float64]
    max_spurious: float
    tolerance: float

    @property
    def leading_power(self) -> int:
        return self.r - 2

    def evaluate(self, eta: complex, omega: complex) -> complex:
        q = np.polynomial.polynomial.polyval(omega, self.quad_leading)
        b = np.polynomial.polynomial.polyval(omega, self.p1)
        c = np.polynomial.polynomial.polyval(omega, self.p0)
        return complex(eta ** (self.r - 2) * (q * eta * eta - b * eta + c))

    def p1_top(self) -> float:
        return float(self.p1[self.r]) if self.p1.shape[0] > self.r else 0.0

    def p0_top(self) -> float:
        return float(self.p0[self.r]) if self.p0.shape[0] > self.r else 0.0


@dataclass(frozen=True)
class ScanVerdict:
    passed: bool
    worst_radius: float
    worst_omega: complex
    infinity_radius: float
    points: int
    tolerance: float


@dataclass(frozen=True)
class LStabilityVerdict:
    passed: bool
    infinity_radius: float
    radius_tolerance: float
    p1_top: float
    p0_top: float
    coefficient_tolerance: float
    polynomial_available: bool = True


@dataclass(frozen=True)
class QuadraticFormVerdict:
    passed: bool
    max_spurious_coefficient: float
    coefficient_tolerance: float
    max_spurious_eigenvalue: float
    eigenvalue_tolerance: float
    samples: int


@dataclass(frozen=True)
class StabilityReport:
    a_stable_scan: ScanVerdict
    l_stable: LStabilityVerdict
    quadratic_form: QuadraticFormVerdict

    @property
    def passed(self) -> bool:
        return self.a_stable_scan.passed and self.l_stable.passed and self.quadratic_form.passed


@dataclass(frozen=True)
class CheckOutcome:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""


@dataclass(eq=False)
class ConstructionResult:
    tableau: GlmTableau
    E: float
    feasible: bool
    worst_boundary_radius: float
    infinity_radius: float
    parameters: dict[str, float] = field(default_factory=dict)
    optimizer_trace: list[dict[str, Any]] = field(default_factory=list)
    checks: list[CheckOutcome] = field(default_factory=list)
    printed_E: float | None = None
    grid_points: int = 0

    @property
    def passed(self) -> bool:
        return self.feasible and all(check.passed for check in self.checks)


@dataclass(frozen=True)
class ConvergenceRow:
    method: str
    N: int
    h: float
    error: float | None
    observed_p: float | None
    failure: str | None = None


@dataclass(frozen=True, eq=False)
class ReferenceResult:
    y: NDArray[Any]
    gap: float
    steps: int
    source: str


@dataclass(eq=False)
class StudyResult:
    """Rows of a convergence study, in (method, N) order, and the reference they share."""

    name: str
    reference: ReferenceResult
    rows: list[ConvergenceRow]
    nominal_orders: dict[str, int]
    config: dict[str, Any] = field(default_factory=dict)
    paths: dict[str, str] = field(default_factory=dict)

    def rows_for(self, method: str) -> list[ConvergenceRow]:
        return [row for row in self.rows if row.method == method]

    def failures(self) -> list[ConvergenceRow]:
        return [row for row in self.rows if row.failure is not None]


@dataclass(eq=False)
class DiffusionSweep:
    """Solution norms over time and end-of-window profiles for several diffusion coefficients.

    `norms` rows are (d, t, ||u||_2); `profiles` rows are (d, M, x, u) with the Dirichlet
    end points included.
    """

    method: str
    norms: list[tuple[float, float, float]]
    profiles: list[tuple[float, int, float, float]]
    paths: dict[str, str] = field(default_factory=dict)
