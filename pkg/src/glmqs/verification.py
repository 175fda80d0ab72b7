"""Order conditions, inherent quadratic stability and the error constant of a tableau."""

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .models.custom_error import DegeneracyError
from .models.reports import ErrorConstantReport, IqsCertificate, ResidualReport
from .models.tableau import GlmTableau, OrderConditionSystem
from .utils import digits_tolerance

logger = logging.getLogger(__name__)


def _worst(residual: NDArray[np.float64]) -> tuple[float, tuple[int, int]]:
    index = np.unravel_index(int(np.argmax(np.abs(residual))), residual.shape)
    return float(abs(residual[index])), (int(index[0]) + 1, int(index[1]) + 1)


def row_sum_scale(matrix: NDArray[np.float64]) -> float:
    return max(1.0, float(np.max(np.sum(np.abs(matrix), axis=1))))


def order_condition_matrices(t: GlmTableau) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Residual matrices C - (A C K + U) and E - (B C K + V)."""
    ocs = OrderConditionSystem.for_tableau(t)
    CK = ocs.Cr @ ocs.Kr
    return ocs.Cr - (t.A @ CK + t.U), ocs.Er - (t.B @ CK + t.V)


def order_condition_residual(t: GlmTableau) -> ResidualReport:
    """Max-abs residuals of the stage-order and order conditions.

    Tolerances follow the printed digit count, scaled by the row-sum norm of A (stage
    relation) and B (order relation) since rounding there is amplified by those entries.
    """
    stage, order = order_condition_matrices(t)
    stage_value, stage_location = _worst(stage)
    order_value, order_location = _worst(order)
    tol = digits_tolerance(t.coeff_digits)
    report = ResidualReport(
        stage_residual=stage_value,
        stage_location=stage_location,
        order_residual=order_value,
        order_location=order_location,
        stage_tolerance=tol * row_sum_scale(t.A),
        order_tolerance=tol * row_sum_scale(t.B),
    )
    logger.debug(
        "%s order residuals: stage %.3e at U%s, order %.3e at V%s",
        t.name,
        stage_value,
        stage_location,
        order_value,
        order_location,
    )
    return report


def iqs_residuals(
    t: GlmTableau, X: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Rows 3..r of B·A - X·B and B·U - (X·V - V·X)."""
    ba = t.B @ t.A - X @ t.B
    bu = t.B @ t.U - (X @ t.V - t.V @ X)
    return ba[2:], bu[2:]


def iqs_structure(r: int, last_column: NDArray[np.float64]) -> NDArray[np.float64]:
    """X with zero first two rows, unit subdiagonal from row 3 and the given X[i, r] (i ≥ 3)."""
    X = np.zeros((r, r))
    for offset, i in enumerate(range(2, r)):
        X[i, i - 1] = 1.0
        X[i, r - 1] += last_column[offset]
    return X


def verify_iqs(t: GlmTableau) -> IqsCertificate:
    """Least-squares IQS certificate over the free entries X[i, r], i ≥ 3.

    Rows 1–2 of X never reach rows 3..r of either relation, so the minimum-norm solution
    leaves them zero. Both relations are affine in the free entries; the design matrix is
    read off by evaluating unit directions.
    """
    r = t.r
    tol = digits_tolerance(t.coeff_digits) * row_sum_scale(t.B) * row_sum_scale(t.A)
    if r <= 2:
        return IqsCertificate(X=np.zeros((r, r)), residual_BA=0.0, residual_BU=0.0, tolerance=tol)

    unknowns = r - 2

    def stacked(x: NDArray[np.float64]) -> NDArray[np.float64]:
        ba, bu = iqs_residuals(t, iqs_structure(r, x))
        return np.concatenate([ba.ravel(), bu.ravel()])

    offset = stacked(np.zeros(unknowns))
    design = np.column_stack(
        [stacked(np.eye(unknowns)[j]) - offset for j in range(unknowns)]
    )
    solution, *_ = scipy.linalg.lstsq(design, -offset)
    X = iqs_structure(r, solution)
    ba, bu = iqs_residuals(t, X)
    certificate = IqsCertificate(
        X=X,
        residual_BA=float(np.max(np.abs(ba))),
        residual_BU=float(np.max(np.abs(bu))),
        tolerance=tol,
    )
    logger.debug(
        "%s IQS residuals: BA %.3e, BU %.3e",
        t.name,
        certificate.residual_BA,
        certificate.residual_BU,
    )
    return certificate


def error_constant(t: GlmTableau) -> ErrorConstantReport:
    """Leading local-error coefficient E = |1/(p+1)! - b·c^p/p! + v·β|.

    Raises:
        DegeneracyError: if I - Ṽ is singular.
    """
    p = t.p
    b_row = np.array(t.B[0])
    v_row = np.array(t.V[0, 1:])
    B_tilde = np.array(t.B[1:, :])
    V_tilde = np.array(t.V[1:, 1:])
    cp = t.c**p / math.factorial(p)
    rhs = np.array([1.0 / math.factorial(p - i) for i in range(p)]) - B_tilde @ cp
    system = np.eye(p) - V_tilde
    try:
        beta = scipy.linalg.solve(system, rhs, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise DegeneracyError(f"{t.name}: I - V_tilde is singular ({e})") from e
    if not np.all(np.isfinite(beta)) or np.linalg.cond(system) > 1.0 / np.finfo(float).eps:
        raise DegeneracyError(f"{t.name}: I - V_tilde is singular")
    E = abs(1.0 / math.factorial(p + 1) - float(b_row @ cp) + float(v_row @ beta))
    return ErrorConstantReport(
        E=E, beta=beta, b_row=b_row, v_row=v_row, B_tilde=B_tilde, V_tilde=V_tilde
    )


@dataclass(frozen=True)
class TableauVerification:
    tableau: GlmTableau
    residuals: ResidualReport
    iqs: IqsCertificate
    error: ErrorConstantReport

    @property
    def passed(self) -> bool:
        return self.residuals.passed and self.iqs.passed


def verify_tableau(t: GlmTableau) -> TableauVerification:
    result = TableauVerification(
        tableau=t,
        residuals=order_condition_residual(t),
        iqs=verify_iqs(t),
        error=error_constant(t),
    )
    if not result.passed:
        logger.info("%s fails verification", t.name)
    return result
