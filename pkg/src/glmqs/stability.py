"""Stability matrix, stability polynomial and the A-/L-stability certificates.

On y' = ζy with ω = hζ one step maps y^[n] = M(ω) y^[n-1] where

    M(ω) = V + ω B (I - ωA)^(-1) U,        M(∞) = V - B A^(-1) U.

The stability polynomial is extracted in extended precision because the quadratic-form
check compares coefficients that cancel to zero.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any

import mpmath as mp
import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from .models.custom_error import PoleError, QuadraticFormError
from .models.reports import (
    LStabilityVerdict,
    QuadraticFormVerdict,
    ScanVerdict,
    StabilityMatrixSample,
    StabilityPolynomial,
    StabilityReport,
)
from .models.tableau import GlmTableau
from .utils import digits_tolerance, nilpotent_radius_tolerance, symmetric_log_grid
from .verification import row_sum_scale

logger = logging.getLogger(__name__)

POLY_DPS = 40
DEFAULT_GRID_POINTS = 2048
DEFAULT_Y_MIN = 1e-6
DEFAULT_Y_MAX = 1e9
DEFAULT_SCAN_TOL = 1e-8
POLE_TOL = 1e-12
_BATCH = 4096


def _check_pole(t: GlmTableau, omega: complex) -> None:
    if abs(1.0 - t.lam * omega) <= POLE_TOL * max(1.0, abs(t.lam * omega)):
        raise PoleError(f"{t.name}: omega = {omega!r} is at the resolvent pole 1/lambda")


def stability_matrix(t: GlmTableau, omega: complex) -> StabilityMatrixSample:
    """M(ω) by forward substitution with the lower-triangular I - ωA."""
    omega = complex(omega)
    if np.isinf(omega):
        M = infinity_matrix(t).astype(complex)
    else:
        _check_pole(t, omega)
        lhs = np.eye(t.s) - omega * t.A
        resolvent_u = scipy.linalg.solve_triangular(lhs, t.U.astype(complex), lower=True)
        M = t.V + omega * (t.B @ resolvent_u)
    eigenvalues = np.linalg.eigvals(M)
    return StabilityMatrixSample(
        omega=omega,
        M=M,
        spectral_radius=float(np.max(np.abs(eigenvalues))),
        eigenvalues=eigenvalues,
    )


def infinity_matrix(t: GlmTableau) -> NDArray[np.float64]:
    """M(∞) = V - B A^(-1) U."""
    return t.V - t.B @ scipy.linalg.solve_triangular(t.A, t.U, lower=True)


def infinity_radius(t: GlmTableau) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(infinity_matrix(t)))))


def stability_matrices(t: GlmTableau, omegas: ArrayLike) -> NDArray[np.complex128]:
    """Stacked M(ω) for a batch of finite ω, shape (n, r, r)."""
    w = np.asarray(omegas, dtype=complex).ravel()
    for omega in w:
        _check_pole(t, complex(omega))
    lhs = np.eye(t.s)[None, :, :] - w[:, None, None] * t.A[None, :, :]
    rhs = np.broadcast_to(t.U.astype(complex), (w.shape[0], t.s, t.r))
    resolvent_u = np.linalg.solve(lhs, rhs)
    return t.V[None, :, :] + w[:, None, None] * np.einsum("ij,njk->nik", t.B, resolvent_u)


def spectral_radii(t: GlmTableau, omegas: ArrayLike) -> NDArray[np.float64]:
    w = np.asarray(omegas, dtype=complex).ravel()
    radii = np.empty(w.shape[0])
    for start in range(0, w.shape[0], _BATCH):
        chunk = w[start : start + _BATCH]
        eig = np.linalg.eigvals(stability_matrices(t, chunk))
        radii[start : start + chunk.shape[0]] = np.max(np.abs(eig), axis=1)
    return radii


def scan_tolerance(t: GlmTableau) -> float:
    """Boundary slack: 1e-8, widened for tableaus printed with fewer digits."""
    return max(DEFAULT_SCAN_TOL, 10.0 * digits_tolerance(t.coeff_digits))


def scan_a_stability(
    t: GlmTableau,
    points: int = DEFAULT_GRID_POINTS,
    y_min: float = DEFAULT_Y_MIN,
    y_max: float = DEFAULT_Y_MAX,
    tolerance: float | None = None,
    workers: int = 1,
) -> tuple[ScanVerdict, NDArray[np.float64], NDArray[np.float64]]:
    """Spectral radius of M(iy) on a symmetric log grid, plus M(∞).

    M is analytic in the closed left half-plane (its only pole 1/λ is positive), so a
    bounded boundary and ρ(M(∞)) ≤ 1 certify A-stability at the resolution of the grid.

    Returns:
        The verdict and the sampled (y, ρ) arrays.
    """
    tol = scan_tolerance(t) if tolerance is None else tolerance
    ys = symmetric_log_grid(points, y_min, y_max)
    if workers > 1 and ys.shape[0] > _BATCH:
        chunks = np.array_split(ys, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda y: spectral_radii(t, 1j * y), chunks))
        radii = np.concatenate(parts)
    else:
        radii = spectral_radii(t, 1j * ys)
    worst = int(np.argmax(radii))
    inf_radius = infinity_radius(t)
    verdict = ScanVerdict(
        passed=bool(radii[worst] <= 1.0 + tol and inf_radius <= 1.0 + tol),
        worst_radius=float(radii[worst]),
        worst_omega=complex(0.0, ys[worst]),
        infinity_radius=inf_radius,
        points=int(ys.shape[0]),
        tolerance=tol,
    )
    logger.debug(
        "%s A-scan: worst radius %.17g at y = %.6g over %d points",
        t.name,
        verdict.worst_radius,
        ys[worst],
        verdict.points,
    )
    return verdict, ys, radii


def _charpoly(M: Any, r: int) -> list[Any]:
    """Faddeev–LeVerrier: det(ηI - M) = Σ_k coeffs[k] η^(r-k)."""
    identity = mp.eye(r)
    coeffs = [mp.mpf(1)]
    Mk = mp.zeros(r, r)
    for k in range(1, r + 1):
        Mk = M * Mk + coeffs[-1] * identity
        product = M * Mk
        coeffs.append(-mp.fsum(product[i, i] for i in range(r)) / k)
    return coeffs


def characteristic_coefficients(t: GlmTableau) -> NDArray[np.float64]:
    """G with (1-λω)^r det(ηI - M(ω)) = Σ_k Σ_j G[k, j] ω^j η^(r-k).

    Each η-coefficient is a polynomial of degree ≤ r in ω; it is fitted by least squares to
    samples at 2r+1 Chebyshev points of [-2, 0], away from the pole.
    """
    r = t.r
    n = 2 * r + 1
    with mp.workdps(POLY_DPS):
        A = mp.matrix(t.A.tolist())
        U = mp.matrix(t.U.tolist())
        B = mp.matrix(t.B.tolist())
        V = mp.matrix(t.V.tolist())
        lam = mp.mpf(t.lam)
        identity = mp.eye(t.s)
        nodes = [-1 - mp.cos(mp.pi * (2 * k + 1) / (2 * n)) for k in range(n)]
        samples = []
        for omega in nodes:
            M = V + omega * B * mp.inverse(identity - omega * A) * U
            scale = (1 - lam * omega) ** r
            samples.append([scale * c for c in _charpoly(M, r)])
        vandermonde = mp.matrix([[omega**j for j in range(r + 1)] for omega in nodes])
        G = np.zeros((r + 1, r + 1))
        for k in range(r + 1):
            values = mp.matrix([samples[i][k] for i in range(n)])
            solution, _ = mp.qr_solve(vandermonde, values)
            G[k, :] = [float(solution[j]) for j in range(r + 1)]
    return G


def coefficient_tolerance(t: GlmTableau) -> float:
    return digits_tolerance(t.coeff_digits) * row_sum_scale(t.B) * row_sum_scale(t.U)


def stability_polynomial(t: GlmTableau, tolerance: float | None = None) -> StabilityPolynomial:
    """(1-λω)^r det(ηI - M(ω)) = η^(r-2) ((1-λω)^r η² - p1(ω) η + p0(ω)).

    Raises:
        QuadraticFormError: if a coefficient of η^k, k < r-2, exceeds the tolerance.
    """
    tol = coefficient_tolerance(t) if tolerance is None else tolerance
    G = characteristic_coefficients(t)
    spurious = G[3:, :]
    max_spurious = float(np.max(np.abs(spurious))) if spurious.size else 0.0
    if max_spurious > tol:
        raise QuadraticFormError(
            f"{t.name}: stability polynomial is not quadratic; spurious coefficient "
            f"{max_spurious:.3e} exceeds {tol:.3e}"
        )
    return StabilityPolynomial(
        lam=t.lam,
        r=t.r,
        quad_leading=G[0],
        p1=-G[1],
        p0=G[2],
        spurious=spurious,
        max_spurious=max_spurious,
        tolerance=tol,
    )


def characteristic_value(t: GlmTableau, eta: complex, omega: complex) -> complex:
    """(1-λω)^r det(ηI - M(ω)) in double precision."""
    M = stability_matrix(t, omega).M
    return complex((1.0 - t.lam * omega) ** t.r * np.linalg.det(eta * np.eye(t.r) - M))


def left_half_plane_samples(count: int, seed: int = 0) -> NDArray[np.complex128]:
    """Deterministic ω with Re ω ≤ 0 and |ω| log-uniform in [1e-2, 1e2]."""
    rng = np.random.default_rng(seed)
    radius = 10.0 ** rng.uniform(-2.0, 2.0, count)
    angle = rng.uniform(0.5 * np.pi, 1.5 * np.pi, count)
    return radius * np.exp(1j * angle)


def spurious_eigenvalue_magnitude(t: GlmTableau, omegas: ArrayLike) -> float:
    """Largest of the r-2 smallest |eigenvalues| of M(ω) over the samples."""
    if t.r <= 2:
        return 0.0
    eig = np.linalg.eigvals(stability_matrices(t, omegas))
    magnitudes = np.sort(np.abs(eig), axis=1)
    return float(np.max(magnitudes[:, t.r - 3]))


def check_quadratic_form(t: GlmTableau, samples: int = 100, seed: int = 0) -> QuadraticFormVerdict:
    """Coefficient test on the stability polynomial, with eigenvalue magnitudes as evidence.

    A nilpotent block of index k moves by ε^(1/k) under coefficient rounding ε, so the
    eigenvalue bound is the radius tolerance for index r.
    """
    coef_tol = coefficient_tolerance(t)
    G = characteristic_coefficients(t)
    spurious = G[3:, :]
    max_spurious = float(np.max(np.abs(spurious))) if spurious.size else 0.0
    eig_tol = nilpotent_radius_tolerance(digits_tolerance(t.coeff_digits), t.r)
    max_eig = spurious_eigenvalue_magnitude(t, left_half_plane_samples(samples, seed))
    return QuadraticFormVerdict(
        passed=max_spurious <= coef_tol and max_eig <= eig_tol,
        max_spurious_coefficient=max_spurious,
        coefficient_tolerance=coef_tol,
        max_spurious_eigenvalue=max_eig,
        eigenvalue_tolerance=eig_tol,
        samples=samples,
    )


def check_l_stability(t: GlmTableau) -> LStabilityVerdict:
    """ρ(M(∞)) near zero and vanishing degree-r coefficients of every η-coefficient.

    For a quadratically stable tableau the latter are p1r and p0r.
    """
    G = characteristic_coefficients(t)
    r = t.r
    coef_tol = coefficient_tolerance(t)
    radius_tol = nilpotent_radius_tolerance(digits_tolerance(t.coeff_digits), r)
    radius = infinity_radius(t)
    tops = np.abs(G[1:, r])
    return LStabilityVerdict(
        passed=bool(radius <= radius_tol and np.max(tops) <= coef_tol),
        infinity_radius=radius,
        radius_tolerance=radius_tol,
        p1_top=float(-G[1, r]),
        p0_top=float(G[2, r]),
        coefficient_tolerance=coef_tol,
    )


def stability_report(
    t: GlmTableau,
    points: int = DEFAULT_GRID_POINTS,
    y_min: float = DEFAULT_Y_MIN,
    y_max: float = DEFAULT_Y_MAX,
    workers: int = 1,
) -> StabilityReport:
    scan, _, _ = scan_a_stability(t, points, y_min, y_max, workers=workers)
    return StabilityReport(
        a_stable_scan=scan,
        l_stable=check_l_stability(t),
        quadratic_form=check_quadratic_form(t),
    )


def order_one_polynomial(lam: float, v12: float) -> tuple[NDArray[np.float64], ...]:
    """Closed-form (quad_leading, p1, p0) for the p = 1 family in (λ, v12)."""
    quad = np.array([1.0, -2.0 * lam, lam * lam])
    p1 = np.array([1.0, 1.0 - v12 - 3.0 * lam, 0.0])
    p0 = np.array([0.0, -(lam + v12), 0.0])
    return quad, p1, p0


def order_one_roots(lam: float, v12: float, omega: complex) -> tuple[complex, complex]:
    """Closed-form roots η1, η2 of the p = 1 stability polynomial."""
    q = (1.0 - lam * omega) ** 2
    b = 1.0 + (1.0 - 3.0 * lam - v12) * omega
    c = -(lam + v12) * omega
    root = np.sqrt(complex(b * b - 4.0 * q * c))
    return (b - root) / (2.0 * q), (b + root) / (2.0 * q)
