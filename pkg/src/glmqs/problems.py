"""Benchmark systems: van der Pol, Burgers and Gray–Scott by the method of lines, plus
synthetic systems with known solutions."""

import logging
import math
from typing import Any, Callable

import mpmath as mp
import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray

from .models.configs import BurgersConfig, GrayScottConfig, VdpConfig
from .models.custom_error import ConfigError, NotFoundError
from .models.ode_system import JacobianStructure, OdeSystem

logger = logging.getLogger(__name__)

TAYLOR_DPS = 40
MAX_POLYNOMIAL_DEGREE = 6


def vdp_initial_slope(epsilon: float) -> float:
    """z(0) on the slow manifold through y(0) = 2, series truncated after ε³."""
    e = epsilon
    return -2.0 / 3.0 + 10.0 / 81.0 * e - 292.0 / 2187.0 * e**2 - 1814.0 / 19683.0 * e**3


def _cauchy(x: list[Any], y: list[Any], n: int) -> Any:
    return mp.fsum(x[i] * y[n - i] for i in range(n + 1))


def _vdp_forward_series(eps: Any, a0: Any, b0: Any, terms: int) -> tuple[list[Any], list[Any]]:
    a, b = [a0], [b0]
    for n in range(terms - 1):
        square = [_cauchy(a, a, m) for m in range(n + 1)]
        a.append(b[n] / (n + 1))
        b.append((b[n] - _cauchy(square, b, n) - a[n]) / (eps * (n + 1)))
    return a, b


def _vdp_slow_series(eps: Any, a0: Any, b0: Any, terms: int) -> tuple[list[Any], list[Any]]:
    """Series of the smooth solution: the recursion is solved for b_n from b_{n+1}.

    This drops the fast transient that the rounding of z(0) would otherwise excite,
    whose k-th derivative grows like ε^-k.
    """
    depth = terms + 8
    b = [b0] + [mp.mpf(0)] * depth
    denominator = 1 - a0 * a0
    tolerance = mp.mpf(10) ** (-(TAYLOR_DPS - 5))
    for _ in range(200):
        a = [a0] + [b[n] / (n + 1) for n in range(depth)]
        square = [_cauchy(a, a, m) for m in range(depth + 1)]
        change = mp.mpf(0)
        for n in range(1, depth):
            tail = mp.fsum(square[i] * b[n - i] for i in range(1, n + 1))
            updated = (eps * (n + 1) * b[n + 1] + tail + a[n]) / denominator
            change = max(change, abs(updated - b[n]))
            b[n] = updated
            a[n + 1] = b[n] / (n + 1)
        if change <= tolerance * (1 + abs(b[1])):
            break
    return [a0] + [b[n] / (n + 1) for n in range(terms - 1)], b[:terms]


def vdp_taylor_derivatives(epsilon: float, y: NDArray[Any], count: int) -> NDArray[np.float64]:
    """Derivatives 0..count-1 of the van der Pol solution through y.

    With y = Σ a_n τ^n and z = Σ b_n τ^n the coefficients satisfy
        (n+1) a_{n+1} = b_n,   ε (n+1) b_{n+1} = b_n - (y²z)_n - a_n.
    When ε is small against |1 - y²| the series of the smooth solution is returned.
    """
    with mp.workdps(TAYLOR_DPS):
        eps = mp.mpf(epsilon)
        a0, b0 = mp.mpf(float(y[0])), mp.mpf(float(y[1]))
        terms = max(count, 1)
        if eps * (terms + 8) < 0.5 * abs(1 - a0 * a0):
            a, b = _vdp_slow_series(eps, a0, b0, terms)
        else:
            a, b = _vdp_forward_series(eps, a0, b0, terms)
        rows = [
            [float(a[k] * math.factorial(k)), float(b[k] * math.factorial(k))]
            for k in range(count)
        ]
    return np.array(rows)


def vdp_system(cfg: VdpConfig | None = None) -> OdeSystem:
    """y' = z, z' = ((1 - y²) z - y) / ε with y(0) = 2 on the slow manifold."""
    cfg = cfg or VdpConfig()
    eps = cfg.epsilon

    def rhs(u: NDArray[Any]) -> NDArray[Any]:
        y, z = u
        return np.array([z, ((1.0 - y * y) * z - y) / eps])

    def jacobian(u: NDArray[Any]) -> NDArray[Any]:
        y, z = u
        return np.array([[0.0, 1.0], [(-2.0 * y * z - 1.0) / eps, (1.0 - y * y) / eps]])

    def derivatives(t: float, u: NDArray[Any], count: int) -> NDArray[Any]:
        return vdp_taylor_derivatives(eps, u, count)

    return OdeSystem(
        name="vdp",
        dim=2,
        rhs=rhs,
        y0=np.array([2.0, vdp_initial_slope(eps)]),
        t0=cfg.t0,
        t_end=cfg.T,
        jacobian=jacobian,
        structure=JacobianStructure.dense(),
        exact_derivatives=derivatives,
        parameters={"epsilon": eps},
    )


def burgers_grid(cfg: BurgersConfig) -> NDArray[np.float64]:
    """Interior nodes x_1..x_{M-2}; the Dirichlet end points are not unknowns."""
    return np.arange(1, cfg.M - 1) * cfg.k


def burgers_system(cfg: BurgersConfig | None = None) -> OdeSystem:
    """u_t = -u u_x + d u_xx with sign-aware first-order upwinding and central diffusion."""
    cfg = cfg or BurgersConfig()
    k, d = cfg.k, cfg.d
    n = cfg.M - 2
    x = burgers_grid(cfg)

    def rhs(u: NDArray[Any]) -> NDArray[Any]:
        padded = np.concatenate(([0.0], u, [0.0]))
        left, centre, right = padded[:-2], padded[1:-1], padded[2:]
        convection = np.where(centre >= 0.0, centre - left, right - centre) / k
        return -centre * convection + d * (right - 2.0 * centre + left) / (k * k)

    def jacobian(u: NDArray[Any]) -> sp.csc_matrix:
        padded = np.concatenate(([0.0], u, [0.0]))
        left, centre, right = padded[:-2], padded[1:-1], padded[2:]
        forward = centre >= 0.0
        diffusion = d / (k * k)
        main = np.where(forward, -(2.0 * centre - left), -(right - 2.0 * centre)) / k
        main = main - 2.0 * diffusion
        lower = np.where(forward, centre / k, 0.0)[1:] + diffusion
        upper = np.where(forward, 0.0, -centre / k)[:-1] + diffusion
        return sp.diags([lower, main, upper], [-1, 0, 1], shape=(n, n), format="csc")

    return OdeSystem(
        name="burgers",
        dim=n,
        rhs=rhs,
        y0=np.sin(np.pi * x / cfg.L),
        t0=0.0,
        t_end=cfg.T,
        jacobian=jacobian,
        structure=JacobianStructure.banded(1, 1),
        parameters={"d": d, "L": cfg.L, "M": cfg.M, "k": k},
    )


def neumann_laplacian_1d(M: int, k: float) -> sp.csc_matrix:
    """Second difference with reflected ghost cells φ_{-1} = φ_0 and φ_M = φ_{M-1}."""
    main = np.full(M, -2.0)
    main[0] = main[-1] = -1.0
    off = np.ones(M - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format="csc") / (k * k)


def neumann_laplacian_2d(M: int, k: float) -> sp.csc_matrix:
    """Five-point Laplacian on an M×M cell grid, row-major ordering."""
    D = neumann_laplacian_1d(M, k)
    identity = sp.identity(M, format="csc")
    return (sp.kron(identity, D) + sp.kron(D, identity)).tocsc()


def grayscott_initial_state(cfg: GrayScottConfig) -> NDArray[np.float64]:
    """u ≡ 1 and v ≡ 0 except a seeded uniform perturbation in the centred square."""
    M, L = cfg.M, cfg.L
    centres = (np.arange(M) + 0.5) * cfg.k
    half = 0.5 * cfg.region_fraction * L
    inside_1d = np.abs(centres - 0.5 * L) <= half
    inside = np.outer(inside_1d, inside_1d)
    rng = np.random.default_rng(cfg.seed)
    u = np.ones((M, M))
    v = np.zeros((M, M))
    v[inside] = cfg.amplitude * rng.uniform(0.0, 1.0, int(np.count_nonzero(inside)))
    return np.concatenate([u.ravel(), v.ravel()])


def grayscott_system(cfg: GrayScottConfig | None = None) -> OdeSystem:
    """u_t = d1 Δu - uv² + F(1-u),  v_t = d2 Δv + uv² - (F+κ)v on a cell-centred grid."""
    cfg = cfg or GrayScottConfig()
    M, k = cfg.M, cfg.k
    cells = M * M
    lap = neumann_laplacian_2d(M, k)
    feed, kill = cfg.F, cfg.kappa

    def laplacian(phi: NDArray[Any]) -> NDArray[Any]:
        grid = phi.reshape(M, M)
        padded = np.pad(grid, 1, mode="edge")
        total = (
            padded[:-2, 1:-1] + padded[2:, 1:-1] + padded[1:-1, :-2] + padded[1:-1, 2:]
        ) - 4.0 * grid
        return (total / (k * k)).ravel()

    def rhs(state: NDArray[Any]) -> NDArray[Any]:
        u, v = state[:cells], state[cells:]
        uvv = u * v * v
        du = cfg.d1 * laplacian(u) - uvv + feed * (1.0 - u)
        dv = cfg.d2 * laplacian(v) + uvv - (feed + kill) * v
        return np.concatenate([du, dv])

    def jacobian(state: NDArray[Any]) -> sp.csc_matrix:
        u, v = state[:cells], state[cells:]
        return sp.bmat(
            [
                [cfg.d1 * lap + sp.diags(-v * v - feed), sp.diags(-2.0 * u * v)],
                [sp.diags(v * v), cfg.d2 * lap + sp.diags(2.0 * u * v - (feed + kill))],
            ],
            format="csc",
        )

    block = (abs(lap) + sp.identity(cells)).tocsc()
    coupling = sp.identity(cells, format="csc")
    pattern = sp.bmat([[block, coupling], [coupling, block]], format="csc")

    return OdeSystem(
        name="grayscott",
        dim=2 * cells,
        rhs=rhs,
        y0=grayscott_initial_state(cfg),
        t0=0.0,
        t_end=cfg.T,
        jacobian=jacobian,
        structure=JacobianStructure.sparse(pattern),
        parameters={
            "d1": cfg.d1,
            "d2": cfg.d2,
            "F": feed,
            "kappa": kill,
            "M": M,
            "seed": cfg.seed,
        },
    )


def dahlquist(zeta: complex = -1.0, y0: complex = 1.0, t_end: float = 1.0) -> OdeSystem:
    """y' = ζy; complex ζ gives a complex state."""
    dtype = complex if isinstance(zeta, complex) or isinstance(y0, complex) else float
    zeta = dtype(zeta)
    start = np.array([y0], dtype=dtype)

    def rhs(y: NDArray[Any]) -> NDArray[Any]:
        return zeta * y

    def jacobian(y: NDArray[Any]) -> NDArray[Any]:
        return np.array([[zeta]], dtype=dtype)

    def derivatives(t: float, y: NDArray[Any], count: int) -> NDArray[Any]:
        return np.array([[zeta**j * y[0]] for j in range(count)], dtype=dtype)

    def solution(t: float) -> NDArray[Any]:
        return start * np.exp(zeta * t)

    return OdeSystem(
        name="dahlquist",
        dim=1,
        rhs=rhs,
        y0=start,
        t0=0.0,
        t_end=t_end,
        jacobian=jacobian,
        exact_derivatives=derivatives,
        exact_solution=solution,
        parameters={"zeta": zeta},
    )


def polynomial(
    degree: int = 3, coefficients: list[float] | None = None, t_end: float = 1.0
) -> OdeSystem:
    """y(t) = Σ c_i t^i (default all ones), as the autonomous system (y, t)' = (y'(t), 1)."""
    if not 0 <= degree <= MAX_POLYNOMIAL_DEGREE:
        raise ConfigError(f"problem.degree: must be in [0, {MAX_POLYNOMIAL_DEGREE}], got {degree}")
    coeffs = np.ones(degree + 1) if coefficients is None else np.asarray(coefficients, float)
    if coeffs.shape != (degree + 1,):
        raise ConfigError(f"problem.coefficients: expected {degree + 1} values")
    poly = np.polynomial.Polynomial(coeffs)

    def rhs(state: NDArray[Any]) -> NDArray[Any]:
        return np.array([poly.deriv(1)(state[1]) if degree else 0.0, 1.0])

    def jacobian(state: NDArray[Any]) -> NDArray[Any]:
        slope = poly.deriv(2)(state[1]) if degree >= 2 else 0.0
        return np.array([[0.0, slope], [0.0, 0.0]])

    def derivatives(t: float, state: NDArray[Any], count: int) -> NDArray[Any]:
        tau = state[1]
        rows = [np.array(state, dtype=float)]
        for j in range(1, count):
            value = poly.deriv(j)(tau) if j <= degree else 0.0
            rows.append(np.array([value, 1.0 if j == 1 else 0.0]))
        return np.vstack(rows)

    def solution(t: float) -> NDArray[Any]:
        return np.array([poly(t), t])

    return OdeSystem(
        name="polynomial",
        dim=2,
        rhs=rhs,
        y0=np.array([poly(0.0), 0.0]),
        t0=0.0,
        t_end=t_end,
        jacobian=jacobian,
        exact_derivatives=derivatives,
        exact_solution=solution,
        time_index=1,
        parameters={"degree": degree, "coefficients": [float(c) for c in coeffs]},
    )


def prothero_robinson(zeta: float = -1e6, t_end: float = 1.0) -> OdeSystem:
    """y' = ζ(y - cos t) - sin t with exact solution cos t, time-augmented."""

    def rhs(state: NDArray[Any]) -> NDArray[Any]:
        y, t = state
        return np.array([zeta * (y - np.cos(t)) - np.sin(t), 1.0])

    def jacobian(state: NDArray[Any]) -> NDArray[Any]:
        t = state[1]
        return np.array([[zeta, zeta * np.sin(t) - np.cos(t)], [0.0, 0.0]])

    def derivatives(t: float, state: NDArray[Any], count: int) -> NDArray[Any]:
        y, tau = state
        offset = y - np.cos(tau)
        rows = [np.array(state, dtype=float)]
        for j in range(1, count):
            # j-th derivative of cos is cos(t + jπ/2)
            value = np.cos(tau + 0.5 * j * np.pi) + offset * zeta**j
            rows.append(np.array([value, 1.0 if j == 1 else 0.0]))
        return np.vstack(rows)

    def solution(t: float) -> NDArray[Any]:
        return np.array([np.cos(t), t])

    return OdeSystem(
        name="prothero_robinson",
        dim=2,
        rhs=rhs,
        y0=np.array([1.0, 0.0]),
        t0=0.0,
        t_end=t_end,
        jacobian=jacobian,
        exact_derivatives=derivatives,
        exact_solution=solution,
        time_index=1,
        parameters={"zeta": zeta},
    )


def synthetic_system(kind: str, **params: Any) -> OdeSystem:
    """`dahlquist`, `polynomial` or `prothero_robinson` by name."""
    factories: dict[str, Callable[..., OdeSystem]] = {
        "dahlquist": dahlquist,
        "polynomial": polynomial,
        "prothero_robinson": prothero_robinson,
    }
    if kind not in factories:
        raise NotFoundError(f"Unknown synthetic system {kind!r}")
    return factories[kind](**params)


PROBLEM_DEFAULTS: dict[str, dict[str, Any]] = {
    "vdp": {"epsilon": 1e-6, "T": 0.5},
    "burgers": {"d": 0.1, "L": 1.0, "M": 10, "T": 1.0},
    "grayscott": {
        "d1": 2e-5,
        "d2": 1e-5,
        "F": 0.04,
        "kappa": 0.06,
        "L": 1.0,
        "M": 32,
        "T": 1.0,
        "amplitude": 0.1,
        "seed": 0,
    },
    "dahlquist": {"zeta": -1.0, "T": 1.0},
    "polynomial": {"degree": 3, "T": 1.0},
    "prothero_robinson": {"zeta": -1e6, "T": 1.0},
}


def _parse_zeta(value: Any) -> complex | float:
    if isinstance(value, str):
        parsed = complex(value.replace(" ", ""))
        return parsed if parsed.imag else parsed.real
    return value  # type: ignore[no-any-return]


def build_problem(name: str, params: dict[str, Any] | None = None) -> OdeSystem:
    """Problem by name with parameter overrides (config keys `problem.*`)."""
    if name not in PROBLEM_DEFAULTS:
        raise NotFoundError(
            f"Unknown problem {name!r}; expected one of {', '.join(PROBLEM_DEFAULTS)}"
        )
    values = dict(PROBLEM_DEFAULTS[name])
    for key, value in (params or {}).items():
        if key not in values and key not in ("coefficients",):
            raise ConfigError(f"problem.{key}: not a parameter of {name}")
        values[key] = value
    try:
        if name == "vdp":
            return vdp_system(VdpConfig(epsilon=float(values["epsilon"]), T=float(values["T"])))
        if name == "burgers":
            return burgers_system(
                BurgersConfig(
                    d=float(values["d"]),
                    L=float(values["L"]),
                    M=int(values["M"]),
                    T=float(values["T"]),
                )
            )
        if name == "grayscott":
            return grayscott_system(
                GrayScottConfig(
                    d1=float(values["d1"]),
                    d2=float(values["d2"]),
                    F=float(values["F"]),
                    kappa=float(values["kappa"]),
                    L=float(values["L"]),
                    M=int(values["M"]),
                    T=float(values["T"]),
                    amplitude=float(values["amplitude"]),
                    seed=int(values["seed"]),
                )
            )
        if name == "dahlquist":
            return dahlquist(_parse_zeta(values["zeta"]), t_end=float(values["T"]))
        if name == "polynomial":
            return polynomial(
                int(values["degree"]), values.get("coefficients"), t_end=float(values["T"])
            )
        return prothero_robinson(float(values["zeta"]), t_end=float(values["T"]))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"problem: invalid parameter for {name}: {e}") from e
