"""Numerical construction of GLMQS tableaus for p ≤ 2 and certification of the built-ins.

For a point (λ, free V entry) the linear order conditions fix c, A, U and all but the last
column of B. The remaining unknowns come from the IQS relations on rows 3..r and from the
two L-stability conditions tr M(∞) = 0 and e2(M(∞)) = 0, solved as one nonlinear
least-squares system in extended precision.
"""

import logging
import math
from dataclasses import dataclass
from itertools import product
from typing import Any, Callable

import mpmath as mp
import numpy as np
from scipy.stats import qmc

from .models.builtin_tableaus import builtin_tableau
from .models.configs import FreeParameterSet
from .models.custom_error import (
    ConfigError,
    ConstructionError,
    CustomError,
    InfeasibleError,
)
from .models.reports import CheckOutcome, ConstructionResult
from .models.tableau import GlmTableau
from .stability import (
    DEFAULT_GRID_POINTS,
    check_l_stability,
    check_quadratic_form,
    infinity_radius,
    scan_a_stability,
)
from .utils import nilpotent_radius_tolerance, uniform_abscissae
from .verification import error_constant, verify_tableau

logger = logging.getLogger(__name__)

ROOT_DPS = 50
ROOT_TOL = 1e-30
ROOT_MAX_ITERS = 60
START_COUNT = 8
START_RADIUS = 2.0
ASSEMBLY_TOL = 1e-10
SCREEN_POINTS = 9
SCREEN_SCAN_POINTS = 512
MAX_EVALUATIONS = 200
MIN_STEP = 1e-6

FREE_PARAMETERS = {1: ("lam", "v12"), 2: ("lam", "v13")}


def _check_order(p: int, params: FreeParameterSet) -> None:
    if p not in FREE_PARAMETERS:
        raise ConfigError(f"order: construction supports p = 1 or 2, got {p}")
    missing = [name for name in FREE_PARAMETERS[p] if name not in params.values]
    if missing:
        raise ConfigError(f"parameters: p = {p} needs {', '.join(missing)}")
    unknown = [name for name in params.names if name not in FREE_PARAMETERS[p]]
    if unknown:
        raise ConfigError(f"parameters: p = {p} has no parameter {', '.join(unknown)}")


@dataclass(frozen=True)
class _Layout:
    """Where the unknowns of the root solve live in (B, V, X)."""

    p: int
    b_last: tuple[int, ...]
    v_free: tuple[tuple[int, int], ...]
    x_free: tuple[int, ...]

    @property
    def r(self) -> int:
        return self.p + 1

    @property
    def size(self) -> int:
        return len(self.b_last) + len(self.v_free) + len(self.x_free)

    @classmethod
    def for_order(cls, p: int, fixed: tuple[int, int]) -> "_Layout":
        r = p + 1
        v_free = [(0, j) for j in range(1, r)]
        v_free += [(i, j) for i in range(1, r) for j in range(i + 1, r)]
        return cls(
            p=p,
            # r = 2 leaves the whole last column of B free; otherwise only its first entry.
            b_last=tuple(range(r)) if r == 2 else (0,),
            v_free=tuple(entry for entry in v_free if entry != fixed),
            x_free=tuple(range(2, r)),
        )


class _Family:
    """Tableau matrices of the order-p family as functions of the unknowns (mpmath)."""

    def __init__(self, p: int, lam: float, fixed_v: tuple[int, int], v_value: float) -> None:
        r = s = p + 1
        self.p, self.r, self.s = p, r, s
        self.layout = _Layout.for_order(p, fixed_v)
        self.fixed_v = fixed_v
        self.v_value = mp.mpf(v_value)
        self.lam = mp.mpf(lam)
        c = [mp.mpf(i) / (s - 1) for i in range(s)]
        self.c = c
        self.C = mp.matrix([[ci**j / mp.factorial(j) for j in range(r)] for ci in c])
        self.K = mp.matrix(r, r)
        for j in range(1, r):
            self.K[j - 1, j] = 1
        self.E = mp.matrix(
            [[1 / mp.factorial(j - i) if j >= i else 0 for j in range(r)] for i in range(r)]
        )
        A = mp.matrix(s, s)
        for i in range(s):
            A[i, i] = self.lam
            for j in range(i):
                A[i, j] = mp.mpf(1) / p
        self.A = A
        CK = self.C * self.K
        self.U = self.C - A * CK
        self.A_inv_U = mp.inverse(A) * self.U
        # B C K + V = E on columns 1..p reads B G = R with G = C[:, :p].
        self.G_head_inv = mp.inverse(self.C[0:p, 0:p])
        self.g_last = self.C[p, 0:p]

    def split(self, x: Any) -> tuple[Any, Any, Any]:
        lay = self.layout
        r, s = self.r, self.s
        b_last = mp.matrix(r, 1)
        V = mp.matrix(r, r)
        V[0, 0] = 1
        V[self.fixed_v] = self.v_value
        X = mp.matrix(r, r)
        k = 0
        for i in lay.b_last:
            b_last[i] = x[k]
            k += 1
        for entry in lay.v_free:
            V[entry] = x[k]
            k += 1
        for i in lay.x_free:
            X[i, i - 1] = 1
            X[i, r - 1] = x[k]
            k += 1
        R = (self.E - V)[:, 1:r]
        head = (R - b_last * self.g_last) * self.G_head_inv
        B = mp.matrix(r, s)
        for i in range(r):
            for j in range(s - 1):
                B[i, j] = head[i, j]
            B[i, s - 1] = b_last[i]
        return B, V, X

    def residuals(self, x: Any) -> Any:
        r = self.r
        B, V, X = self.split(x)
        values = []
        if r >= 3:
            BA = B * self.A - X * B
            BU = B * self.U - (X * V - V * X)
            for i in range(2, r):
                values += [BA[i, j] for j in range(self.s)]
                values += [BU[i, j] for j in range(r)]
        M = V - B * self.A_inv_U
        trace = mp.fsum(M[i, i] for i in range(r))
        M2 = M * M
        trace2 = mp.fsum(M2[i, i] for i in range(r))
        values += [trace, (trace * trace - trace2) / 2]
        return mp.matrix(values)


def _jacobian(fun: Callable[[Any], Any], x: Any, f0: Any) -> Any:
    step = mp.mpf(10) ** (-(ROOT_DPS // 3))
    J = mp.matrix(f0.rows, x.rows)
    for k in range(x.rows):
        forward, backward = x.copy(), x.copy()
        forward[k] += step
        backward[k] -= step
        column = (fun(forward) - fun(backward)) / (2 * step)
        for i in range(f0.rows):
            J[i, k] = column[i]
    return J


def _gauss_newton(fun: Callable[[Any], Any], x: Any) -> tuple[Any, float]:
    """Damped Gauss–Newton with a vanishing Levenberg term for rank-deficient Jacobians."""
    f = fun(x)
    norm = mp.norm(f)
    for _ in range(ROOT_MAX_ITERS):
        if norm <= ROOT_TOL:
            break
        J = _jacobian(fun, x, f)
        JT = J.T
        normal = JT * J
        shift = mp.mpf(10) ** (-(ROOT_DPS - 10)) * (1 + mp.mnorm(normal, 1))
        for k in range(normal.rows):
            normal[k, k] += shift
        try:
            dx = mp.lu_solve(normal, -(JT * f))
        except ZeroDivisionError:
            break
        damping = mp.mpf(1)
        while damping > mp.mpf(1) / 1024:
            trial = x + damping * dx
            f_trial = fun(trial)
            norm_trial = mp.norm(f_trial)
            if norm_trial < norm:
                x, f, norm = trial, f_trial, norm_trial
                break
            damping /= 2
        else:
            break
    return x, float(norm)


def _starts(size: int) -> list[list[float]]:
    """The origin plus Halton points spread over [-START_RADIUS, START_RADIUS]^size."""
    points = qmc.Halton(d=size, scramble=False).random(START_COUNT)
    starts = [[0.0] * size]
    for point in points[1:]:
        starts.append([START_RADIUS * (2.0 * v - 1.0) for v in point])
    return starts


def _to_tableau(family: _Family, x: Any, name: str) -> GlmTableau:
    B, V, _ = family.split(x)

    def dense(M: Any) -> list[list[float]]:
        return [[float(M[i, j]) for j in range(M.cols)] for i in range(M.rows)]

    return GlmTableau(
        name=name,
        p=family.p,
        lam=float(family.lam),
        c=uniform_abscissae(family.s),
        A=dense(family.A),
        U=dense(family.U),
        B=dense(B),
        V=dense(V),
        coeff_digits=16,
    )


def assemble_from_parameters(
    p: int, params: FreeParameterSet, name: str | None = None
) -> GlmTableau:
    """L-stable GLMQS tableau of order p at the given (λ, V-entry) point.

    Roots from every start are collected and the one with the smallest error constant is
    kept, ties broken lexicographically on the unknowns.

    Raises:
        ConstructionError: if no start reaches a root; carries the best residual seen.
    """
    _check_order(p, params)
    free = FREE_PARAMETERS[p][1]
    fixed = (int(free[1]) - 1, int(free[2]) - 1)
    lam = params.values["lam"]
    label = name or f"constructed-p{p}"
    roots: list[tuple[float, tuple[float, ...], GlmTableau]] = []
    best_residual = math.inf
    with mp.workdps(ROOT_DPS):
        family = _Family(p, lam, fixed, params.values[free])
        for start in _starts(family.layout.size):
            x, residual = _gauss_newton(family.residuals, mp.matrix(start))
            best_residual = min(best_residual, residual)
            if residual > ROOT_TOL:
                continue
            try:
                tableau = _to_tableau(family, x, label)
                E = error_constant(tableau).E
            except CustomError as e:
                logger.debug("root from %s rejected: %s", start, e)
                continue
            roots.append((round(E, 12), tuple(float(x[k]) for k in range(x.rows)), tableau))
    if not roots:
        raise ConstructionError(
            f"p = {p}: no root from {START_COUNT} starts at {params.values} "
            f"(best residual {best_residual:.3e})",
            best_residual,
        )
    roots.sort(key=lambda root: (root[0], root[1]))
    tableau = roots[0][2]
    residuals = verify_tableau(tableau).residuals
    worst = max(residuals.stage_residual, residuals.order_residual)
    if worst > ASSEMBLY_TOL:
        raise ConstructionError(
            f"p = {p}: assembled tableau misses the order conditions by {worst:.3e}", worst
        )
    logger.debug("p = %d at %s: %d roots, E = %.10g", p, params.values, len(roots), roots[0][0])
    return tableau


def _feasible(t: GlmTableau, scan_points: int) -> tuple[bool, float, float]:
    scan, _, _ = scan_a_stability(t, points=scan_points)
    radius = infinity_radius(t)
    # Double rounding of a nilpotent M(∞) of index r leaves eigenvalues near (64 eps)^(1/r).
    limit = nilpotent_radius_tolerance(64.0 * float(np.finfo(float).eps), t.r)
    return scan.passed and radius <= limit, scan.worst_radius, radius


@dataclass
class _Evaluation:
    values: dict[str, float]
    E: float
    feasible: bool
    tableau: GlmTableau | None

    def key(self, names: list[str]) -> tuple[float, ...]:
        return (self.E, *(self.values[n] for n in names))


def _screen_axis(low: float, high: float, points: int) -> list[float]:
    if high == low:
        return [low]
    return [float(v) for v in np.linspace(low, high, points)]


def optimize_error_constant(
    p: int,
    bounds: FreeParameterSet,
    screen_points: int = SCREEN_POINTS,
    scan_points: int = SCREEN_SCAN_POINTS,
    certify_points: int = DEFAULT_GRID_POINTS,
    max_evaluations: int = MAX_EVALUATIONS,
) -> ConstructionResult:
    """Minimize the error constant over the box with A- and L-stability as hard constraints.

    A coarse grid is screened first; compass search then refines the best feasible point,
    halving its steps when no neighbour improves.

    Raises:
        InfeasibleError: if no grid point is Schur feasible.
    """
    _check_order(p, bounds)
    names = list(FREE_PARAMETERS[p])
    limits = {n: bounds.limits(n) for n in names}
    trace: list[dict[str, Any]] = []
    cache: dict[tuple[float, ...], _Evaluation] = {}

    def evaluate(values: dict[str, float]) -> _Evaluation:
        key = tuple(values[n] for n in names)
        if key in cache:
            return cache[key]
        try:
            tableau = assemble_from_parameters(p, bounds.with_values(**values))
            E = error_constant(tableau).E
            feasible, _, _ = _feasible(tableau, scan_points)
        except CustomError as e:
            logger.debug("%s infeasible: %s", values, e)
            tableau, E, feasible = None, math.inf, False
        evaluation = _Evaluation(dict(values), E, feasible, tableau)
        cache[key] = evaluation
        trace.append({**values, "E": E, "feasible": feasible})
        return evaluation

    axes = [_screen_axis(*limits[n], screen_points) for n in names]
    feasible = [
        e for e in (evaluate(dict(zip(names, point))) for point in product(*axes)) if e.feasible
    ]
    if not feasible:
        raise InfeasibleError(
            f"p = {p}: no Schur-feasible point among {len(trace)} screened in {limits}"
        )
    best = min(feasible, key=lambda e: e.key(names))
    logger.info("p = %d screening: best E = %.10g at %s", p, best.E, best.values)

    steps = {n: 0.25 * (limits[n][1] - limits[n][0]) for n in names}
    floor = {n: MIN_STEP * max(limits[n][1] - limits[n][0], 1.0) for n in names}
    while len(trace) < max_evaluations and any(steps[n] > floor[n] for n in names):
        improved = False
        for n in names:
            if steps[n] <= floor[n]:
                continue
            for sign in (1.0, -1.0):
                values = dict(best.values)
                values[n] = bounds.clip(n, values[n] + sign * steps[n])
                if values[n] == best.values[n]:
                    continue
                candidate = evaluate(values)
                if candidate.feasible and candidate.key(names) < best.key(names):
                    best, improved = candidate, True
                    break
        if not improved:
            steps = {n: 0.5 * v for n, v in steps.items()}

    assert best.tableau is not None
    tableau = best.tableau.with_changes(name=f"optimized-p{p}")
    feasible_final, worst, radius = _feasible(tableau, certify_points)
    logger.info(
        "p = %d optimum: E = %.10g at %s after %d evaluations", p, best.E, best.values, len(trace)
    )
    return ConstructionResult(
        tableau=tableau,
        E=best.E,
        feasible=feasible_final,
        worst_boundary_radius=worst,
        infinity_radius=radius,
        parameters=dict(best.values),
        optimizer_trace=trace,
        checks=certification_checks(tableau, certify_points),
        grid_points=certify_points,
    )


def certification_checks(
    t: GlmTableau, grid_points: int = DEFAULT_GRID_POINTS
) -> list[CheckOutcome]:
    """Order conditions, IQS, quadratic form, A-scan, L-stability and the error constant."""
    verification = verify_tableau(t)
    res = verification.residuals
    iqs = verification.iqs
    quadratic = check_quadratic_form(t)
    scan, _, _ = scan_a_stability(t, points=grid_points)
    l_check = check_l_stability(t)
    checks = [
        CheckOutcome(
            "stage_order",
            res.stage_residual <= res.stage_tolerance,
            res.stage_residual,
            res.stage_tolerance,
            f"worst at U{list(res.stage_location)}",
        ),
        CheckOutcome(
            "order",
            res.order_residual <= res.order_tolerance,
            res.order_residual,
            res.order_tolerance,
            f"worst at V{list(res.order_location)}",
        ),
        CheckOutcome(
            "iqs",
            iqs.passed,
            max(iqs.residual_BA, iqs.residual_BU),
            iqs.tolerance,
            "rows 3..r of BA = XB and BU = XV - VX",
        ),
        CheckOutcome(
            "quadratic_form",
            quadratic.passed,
            quadratic.max_spurious_coefficient,
            quadratic.coefficient_tolerance,
            f"spurious eigenvalues up to {quadratic.max_spurious_eigenvalue:.3e}",
        ),
        CheckOutcome(
            "a_stability",
            scan.passed,
            scan.worst_radius,
            1.0 + scan.tolerance,
            f"{scan.points} points, worst at omega = {scan.worst_omega.imag:.6g}i",
        ),
        CheckOutcome(
            "l_stability",
            l_check.passed,
            l_check.infinity_radius,
            l_check.radius_tolerance,
            f"p1r = {l_check.p1_top:.3e}, p0r = {l_check.p0_top:.3e}",
        ),
    ]
    try:
        E = error_constant(t).E
        checks.append(CheckOutcome("error_constant", True, E, math.nan, ""))
    except CustomError as e:
        checks.append(CheckOutcome("error_constant", False, math.nan, math.nan, str(e)))
    return checks


def certify_published(name: str, grid_points: int = DEFAULT_GRID_POINTS) -> ConstructionResult:
    """Full constraint check of a built-in tableau; failed checks are reported, not raised."""
    tableau = builtin_tableau(name)
    checks = certification_checks(tableau, grid_points)
    by_name = {check.name: check for check in checks}
    return ConstructionResult(
        tableau=tableau,
        E=by_name["error_constant"].value,
        feasible=by_name["a_stability"].passed and by_name["l_stability"].passed,
        worst_boundary_radius=by_name["a_stability"].value,
        infinity_radius=by_name["l_stability"].value,
        parameters={"lam": tableau.lam},
        checks=checks,
        printed_E=tableau.printed_error_constant,
        grid_points=grid_points,
    )
