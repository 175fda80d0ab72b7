"""Convergence studies: references, endpoint errors, observed orders and CSV/report artifacts."""

import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .apis.yaml_editor import YamlEditor
from .integrator import integrate
from .models.builtin_tableaus import BUILTIN_NAMES, builtin_tableau
from .models.configs import (
    BurgersConfig,
    ComponentSelection,
    NewtonConfig,
    NormKind,
    ReferenceKind,
    StudySpec,
)
from .models.custom_error import (
    ConfigError,
    CustomError,
    NotFoundError,
    ReferenceFailureError,
    UndefinedOrderError,
)
from .models.ode_system import OdeSystem
from .models.reports import ConvergenceRow, DiffusionSweep, ReferenceResult, StudyResult
from .problems import build_problem, burgers_grid, burgers_system
from .utils import format_number, relative_l2

logger = logging.getLogger(__name__)

THREADS_ENV = "GLMQS_THREADS"
REFERENCE_METHOD = "GLMQS-4"

STUDY_PRESETS: dict[str, dict[str, Any]] = {
    "vdp-table": {
        "problem": "vdp",
        "problem_params": {"epsilon": 1e-6, "T": 0.5},
        "steps": (5, 10, 20, 40, 80, 160, 320),
        "norm": "absolute-l2",
    },
    "burgers-table": {
        "problem": "burgers",
        "problem_params": {"d": 0.1, "M": 10, "T": 1.0},
        "steps": (20, 40, 80, 160, 320, 640, 1280),
        "norm": "absolute-l2",
    },
    "burgers-d05": {
        "problem": "burgers",
        "problem_params": {"d": 0.5, "M": 10, "T": 1.0},
        "steps": (20, 40, 80, 160, 320, 640, 1280),
        "norm": "absolute-l2",
    },
    "grayscott-table": {
        "problem": "grayscott",
        "problem_params": {"M": 32, "T": 1.0},
        "steps": (10, 20, 40, 80),
        "norm": "relative-l2",
    },
}


def estimate_order(e1: float, e2: float, n1: int, n2: int) -> float:
    """log(e1/e2) / log(N2/N1).

    Raises:
        UndefinedOrderError: for non-positive errors or N2 ≤ N1.
    """
    if not (e1 > 0 and e2 > 0):
        raise UndefinedOrderError(f"errors must be positive, got {e1!r} and {e2!r}")
    if not (n1 > 0 and n2 > n1):
        raise UndefinedOrderError(f"step counts must satisfy 0 < N1 < N2, got {n1} and {n2}")
    return math.log(e1 / e2) / math.log(n2 / n1)


def _select(system: OdeSystem, y: NDArray[Any], component: ComponentSelection) -> NDArray[Any]:
    values = system.physical(y)
    return values[:1] if component is ComponentSelection.FIRST else values


def endpoint_error(
    system: OdeSystem,
    y: NDArray[Any],
    reference: NDArray[Any],
    norm: NormKind = NormKind.ABSOLUTE_L2,
    component: ComponentSelection = ComponentSelection.ALL,
) -> float:
    """Euclidean endpoint error, absolute or relative to the reference."""
    approx = _select(system, y, component)
    exact = _select(system, reference, component)
    if norm is NormKind.RELATIVE_L2:
        return relative_l2(approx - exact, exact)
    return float(np.linalg.norm(approx - exact))


def reference_solution(
    system: OdeSystem,
    rtol: float = 1e-11,
    max_steps: int = 2**20,
    start_steps: int = 64,
    config: NewtonConfig | None = None,
    method: str = REFERENCE_METHOD,
) -> ReferenceResult:
    """Endpoint at t_end from the exact solution, or by step doubling until two agree.

    Raises:
        ReferenceFailureError: when the step cap is reached first; carries the last gap.
    """
    if system.exact_solution is not None:
        return ReferenceResult(
            y=np.asarray(system.exact_solution(system.t_end)), gap=0.0, steps=0, source="exact"
        )
    tableau = builtin_tableau(method)
    steps = max(start_steps, tableau.p + 1)
    previous = integrate(tableau, system, system.t0, system.t_end, steps, config).y_end
    gap = math.inf
    while 2 * steps <= max_steps:
        steps *= 2
        current = integrate(tableau, system, system.t0, system.t_end, steps, config).y_end
        gap = relative_l2(current - previous, current)
        logger.info("%s reference: N = %d, gap %.3e", system.name, steps, gap)
        if gap <= rtol:
            return ReferenceResult(y=current, gap=gap, steps=steps, source="self-refined")
        previous = current
    raise ReferenceFailureError(
        f"{system.name}: reference did not settle to {rtol:.1e} within {max_steps} steps "
        f"(gap {gap:.3e})",
        gap,
    )


def read_reference(path: str | Path, system: OdeSystem) -> ReferenceResult:
    """Reference endpoint from a text file of whitespace-separated values ('#' comments)."""
    try:
        values = np.loadtxt(path, comments="#", dtype=system.dtype, ndmin=1).ravel()
    except (OSError, ValueError) as e:
        raise ConfigError(f"reference.path: cannot read {path}: {e}") from e
    if values.shape != (system.dim,):
        raise ConfigError(
            f"reference.path: {path} holds {values.shape[0]} values, expected {system.dim}"
        )
    return ReferenceResult(y=values, gap=math.nan, steps=0, source="supplied-file")


def write_reference(path: str | Path, reference: ReferenceResult, header: dict[str, Any]) -> None:
    lines = [f"# {key}: {value}" for key, value in header.items()]
    lines += [f"# reference.source: {reference.source}", f"# reference.gap: {reference.gap}"]
    lines += [format_number(v) for v in np.asarray(reference.y).ravel()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        count = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV}: expected an integer, got {raw!r}") from None
    if count < 1:
        raise ConfigError(f"{THREADS_ENV}: must be at least 1, got {count}")
    return count


def _run_row(
    method: str, steps: int, system: OdeSystem, reference: ReferenceResult, spec: StudySpec
) -> tuple[float, float | None, str | None]:
    h = (system.t_end - system.t0) / steps
    try:
        result = integrate(
            builtin_tableau(method), system, system.t0, system.t_end, steps, spec.newton
        )
    except (CustomError, ValueError, ArithmeticError) as e:
        logger.warning("%s N = %d failed: %s", method, steps, e)
        return h, None, str(e)
    error = endpoint_error(system, result.y_end, reference.y, spec.norm, spec.component)
    logger.info("%s N = %d: error %.3e", method, steps, error)
    return h, error, None


def _observed(previous: ConvergenceRow | None, N: int, error: float | None) -> float | None:
    if previous is None or previous.error is None or error is None:
        return None
    try:
        return estimate_order(previous.error, error, previous.N, N)
    except UndefinedOrderError:
        return None


def run_study(spec: StudySpec, workers: int | None = None, write: bool = True) -> StudyResult:
    """One reference for the problem, then every (method, N) run against it.

    Runs go to a thread pool of `workers` (default from GLMQS_THREADS); rows keep
    (method, N) order. A failed run is recorded on its row and the study continues.
    """
    for method in spec.methods:
        if method.upper() not in BUILTIN_NAMES:
            raise NotFoundError(f"Unknown method {method!r}")
    system = build_problem(spec.problem, spec.problem_params)
    if spec.reference is ReferenceKind.SUPPLIED_FILE:
        assert spec.reference_path is not None
        reference = read_reference(spec.reference_path, system)
    else:
        reference = reference_solution(
            system,
            rtol=spec.reference_rtol,
            max_steps=spec.reference_max_steps,
            start_steps=spec.reference_start_steps,
            config=spec.newton,
        )
    tasks = [(method, N) for method in spec.methods for N in spec.steps]
    with ThreadPoolExecutor(max_workers=workers or worker_count()) as pool:
        outcomes = list(pool.map(lambda task: _run_row(*task, system, reference, spec), tasks))

    rows: list[ConvergenceRow] = []
    previous: ConvergenceRow | None = None
    for (method, N), (h, error, failure) in zip(tasks, outcomes):
        if previous is not None and previous.method != method:
            previous = None
        row = ConvergenceRow(method, N, h, error, _observed(previous, N, error), failure)
        rows.append(row)
        previous = row

    result = StudyResult(
        name=spec.name,
        reference=reference,
        rows=rows,
        nominal_orders={m: builtin_tableau(m).p for m in spec.methods},
        config=spec.resolved(),
    )
    if write:
        write_study(result, spec.output_directory)
    return result


def _header(config: dict[str, Any]) -> str:
    return "".join(f"# {key}: {value}\n" for key, value in config.items())


def write_study(result: StudyResult, directory: str | Path) -> dict[str, str]:
    """convergence.csv, loglog.csv, report.txt and reference.txt under `directory`."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    header = {**result.config, "reference.source": result.reference.source}
    paths = {
        "convergence": str(out / "convergence.csv"),
        "loglog": str(out / "loglog.csv"),
        "report": str(out / "report.txt"),
        "reference": str(out / "reference.txt"),
    }

    with open(paths["convergence"], "w", newline="", encoding="utf-8") as f:
        f.write(_header(header))
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["method", "N", "h", "error", "observed_p"])
        for row in result.rows:
            writer.writerow(
                [
                    row.method,
                    row.N,
                    format_number(row.h),
                    format_number(row.error),
                    format_number(row.observed_p),
                ]
            )

    with open(paths["loglog"], "w", newline="", encoding="utf-8") as f:
        f.write(_header(header))
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["method", "log10_h", "log10_error"])
        for row in result.rows:
            if row.error is not None and row.error > 0:
                log_h, log_e = math.log10(row.h), math.log10(row.error)
                writer.writerow([row.method, format_number(log_h), format_number(log_e)])

    lines = [f"{key}: {value}" for key, value in header.items()]
    lines += [
        f"reference.gap: {format_number(result.reference.gap)}",
        f"reference.steps: {result.reference.steps}",
    ]
    for method, nominal in result.nominal_orders.items():
        method_rows = result.rows_for(method)
        finest = method_rows[-1]
        lines += [
            f"{method}.nominal_p: {nominal}",
            f"{method}.finest_N: {finest.N}",
            f"{method}.finest_error: {format_number(finest.error)}",
            f"{method}.finest_observed_p: {format_number(finest.observed_p)}",
        ]
        lines += [f"{method}.failure.N{row.N}: {row.failure}" for row in method_rows if row.failure]
    Path(paths["report"]).write_text("\n".join(lines) + "\n", encoding="utf-8")

    write_reference(paths["reference"], result.reference, result.config)
    result.paths = paths
    logger.info("study %s written to %s", result.name, out)
    return paths


def preset_study(name: str, **overrides: Any) -> StudySpec:
    """Study with the published step lists; `overrides` replace StudySpec fields."""
    if name not in STUDY_PRESETS:
        expected = ", ".join(STUDY_PRESETS)
        raise NotFoundError(f"Unknown study preset {name!r}; expected one of {expected}")
    preset = STUDY_PRESETS[name]
    spec = StudySpec(
        methods=tuple(BUILTIN_NAMES),
        problem=preset["problem"],
        problem_params=dict(preset["problem_params"]),
        steps=tuple(preset["steps"]),
        norm=preset["norm"],
        name=name,
    )
    return replace(spec, **overrides) if overrides else spec


def load_study(path: str | Path) -> StudySpec:
    """StudySpec from a YAML config file; an optional `preset` key supplies defaults."""
    if not Path(path).is_file():
        raise ConfigError(f"Failed to load YAML file: {path} does not exist")
    doc = YamlEditor(path)
    base: dict[str, Any] = {}
    preset = doc.get("preset")
    if preset is not None:
        if preset not in STUDY_PRESETS:
            raise ConfigError(f"preset: unknown study preset {preset!r}")
        base = dict(STUDY_PRESETS[preset])

    problem = doc.get("problem") or {}
    if not isinstance(problem, dict):
        raise ConfigError("problem: expected a mapping")
    problem_name = problem.get("name", base.get("problem"))
    if problem_name is None:
        raise ConfigError(f"{path}: missing required key 'problem.name'")
    params = dict(base.get("problem_params", {})) if problem_name == base.get("problem") else {}
    params.update({k: v for k, v in problem.items() if k != "name"})

    steps = doc.get("steps", base.get("steps"))
    if steps is None:
        raise ConfigError(f"{path}: missing required key 'steps'")
    methods = doc.get("methods", list(BUILTIN_NAMES))
    if isinstance(methods, str):
        methods = [methods]

    try:
        newton = NewtonConfig(
            rel_tol=float(doc.get("newton.rel_tol", 1e-12)),
            abs_tol=float(doc.get("newton.abs_tol", 1e-14)),
            max_iters=int(doc.get("newton.max_iters", 25)),
            jacobian_reuse=doc.get("jacobian.reuse", "per-step"),
            divergence_factor=float(doc.get("newton.divergence_factor", 2.0)),
            slow_ratio=float(doc.get("newton.slow_ratio", 0.5)),
        )
        return StudySpec(
            methods=tuple(str(m).upper() for m in methods),
            problem=str(problem_name),
            problem_params=params,
            steps=tuple(int(n) for n in steps),
            norm=doc.get("norm", base.get("norm", "absolute-l2")),
            component=doc.get("component", "all"),
            reference=doc.get("reference.kind", "self-refined"),
            reference_path=doc.get("reference.path"),
            reference_rtol=float(doc.get("reference.rtol", 1e-11)),
            reference_max_steps=int(doc.get("reference.max_steps", 2**20)),
            reference_start_steps=int(doc.get("reference.start_steps", 64)),
            newton=newton,
            output_directory=str(doc.get("output.directory", ".")),
            name=str(doc.get("name", preset or Path(path).stem)),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from e


def diffusion_sweep(
    d_values: tuple[float, ...] = (0.01, 0.1, 0.5, 1.0),
    method: str = REFERENCE_METHOD,
    norm_steps: int = 1280,
    norm_grid: int = 10,
    profile_steps: int = 640,
    profile_time: float = 0.5,
    profile_grids: tuple[int, ...] = (10, 20),
    stride: int = 10,
    T: float = 1.0,
    config: NewtonConfig | None = None,
) -> DiffusionSweep:
    """Burgers solution norms over [0, T] and profiles at `profile_time` for each d.

    Norms use h = T/norm_steps on the `norm_grid` grid, recorded every `stride` steps;
    profiles use h = 1/profile_steps on each of `profile_grids`.
    """
    tableau = builtin_tableau(method)
    norms: list[tuple[float, float, float]] = []
    profiles: list[tuple[float, int, float, float]] = []
    for d in d_values:
        system = burgers_system(BurgersConfig(d=d, M=norm_grid, T=T))
        run = integrate(tableau, system, 0.0, T, norm_steps, config, store_trajectory=True)
        assert run.times is not None and run.states is not None
        for n in range(0, len(run.times), stride):
            norms.append((d, run.times[n], float(np.linalg.norm(run.states[n]))))
        for M in profile_grids:
            cfg = BurgersConfig(d=d, M=M, T=profile_time)
            steps = max(int(round(profile_time * profile_steps)), tableau.p + 1)
            end = integrate(tableau, burgers_system(cfg), 0.0, profile_time, steps, config).y_end
            x = np.concatenate([[0.0], burgers_grid(cfg), [cfg.L]])
            u = np.concatenate([[0.0], end, [0.0]])
            profiles += [(d, M, float(xi), float(ui)) for xi, ui in zip(x, u)]
        logger.info("diffusion sweep: d = %g done", d)
    return DiffusionSweep(method=method, norms=norms, profiles=profiles)


def write_diffusion(sweep: DiffusionSweep, directory: str | Path) -> dict[str, str]:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "norms": str(out / "diffusion_norms.csv"),
        "profiles": str(out / "diffusion_profiles.csv"),
    }
    with open(paths["norms"], "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow([f"# method: {sweep.method}"])
        writer.writerow(["d", "t", "norm_u"])
        writer.writerows([[format_number(v) for v in row] for row in sweep.norms])
    with open(paths["profiles"], "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow([f"# method: {sweep.method}"])
        writer.writerow(["d", "M", "x", "u"])
        writer.writerows([[format_number(v) for v in row] for row in sweep.profiles])
    sweep.paths = paths
    return paths
