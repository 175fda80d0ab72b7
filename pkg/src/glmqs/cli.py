"""Command-line entry point: `glmqs <subcommand> ...`.

Exit codes: 0 success, 1 verification or tolerance failure, 2 usage or configuration error.
"""

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .apis.tableau_file import load_tableau, write_tableau
from .apis.yaml_editor import YamlEditor
from .construct import FREE_PARAMETERS, certify_published, optimize_error_constant
from .harness import (
    STUDY_PRESETS,
    diffusion_sweep,
    load_study,
    preset_study,
    run_study,
    write_diffusion,
)
from .integrator import integrate
from .models.builtin_tableaus import BUILTIN_NAMES
from .models.configs import FreeParameterSet
from .models.custom_error import (
    ConfigError,
    CustomError,
    NotFoundError,
    TableauValidationError,
)
from .models.reports import ConstructionResult
from .problems import PROBLEM_DEFAULTS, build_problem
from .stability import (
    DEFAULT_GRID_POINTS,
    DEFAULT_Y_MAX,
    DEFAULT_Y_MIN,
    check_l_stability,
    check_quadratic_form,
    scan_a_stability,
    stability_polynomial,
)
from .utils import format_number
from .verification import verify_tableau

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def _emit(key: str, value: Any) -> None:
    if isinstance(value, (bool, np.bool_)):
        value = "pass" if value else "fail"
    elif isinstance(value, (float, np.floating)):
        value = format_number(value)
    print(f"{key}: {value}")


def _parse_value(raw: str) -> Any:
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    return raw


def _key_values(pairs: Sequence[str] | None) -> dict[str, Any]:
    params: dict[str, Any] = {}
    for pair in pairs or []:
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            raise ConfigError(f"--param: expected KEY=VALUE, got {pair!r}")
        params[key] = _parse_value(raw)
    return params


def cmd_verify(args: argparse.Namespace) -> int:
    t = load_tableau(args.tableau)
    result = verify_tableau(t)
    res, iqs, err = result.residuals, result.iqs, result.error
    _emit("method", t.name)
    _emit("p", t.p)
    _emit("coeff_digits", t.coeff_digits)
    _emit("stage_order.residual", res.stage_residual)
    _emit("stage_order.location", f"U[{res.stage_location[0]},{res.stage_location[1]}]")
    _emit("stage_order.tolerance", res.stage_tolerance)
    _emit("order.residual", res.order_residual)
    _emit("order.location", f"V[{res.order_location[0]},{res.order_location[1]}]")
    _emit("order.tolerance", res.order_tolerance)
    _emit("iqs.residual_BA", iqs.residual_BA)
    _emit("iqs.residual_BU", iqs.residual_BU)
    _emit("iqs.tolerance", iqs.tolerance)
    for i in range(2, t.r):
        _emit(f"iqs.X[{i + 1},{t.r}]", float(iqs.X[i, t.r - 1]))
    _emit("error_constant", err.E)
    if t.printed_error_constant is not None:
        _emit("error_constant.printed", t.printed_error_constant)
    _emit("verdict", result.passed)
    return EXIT_OK if result.passed else EXIT_FAILED


def cmd_stability(args: argparse.Namespace) -> int:
    t = load_tableau(args.tableau)
    scan, ys, radii = scan_a_stability(t, args.grid_points, args.y_min, args.y_max)
    l_check = check_l_stability(t)
    quadratic = check_quadratic_form(t)
    _emit("method", t.name)
    _emit("a_stability.worst_radius", scan.worst_radius)
    _emit("a_stability.worst_y", scan.worst_omega.imag)
    _emit("a_stability.points", scan.points)
    _emit("a_stability.tolerance", scan.tolerance)
    _emit("a_stability", scan.passed)
    _emit("l_stability.infinity_radius", l_check.infinity_radius)
    _emit("l_stability.p1r", l_check.p1_top)
    _emit("l_stability.p0r", l_check.p0_top)
    _emit("l_stability", l_check.passed)
    _emit("quadratic_form.max_spurious_coefficient", quadratic.max_spurious_coefficient)
    _emit("quadratic_form.max_spurious_eigenvalue", quadratic.max_spurious_eigenvalue)
    _emit("quadratic_form", quadratic.passed)
    if quadratic.passed:
        poly = stability_polynomial(t)
        _emit("polynomial.p1", " ".join(format_number(v) for v in poly.p1))
        _emit("polynomial.p0", " ".join(format_number(v) for v in poly.p0))
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["y", "spectral_radius"])
            writer.writerows([format_number(y), format_number(r)] for y, r in zip(ys, radii))
        _emit("csv", args.csv)
    passed = scan.passed and l_check.passed and quadratic.passed
    return EXIT_OK if passed else EXIT_FAILED


def cmd_integrate(args: argparse.Namespace) -> int:
    t = load_tableau(args.method)
    params = _key_values(args.param)
    system = build_problem(args.problem, params)
    t0 = system.t0 if args.t0 is None else args.t0
    if system.time_index is not None and t0 != system.t0:
        raise ConfigError(
            f"--t0: {system.name} carries time in its state and starts at t = {system.t0!r}"
        )
    t_end = system.t_end if args.tend is None else args.tend
    result = integrate(
        t, system, t0, t_end, args.steps, store_trajectory=bool(args.store_trajectory)
    )
    _emit("method", t.name)
    _emit("problem", system.name)
    _emit("t_end", result.t_end)
    _emit("y_end", " ".join(format_number(v) for v in np.real_if_close(result.y_end)))
    for key, value in result.stats.as_dict().items():
        _emit(f"stats.{key}", value)
    if args.store_trajectory:
        assert result.times is not None and result.states is not None
        with open(args.store_trajectory, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["t"] + [f"y{i + 1}" for i in range(system.dim)])
            for time, state in zip(result.times, result.states):
                writer.writerow([format_number(time)] + [format_number(v) for v in state])
        _emit("trajectory", args.store_trajectory)
    return EXIT_OK


def cmd_convergence(args: argparse.Namespace) -> int:
    spec = load_study(args.spec) if args.spec else preset_study(args.preset)
    if args.output:
        spec = replace(spec, output_directory=args.output)
    result = run_study(spec)
    print("method,N,h,error,observed_p")
    for row in result.rows:
        print(
            ",".join(
                [
                    row.method,
                    str(row.N),
                    format_number(row.h),
                    format_number(row.error),
                    format_number(row.observed_p),
                ]
            )
        )
    _emit("reference.source", result.reference.source)
    _emit("reference.gap", result.reference.gap)
    for key, path in result.paths.items():
        _emit(f"output.{key}", path)
    return EXIT_OK


def _read_bounds(path: str, order: int) -> FreeParameterSet:
    if not Path(path).is_file():
        raise ConfigError(f"Failed to load YAML file: {path} does not exist")
    doc = YamlEditor(path)
    bounds: dict[str, tuple[float, float]] = {}
    for name in FREE_PARAMETERS[order]:
        value = doc.require(name)
        if isinstance(value, (int, float)):
            bounds[name] = (float(value), float(value))
        elif isinstance(value, list) and len(value) == 2:
            bounds[name] = (float(value[0]), float(value[1]))
        else:
            raise ConfigError(f"{name}: expected a number or [low, high], got {value!r}")
        if bounds[name][0] > bounds[name][1]:
            raise ConfigError(f"{name}: lower bound exceeds upper bound")
    return FreeParameterSet.box(**bounds)


def _emit_checks(result: ConstructionResult) -> None:
    for check in result.checks:
        _emit(f"{check.name}.value", check.value)
        _emit(check.name, check.passed)
        if check.detail:
            _emit(f"{check.name}.detail", check.detail)
    _emit("error_constant", result.E)
    if result.printed_E is not None:
        _emit("error_constant.printed", result.printed_E)
    _emit("feasible", result.feasible)
    _emit("verdict", result.passed)


def cmd_construct(args: argparse.Namespace) -> int:
    bounds = _read_bounds(args.bounds, args.order)
    result = optimize_error_constant(
        args.order,
        bounds,
        screen_points=args.screen_points,
        scan_points=args.scan_points,
        certify_points=args.grid_points,
    )
    for name, value in result.parameters.items():
        _emit(f"parameter.{name}", value)
    _emit("evaluations", len(result.optimizer_trace))
    _emit_checks(result)
    write_tableau(result.tableau, args.output)
    _emit("tableau", args.output)
    return EXIT_OK if result.passed else EXIT_FAILED


def cmd_certify(args: argparse.Namespace) -> int:
    result = certify_published(args.method, grid_points=args.grid_points)
    _emit("method", result.tableau.name)
    _emit_checks(result)
    return EXIT_OK if result.passed else EXIT_FAILED


def cmd_list_problems(args: argparse.Namespace) -> int:
    for name, defaults in PROBLEM_DEFAULTS.items():
        print(f"{name}:")
        for key, value in defaults.items():
            print(f"  {key}: {value}")
    print("presets: " + ", ".join(STUDY_PRESETS))
    return EXIT_OK


def cmd_diffusion(args: argparse.Namespace) -> int:
    sweep = diffusion_sweep(
        d_values=tuple(args.d),
        method=args.method,
        norm_steps=args.norm_steps,
        profile_steps=args.profile_steps,
    )
    for key, path in write_diffusion(sweep, args.output).items():
        _emit(f"output.{key}", path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glmqs", description="Implicit GLMs with inherent quadratic stability."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="order conditions, IQS certificate and error constant")
    p.add_argument("tableau", help=f"tableau file or one of {', '.join(BUILTIN_NAMES)}")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("stability", help="A-scan, L-stability and quadratic-form checks")
    p.add_argument("tableau")
    p.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS)
    p.add_argument("--y-min", type=float, default=DEFAULT_Y_MIN)
    p.add_argument("--y-max", type=float, default=DEFAULT_Y_MAX)
    p.add_argument("--csv", help="write the (y, spectral_radius) samples")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("integrate", help="fixed-step integration of one problem")
    p.add_argument("--method", required=True)
    p.add_argument("--problem", required=True, choices=sorted(PROBLEM_DEFAULTS))
    p.add_argument("--t0", type=float)
    p.add_argument("--tend", type=float)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--store-trajectory", metavar="PATH.csv")
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("convergence", help="convergence study with CSV and report output")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--spec", help="YAML study file")
    source.add_argument("--preset", choices=sorted(STUDY_PRESETS))
    p.add_argument("--output", help="output directory (overrides the study file)")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("construct", help="error-constant minimization for p = 1 or 2")
    p.add_argument("--order", type=int, required=True, choices=sorted(FREE_PARAMETERS))
    p.add_argument("--bounds", required=True, help="YAML file: name: [low, high]")
    p.add_argument("--output", default="constructed.yaml")
    p.add_argument("--screen-points", type=int, default=9)
    p.add_argument("--scan-points", type=int, default=512)
    p.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("certify", help="full constraint check of a built-in tableau")
    p.add_argument("--method", required=True)
    p.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("list-problems", help="problems and their default parameters")
    p.set_defaults(func=cmd_list_problems)

    p = sub.add_parser("diffusion", help="Burgers diffusion-coefficient sweep")
    p.add_argument("--d", type=float, nargs="+", default=[0.01, 0.1, 0.5, 1.0])
    p.add_argument("--method", default="GLMQS-4")
    p.add_argument("--norm-steps", type=int, default=1280)
    p.add_argument("--profile-steps", type=int, default=640)
    p.add_argument("--output", default=".")
    p.set_defaults(func=cmd_diffusion)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return int(args.func(args))
    except TableauValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILED
    except (ConfigError, NotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except CustomError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILED
