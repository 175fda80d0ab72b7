"""Configuration records for the Newton solver, benchmark problems, construction and studies."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .custom_error import ConfigError


class JacobianReuse(str, Enum):
    """When the modified Newton iteration refreshes its Jacobian.

    Examples:
        >>> JacobianReuse("per-step")
        <JacobianReuse.PER_STEP: 'per-step'>
    """

    PER_STEP = "per-step"
    PER_STAGE = "per-stage"
    NEVER = "never"


class NormKind(str, Enum):
    ABSOLUTE_L2 = "absolute-l2"
    RELATIVE_L2 = "relative-l2"


class ComponentSelection(str, Enum):
    ALL = "all"
    FIRST = "first"


class ReferenceKind(str, Enum):
    SELF_REFINED = "self-refined"
    SUPPLIED_FILE = "supplied-file"


def _parse_enum(enum_type: type[Enum], value: Any, key: str) -> Any:
    if isinstance(value, enum_type):
        return value
    try:
        return enum_type(str(value).lower())
    except ValueError:
        allowed = ", ".join(member.value for member in enum_type)  # type: ignore[attr-defined]
        raise ConfigError(f"{key}: invalid value {value!r}; expected one of {allowed}") from None


@dataclass(frozen=True)
class NewtonConfig:
    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    max_iters: int = 25
    jacobian_reuse: JacobianReuse = JacobianReuse.PER_STEP
    divergence_factor: float = 2.0
    slow_ratio: float = 0.5

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "jacobian_reuse",
            _parse_enum(JacobianReuse, self.jacobian_reuse, "jacobian.reuse"),
        )
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ConfigError("newton: tolerances must be positive")
        if self.max_iters < 1:
            raise ConfigError("newton.max_iters: must be at least 1")
        if self.divergence_factor <= 1.0:
            raise ConfigError("newton.divergence_factor: must exceed 1")


@dataclass(frozen=True)
class VdpConfig:
    epsilon: float = 1e-6
    t0: float = 0.0
    T: float = 0.5

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ConfigError(f"problem.epsilon: must be positive, got {self.epsilon!r}")


@dataclass(frozen=True)
class BurgersConfig:
    d: float = 0.1
    L: float = 1.0
    M: int = 10
    T: float = 1.0

    def __post_init__(self) -> None:
        if self.M < 3:
            raise ConfigError(f"problem.M: Burgers needs at least 3 grid points, got {self.M}")
        if self.d < 0 or self.L <= 0 or self.T <= 0:
            raise ConfigError("problem: d must be nonnegative and L, T positive")

    @property
    def k(self) -> float:
        return self.L / (self.M - 1)


@dataclass(frozen=True)
class GrayScottConfig:
    d1: float = 2e-5
    d2: float = 1e-5
    F: float = 0.04
    kappa: float = 0.06
    L: float = 1.0
    M: int = 32
    T: float = 1.0
    amplitude: float = 0.1
    region_fraction: float = 0.25
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.d1, self.d2, self.F, self.kappa) < 0:
            raise ConfigError("problem: Gray-Scott rates must be nonnegative")
        if self.M < 4:
            raise ConfigError(f"problem.M: Gray-Scott needs at least 4 cells, got {self.M}")
        if self.L <= 0 or self.T <= 0:
            raise ConfigError("problem: L and T must be positive")

    @property
    def k(self) -> float:
        return self.L / self.M


@dataclass(frozen=True)
class FreeParameterSet:
    """Search box over the free construction parameters.

    `values` is the current point; `bounds` maps each parameter name to (low, high).
    p = 1 uses `lam` and `v12`; p = 2 uses `lam` and `v13`.
    """

    values: dict[str, float]
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, value in self.values.items():
            low, high = self.bounds.get(name, (value, value))
            if not low <= value <= high:
                raise ConfigError(f"{name}: {value!r} outside bounds [{low!r}, {high!r}]")
        if self.values.get("lam", 1.0) <= 0:
            raise ConfigError("lam: must be positive")

    @classmethod
    def point(cls, **values: float) -> "FreeParameterSet":
        return cls(values=dict(values), bounds={k: (v, v) for k, v in values.items()})

    @classmethod
    def box(cls, **bounds: tuple[float, float]) -> "FreeParameterSet":
        centre = {k: 0.5 * (lo + hi) for k, (lo, hi) in bounds.items()}
        return cls(values=centre, bounds=dict(bounds))

    @property
    def names(self) -> list[str]:
        return sorted(set(self.values) | set(self.bounds))

    def with_values(self, **values: float) -> "FreeParameterSet":
        merged = dict(self.values)
        merged.update(values)
        return FreeParameterSet(values=merged, bounds=self.bounds)

    def limits(self, name: str) -> tuple[float, float]:
        return self.bounds.get(name, (self.values[name], self.values[name]))

    def clip(self, name: str, value: float) -> float:
        low, high = self.limits(name)
        return min(max(value, low), high)


@dataclass(frozen=True)
class StudySpec:
    """One convergence study: methods × step counts on a single problem."""

    methods: tuple[str, ...]
    problem: str
    problem_params: dict[str, Any]
    steps: tuple[int, ...]
    norm: NormKind = NormKind.ABSOLUTE_L2
    component: ComponentSelection = ComponentSelection.ALL
    reference: ReferenceKind = ReferenceKind.SELF_REFINED
    reference_path: str | None = None
    reference_rtol: float = 1e-11
    reference_max_steps: int = 2**20
    reference_start_steps: int = 64
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    output_directory: str = "."
    name: str = "study"

    def __post_init__(self) -> None:
        object.__setattr__(self, "norm", _parse_enum(NormKind, self.norm, "norm"))
        object.__setattr__(
            self, "component", _parse_enum(ComponentSelection, self.component, "component")
        )
        object.__setattr__(
            self, "reference", _parse_enum(ReferenceKind, self.reference, "reference.kind")
        )
        if not self.methods:
            raise ConfigError("methods: at least one method is required")
        if not self.steps:
            raise ConfigError("steps: at least one step count is required")
        if any(n < 1 for n in self.steps):
            raise ConfigError("steps: step counts must be positive")
        if any(b <= a for a, b in zip(self.steps, self.steps[1:])):
            raise ConfigError(f"steps: must be strictly increasing, got {list(self.steps)}")
        if self.reference is ReferenceKind.SUPPLIED_FILE and not self.reference_path:
            raise ConfigError("reference.path: required when reference.kind is supplied-file")

    def resolved(self) -> dict[str, Any]:
        """Flat view of the configuration written into report headers."""
        flat: dict[str, Any] = {
            "name": self.name,
            "methods": ",".join(self.methods),
            "steps": ",".join(str(n) for n in self.steps),
            "problem.name": self.problem,
        }
        for key in sorted(self.problem_params):
            flat[f"problem.{key}"] = self.problem_params[key]
        flat.update(
            {
                "norm": self.norm.value,
                "component": self.component.value,
                "reference.kind": self.reference.value,
                "reference.rtol": self.reference_rtol,
                "reference.max_steps": self.reference_max_steps,
                "newton.rel_tol": self.newton.rel_tol,
                "newton.abs_tol": self.newton.abs_tol,
                "newton.max_iters": self.newton.max_iters,
                "jacobian.reuse": self.newton.jacobian_reuse.value,
            }
        )
        if self.reference_path:
            flat["reference.path"] = self.reference_path
        return flat
