class CustomError(Exception):
    """Base exception for the GLMQS suite."""

    def __init__(self, *args: object) -> None:
        super().__init__(*args)

    def __str__(self) -> str:
        if self.args:
            return str(self.args[0])
        return ""


class TableauValidationError(CustomError):
    """A tableau or tableau file violates a structural invariant."""


class NotFoundError(CustomError):
    """Unknown built-in method, problem or preset."""


class DegeneracyError(CustomError):
    """A matrix the computation needs to invert is singular."""


class PoleError(CustomError):
    """The stability matrix was requested at the resolvent pole ω = 1/λ."""


class QuadraticFormError(CustomError):
    """The stability polynomial is not η^(r-2) times a quadratic."""


class StageFailureError(CustomError):
    """Newton iteration on an implicit stage diverged or hit its iteration cap."""

    def __init__(
        self,
        message: str,
        stage: int,
        residual: float,
        step: int | None = None,
    ) -> None:
        super().__init__(message, stage, residual, step)
        self.stage = stage
        self.residual = residual
        self.step = step

    def at_step(self, step: int) -> "StageFailureError":
        """Return a copy annotated with the global step number."""
        return StageFailureError(
            f"step {step}: {self.args[0]}", self.stage, self.residual, step
        )


class FactorizationError(CustomError):
    """The iteration matrix I - hλJ is numerically singular."""


class ConstructionError(CustomError):
    """No start of the construction root solve converged."""

    def __init__(self, message: str, best_residual: float) -> None:
        super().__init__(message, best_residual)
        self.best_residual = best_residual


class InfeasibleError(CustomError):
    """No Schur-feasible point exists on the screening grid."""


class UndefinedOrderError(CustomError):
    """Observed order requested from non-positive errors or step counts."""


class ReferenceFailureError(CustomError):
    """Self-refined reference did not reach the requested agreement."""

    def __init__(self, message: str, gap: float) -> None:
        super().__init__(message, gap)
        self.gap = gap


class ConfigError(CustomError):
    """Configuration file could not be read or holds an invalid value."""
