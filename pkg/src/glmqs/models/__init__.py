from .builtin_tableaus import BUILTIN_NAMES, builtin_tableau
from .configs import (
    BurgersConfig,
    ComponentSelection,
    FreeParameterSet,
    GrayScottConfig,
    JacobianReuse,
    NewtonConfig,
    NormKind,
    ReferenceKind,
    StudySpec,
    VdpConfig,
)
from .custom_error import (
    ConfigError,
    ConstructionError,
    CustomError,
    DegeneracyError,
    FactorizationError,
    InfeasibleError,
    NotFoundError,
    PoleError,
    QuadraticFormError,
    ReferenceFailureError,
    StageFailureError,
    TableauValidationError,
    UndefinedOrderError,
)
from .nordsieck import IntegrationResult, NordsieckState, SolverStats, StageValues
from .ode_system import JacobianStructure, OdeSystem, StructureKind
from .reports import (
    CheckOutcome,
    ConstructionResult,
    ConvergenceRow,
    DiffusionSweep,
    ErrorConstantReport,
    IqsCertificate,
    LStabilityVerdict,
    QuadraticFormVerdict,
    ReferenceResult,
    ResidualReport,
    ScanVerdict,
    StabilityMatrixSample,
    StabilityPolynomial,
    StabilityReport,
    StudyResult,
)
from .tableau import GlmTableau, OrderConditionSystem

__all__ = [
    "BUILTIN_NAMES",
    "BurgersConfig",
    "CheckOutcome",
    "ComponentSelection",
    "ConfigError",
    "ConstructionError",
    "ConstructionResult",
    "ConvergenceRow",
    "CustomError",
    "DegeneracyError",
    "DiffusionSweep",
    "ErrorConstantReport",
    "FactorizationError",
    "FreeParameterSet",
    "GlmTableau",
    "GrayScottConfig",
    "InfeasibleError",
    "IntegrationResult",
    "IqsCertificate",
    "JacobianReuse",
    "JacobianStructure",
    "LStabilityVerdict",
    "NewtonConfig",
    "NordsieckState",
    "NormKind",
    "NotFoundError",
    "OdeSystem",
    "OrderConditionSystem",
    "PoleError",
    "QuadraticFormError",
    "QuadraticFormVerdict",
    "ReferenceFailureError",
    "ReferenceKind",
    "ReferenceResult",
    "ResidualReport",
    "ScanVerdict",
    "SolverStats",
    "StabilityMatrixSample",
    "StabilityPolynomial",
    "StabilityReport",
    "StageFailureError",
    "StageValues",
    "StructureKind",
    "StudyResult",
    "StudySpec",
    "TableauValidationError",
    "UndefinedOrderError",
    "VdpConfig",
    "builtin_tableau",
]
