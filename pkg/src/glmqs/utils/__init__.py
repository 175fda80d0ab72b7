from .utils import (
    digits_tolerance,
    format_number,
    inverse_factorials,
    nilpotent_radius_tolerance,
    relative_l2,
    symmetric_log_grid,
    uniform_abscissae,
)

__all__ = [
    "digits_tolerance",
    "format_number",
    "inverse_factorials",
    "nilpotent_radius_tolerance",
    "relative_l2",
    "symmetric_log_grid",
    "uniform_abscissae",
]
