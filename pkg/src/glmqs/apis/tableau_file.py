"""Tableau files: a YAML mapping with a schema version and row-per-line matrices.

    schema_version: 1
    name: GLMQS-1
    p: 1
    s: 2
    r: 2
    lambda: 0.4779022865816724
    coeff_digits: 16
    c: [0.0, 1.0]
    A:
    - [0.4779022865816724, 0.0]
    - [1.0, 0.4779022865816724]
    ...

Floats are written with their shortest round-trip repr, so write-then-read is exact.
"""

import logging
from pathlib import Path
from typing import Any

from ..models.builtin_tableaus import BUILTIN_NAMES, builtin_tableau
from ..models.custom_error import TableauValidationError
from ..models.tableau import GlmTableau
from .yaml_editor import YamlEditor

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

_REQUIRED = ("name", "p", "lambda", "c", "A", "U", "B", "V")


def _as_float(value: Any, where: str) -> float:
    if isinstance(value, bool):
        raise TableauValidationError(f"{where}: expected a number, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise TableauValidationError(f"{where}: expected a number, got {value!r}") from None


def _as_vector(value: Any, key: str) -> list[float]:
    if not isinstance(value, list):
        raise TableauValidationError(f"{key}: expected a list of numbers")
    return [_as_float(v, f"{key}[{i + 1}]") for i, v in enumerate(value)]


def _as_matrix(value: Any, key: str) -> list[list[float]]:
    if not isinstance(value, list) or not all(isinstance(row, list) for row in value):
        raise TableauValidationError(f"{key}: expected a list of rows")
    widths = {len(row) for row in value}
    if len(widths) > 1:
        raise TableauValidationError(f"{key}: rows have different lengths {sorted(widths)}")
    return [
        [_as_float(v, f"{key}[{i + 1},{j + 1}]") for j, v in enumerate(row)]
        for i, row in enumerate(value)
    ]


def _as_int(value: Any, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise TableauValidationError(f"{key}: expected an integer, got {value!r}")
    return value


def tableau_from_mapping(data: dict[str, Any]) -> GlmTableau:
    """Build a tableau from a parsed document, naming the field of any violation."""
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise TableauValidationError(
            f"schema_version: unsupported version {version!r}, expected {SCHEMA_VERSION}"
        )
    for key in _REQUIRED:
        if key not in data:
            raise TableauValidationError(f"{key}: required field is missing")
    p = _as_int(data["p"], "p")
    for key in ("s", "r"):
        if key in data and _as_int(data[key], key) != p + 1:
            raise TableauValidationError(
                f"{key}: must equal p + 1 = {p + 1}, got {data[key]!r}"
            )
    printed = data.get("printed_error_constant")
    if printed is not None:
        printed = _as_float(printed, "printed_error_constant")
    return GlmTableau(
        name=str(data["name"]),
        p=p,
        lam=_as_float(data["lambda"], "lambda"),
        c=_as_vector(data["c"], "c"),  # type: ignore[arg-type]
        A=_as_matrix(data["A"], "A"),  # type: ignore[arg-type]
        U=_as_matrix(data["U"], "U"),  # type: ignore[arg-type]
        B=_as_matrix(data["B"], "B"),  # type: ignore[arg-type]
        V=_as_matrix(data["V"], "V"),  # type: ignore[arg-type]
        coeff_digits=_as_int(data.get("coeff_digits", 16), "coeff_digits"),
        printed_error_constant=printed,
    )


def tableau_to_mapping(t: GlmTableau) -> dict[str, Any]:
    data: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "name": t.name,
        "p": int(t.p),
        "s": t.s,
        "r": t.r,
        "lambda": float(t.lam),
        "coeff_digits": int(t.coeff_digits),
    }
    if t.printed_error_constant is not None:
        data["printed_error_constant"] = float(t.printed_error_constant)
    data["c"] = [float(v) for v in t.c]
    for key in ("A", "U", "B", "V"):
        data[key] = [[float(v) for v in row] for row in getattr(t, key)]
    return data


def read_tableau(path: str | Path) -> GlmTableau:
    editor = YamlEditor(path)
    tableau = tableau_from_mapping(editor.data)
    logger.debug("Read tableau %s from %s", tableau.name, path)
    return tableau


def write_tableau(t: GlmTableau, path: str | Path) -> None:
    editor = YamlEditor(path, create=True)
    editor.data = tableau_to_mapping(t)
    editor.save_changes()


def load_tableau(reference: str) -> GlmTableau:
    """Resolve a CLI argument: a built-in identifier or a tableau file path."""
    if reference.upper() in BUILTIN_NAMES:
        return builtin_tableau(reference)
    return read_tableau(reference)
