"""Typed tabular container for fairness audits.

Columns carry a declared dtype (categorical, numeric, boolean, timestamp)
and a role (feature, protected, label, prediction, score, timestamp,
period, weight). Structural rules are enforced at construction; cell-level
value rules are reported by :func:`validate` so a flawed file can still be
loaded and inspected.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Mapping, Sequence

from ._util import FairlensError

__all__ = [
    "DTYPES",
    "ROLES",
    "SINGLETON_ROLES",
    "MISSING_GROUP",
    "FrameError",
    "FrameLoadError",
    "ColumnSpec",
    "SchemaSpec",
    "Column",
    "AuditFrame",
    "ValidationIssue",
    "ValidationReport",
    "GroupKey",
    "GroupPartition",
    "load_csv",
    "save_csv",
    "validate",
    "partition_by_group",
    "group_label",
    "parse_group_label",
    "take_rows",
    "replace_cells",
]

DTYPES = ("categorical", "numeric", "boolean", "timestamp")
ROLES = (
    "feature",
    "protected",
    "label",
    "prediction",
    "score",
    "timestamp",
    "period",
    "weight",
)

# Roles that may appear on at most one column per frame.
SINGLETON_ROLES = frozenset(
    {"label", "prediction", "score", "timestamp", "period", "weight"}
)

# dtypes admissible for each role.
_ROLE_DTYPES: Mapping[str, frozenset] = {
    "feature": frozenset(DTYPES),
    "protected": frozenset({"categorical"}),
    "label": frozenset({"boolean", "numeric"}),
    "prediction": frozenset({"boolean", "numeric"}),
    "score": frozenset({"numeric"}),
    "timestamp": frozenset({"timestamp"}),
    "period": frozenset({"categorical"}),
    "weight": frozenset({"numeric"}),
}

GroupKey = tuple

# Sentinel group for rows missing any partition attribute value.
MISSING_GROUP: GroupKey = ("⟨missing⟩",)

_TRUE_TOKENS = frozenset({"1", "true"})
_FALSE_TOKENS = frozenset({"0", "false"})


class FrameError(FairlensError):
    """Structural problem with a frame, schema, or partition request."""


class FrameLoadError(FrameError):
    """CSV file could not be parsed against its schema."""


@dataclass(frozen=True)
class ColumnSpec:
    """Declared name, dtype, and role of one column."""

    name: str
    dtype: str
    role: str

    def __post_init__(self) -> None:
        if not isinstance(self.name, str) or not self.name:
            raise FrameError("column name must be a non-empty string")
        if self.dtype not in DTYPES:
            raise FrameError(
                f"column {self.name!r}: unknown dtype {self.dtype!r}; "
                f"expected one of {', '.join(DTYPES)}"
            )
        if self.role not in ROLES:
            raise FrameError(
                f"column {self.name!r}: unknown role {self.role!r}; "
                f"expected one of {', '.join(ROLES)}"
            )
        if self.dtype not in _ROLE_DTYPES[self.role]:
            raise FrameError(
                f"column {self.name!r}: role {self.role!r} requires dtype "
                f"{' or '.join(sorted(_ROLE_DTYPES[self.role]))}, got {self.dtype!r}"
            )

    def to_dict(self) -> dict:
        return {"name": self.name, "dtype": self.dtype, "role": self.role}


@dataclass(frozen=True)
class SchemaSpec:
    """Ordered column declarations plus the token that marks missing cells."""

    columns: tuple
    missing_token: str = ""

    def __post_init__(self) -> None:
        columns = tuple(self.columns)
        object.__setattr__(self, "columns", columns)
        if not columns:
            raise FrameError("schema declares no columns")
        _check_column_set(columns)
        if not isinstance(self.missing_token, str):
            raise FrameError("missing_token must be a string")

    @property
    def names(self) -> tuple:
        return tuple(spec.name for spec in self.columns)

    @classmethod
    def from_dict(cls, data: Mapping) -> "SchemaSpec":
        if not isinstance(data, Mapping):
            raise FrameError("schema document must be a JSON object")
        raw_columns = data.get("columns")
        if not isinstance(raw_columns, Sequence) or isinstance(raw_columns, str):
            raise FrameError("schema document needs a 'columns' array")
        columns = []
        for entry in raw_columns:
            if not isinstance(entry, Mapping):
                raise FrameError("each schema column must be an object")
            try:
                columns.append(
                    ColumnSpec(
                        name=entry["name"],
                        dtype=entry["dtype"],
                        role=entry["role"],
                    )
                )
            except KeyError as exc:
                raise FrameError(f"schema column missing key {exc.args[0]!r}") from None
        missing_token = data.get("missing_token", "")
        return cls(columns=tuple(columns), missing_token=missing_token)

    def to_dict(self) -> dict:
        return {
            "missing_token": self.missing_token,
            "columns": [spec.to_dict() for spec in self.columns],
        }


@dataclass(frozen=True)
class Column:
    """One materialized column: declaration plus parsed cells.

    Cell values are ``None`` for missing, ``str`` for categorical,
    ``float`` for numeric, ``int`` 0/1 for boolean, and
    :class:`datetime.datetime` for timestamp.
    """

    name: str
    dtype: str
    role: str
    cells: tuple

    def __post_init__(self) -> None:
        # Reuse the declaration checks; ColumnSpec raises on bad combos.
        ColumnSpec(self.name, self.dtype, self.role)
        object.__setattr__(self, "cells", tuple(self.cells))

    @property
    def spec(self) -> ColumnSpec:
        return ColumnSpec(self.name, self.dtype, self.role)

    def missing_count(self) -> int:
        return sum(1 for cell in self.cells if cell is None)


def _check_column_set(columns: Sequence) -> None:
    seen = set()
    for spec in columns:
        if spec.name in seen:
            raise FrameError(f"duplicate column name {spec.name!r}")
        seen.add(spec.name)
    for role in sorted(SINGLETON_ROLES):
        holders = [spec.name for spec in columns if spec.role == role]
        if len(holders) > 1:
            raise FrameError(
                f"role {role!r} may appear on at most one column, "
                f"found {', '.join(holders)}"
            )


@dataclass(frozen=True)
class AuditFrame:
    """Immutable column-major table with typed, role-tagged columns."""

    columns: tuple

    def __post_init__(self) -> None:
        columns = tuple(self.columns)
        object.__setattr__(self, "columns", columns)
        if not columns:
            raise FrameError("frame has no columns")
        _check_column_set([col.spec for col in columns])
        lengths = {len(col.cells) for col in columns}
        if len(lengths) > 1:
            raise FrameError(
                "columns have unequal lengths: "
                + ", ".join(f"{col.name}={len(col.cells)}" for col in columns)
            )

    @property
    def row_count(self) -> int:
        return len(self.columns[0].cells)

    @property
    def names(self) -> tuple:
        return tuple(col.name for col in self.columns)

    def has_column(self, name: str) -> bool:
        return any(col.name == name for col in self.columns)

    def column(self, name: str) -> Column:
        for col in self.columns:
            if col.name == name:
                return col
        raise FrameError(f"no column named {name!r}")

    def columns_with_role(self, role: str) -> tuple:
        if role not in ROLES:
            raise FrameError(f"unknown role {role!r}")
        return tuple(col for col in self.columns if col.role == role)

    def column_with_role(self, role: str):
        """The unique column holding ``role``, or None. Singleton roles only."""
        if role not in SINGLETON_ROLES:
            raise FrameError(f"role {role!r} is not a singleton role")
        matches = self.columns_with_role(role)
        return matches[0] if matches else None


def _parse_cell(text: str, dtype: str, name: str, row: int):
    if dtype == "categorical":
        return text
    if dtype == "numeric":
        try:
            value = float(text)
        except ValueError:
            raise FrameLoadError(
                f"column {name!r}, data row {row}: {text!r} is not numeric"
            ) from None
        if not math.isfinite(value):
            raise FrameLoadError(
                f"column {name!r}, data row {row}: {text!r} is not finite"
            )
        return value
    if dtype == "boolean":
        token = text.strip().lower()
        if token in _TRUE_TOKENS:
            return 1
        if token in _FALSE_TOKENS:
            return 0
        raise FrameLoadError(
            f"column {name!r}, data row {row}: {text!r} is not a boolean "
            "(expected 0, 1, true, or false)"
        )
    if dtype == "timestamp":
        token = text.strip()
        if token.endswith(("Z", "z")):
            token = token[:-1] + "+00:00"
        try:
            return datetime.fromisoformat(token)
        except ValueError:
            raise FrameLoadError(
                f"column {name!r}, data row {row}: {text!r} is not an "
                "ISO-8601 timestamp"
            ) from None
    raise FrameError(f"unknown dtype {dtype!r}")


def _render_cell(value, dtype: str, missing_token: str) -> str:
    if value is None:
        return missing_token
    if dtype == "categorical":
        return value
    if dtype == "numeric":
        return repr(value)
    if dtype == "boolean":
        return "1" if value else "0"
    if dtype == "timestamp":
        return value.isoformat()
    raise FrameError(f"unknown dtype {dtype!r}")


def load_csv(path: str, schema: SchemaSpec) -> AuditFrame:
    """Parse a CSV file against ``schema`` into an :class:`AuditFrame`.

    Expects a header row matching the schema's column names in order
    (comma-separated, RFC-4180 quoting, UTF-8). Cells equal to the
    schema's missing token become ``None``. The first unparseable cell
    aborts the load with a :class:`FrameLoadError` naming the column and
    0-based data row.
    """
    if not isinstance(schema, SchemaSpec):
        raise FrameError("schema must be a SchemaSpec")
    try:
        handle = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise FrameLoadError(f"cannot read {path}: {exc.strerror or exc}") from None
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise FrameLoadError(f"{path}: file is empty, expected a header row") from None
        expected = list(schema.names)
        if header != expected:
            raise FrameLoadError(
                f"{path}: header {header!r} does not match schema columns {expected!r}"
            )
        cells_by_column = [[] for _ in schema.columns]
        for row_index, record in enumerate(reader):
            if len(record) != len(expected):
                raise FrameLoadError(
                    f"{path}: data row {row_index} has {len(record)} cells, "
                    f"expected {len(expected)}"
                )
            for col_index, text in enumerate(record):
                spec = schema.columns[col_index]
                if text == schema.missing_token:
                    cells_by_column[col_index].append(None)
                else:
                    cells_by_column[col_index].append(
                        _parse_cell(text, spec.dtype, spec.name, row_index)
                    )
    columns = tuple(
        Column(spec.name, spec.dtype, spec.role, tuple(cells))
        for spec, cells in zip(schema.columns, cells_by_column)
    )
    return AuditFrame(columns=columns)


def save_csv(frame: AuditFrame, path: str, missing_token: str = "") -> None:
    """Write ``frame`` to ``path`` in canonical CSV form.

    Numerics render via ``repr`` (full precision), booleans as 1/0,
    timestamps in ISO-8601, missing cells as ``missing_token``. Loading
    the result against the matching schema reproduces the frame exactly.
    """
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(frame.names)
        for row in range(frame.row_count):
            writer.writerow(
                _render_cell(col.cells[row], col.dtype, missing_token)
                for col in frame.columns
            )


@dataclass(frozen=True)
class ValidationIssue:
    """One problem found in a frame.

    ``row`` is a 0-based data row, or None for column-level issues;
    ``column`` is None for frame-level issues.
    """

    column: object
    row: object
    message: str

    def to_dict(self) -> dict:
        return {"column": self.column, "row": self.row, "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    """Cell- and column-level findings from :func:`validate`."""

    errors: tuple = ()
    warnings: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "errors": [issue.to_dict() for issue in self.errors],
            "warnings": [issue.to_dict() for issue in self.warnings],
        }


def validate(frame: AuditFrame) -> ValidationReport:
    """Check cell-level value rules the loader deliberately does not enforce.

    Errors: label/prediction values outside {0, 1}, scores outside
    [0, 1], non-positive weights. Warnings: any column more than half
    missing, and the absence of a protected column. Row numbers are
    0-based data rows.
    """
    errors = []
    warnings = []
    for col in frame.columns:
        if col.role in ("label", "prediction"):
            for row, value in enumerate(col.cells):
                if value is not None and value not in (0, 1):
                    errors.append(
                        ValidationIssue(
                            col.name,
                            row,
                            f"{col.role} value {value!r} is not 0 or 1",
                        )
                    )
        elif col.role == "score":
            for row, value in enumerate(col.cells):
                if value is not None and not 0.0 <= value <= 1.0:
                    errors.append(
                        ValidationIssue(
                            col.name, row, f"score {value!r} is outside [0, 1]"
                        )
                    )
        elif col.role == "weight":
            for row, value in enumerate(col.cells):
                if value is not None and value <= 0.0:
                    errors.append(
                        ValidationIssue(
                            col.name, row, f"weight {value!r} is not positive"
                        )
                    )
        if frame.row_count and col.missing_count() / frame.row_count > 0.5:
            warnings.append(
                ValidationIssue(
                    col.name,
                    None,
                    f"column is {col.missing_count()}/{frame.row_count} missing "
                    "(more than half)",
                )
            )
    if not frame.columns_with_role("protected"):
        warnings.append(
            ValidationIssue(
                None,
                None,
                "frame has no protected column; group audits will be unavailable",
            )
        )
    return ValidationReport(errors=tuple(errors), warnings=tuple(warnings))


def group_label(key: GroupKey) -> str:
    """Display form of a group key: values joined with '|'."""
    return "|".join(key)


def parse_group_label(label: str) -> GroupKey:
    """Inverse of :func:`group_label` for CLI arguments."""
    return tuple(label.split("|"))


@dataclass(frozen=True)
class GroupPartition:
    """Assignment of every row to a protected-attribute group.

    ``keys`` is sorted lexicographically; rows missing any partition
    attribute fall into :data:`MISSING_GROUP`.
    """

    attributes: tuple
    key_of_row: tuple
    groups: dict = field(compare=False)

    @property
    def keys(self) -> tuple:
        return tuple(self.groups)

    def rows(self, key: GroupKey) -> tuple:
        try:
            return self.groups[key]
        except KeyError:
            raise FrameError(f"no group {group_label(key)!r} in partition") from None

    def labels(self) -> tuple:
        return tuple(group_label(key) for key in self.keys)


def partition_by_group(frame: AuditFrame, attributes: Iterable) -> GroupPartition:
    """Partition rows by the values of one or more protected columns.

    Every attribute must exist with role protected and dtype categorical.
    A row missing any attribute value lands in :data:`MISSING_GROUP`.
    """
    attrs = tuple(attributes)
    if not attrs:
        raise FrameError("partition needs at least one attribute")
    if len(set(attrs)) != len(attrs):
        raise FrameError("partition attributes must be distinct")
    columns = []
    for name in attrs:
        col = frame.column(name)
        if col.role != "protected":
            raise FrameError(
                f"column {name!r} has role {col.role!r}, expected 'protected'"
            )
        if col.dtype != "categorical":
            raise FrameError(
                f"column {name!r} has dtype {col.dtype!r}, expected 'categorical'"
            )
        columns.append(col)
    key_of_row = []
    membership = {}
    for row in range(frame.row_count):
        values = tuple(col.cells[row] for col in columns)
        key = MISSING_GROUP if any(v is None for v in values) else values
        key_of_row.append(key)
        membership.setdefault(key, []).append(row)
    groups = {key: tuple(membership[key]) for key in sorted(membership)}
    return GroupPartition(
        attributes=attrs, key_of_row=tuple(key_of_row), groups=groups
    )


def take_rows(frame: AuditFrame, indices: Sequence) -> AuditFrame:
    """New frame holding the given rows, in the given order (repeats allowed)."""
    for index in indices:
        if not 0 <= index < frame.row_count:
            raise FrameError(f"row index {index} out of range 0..{frame.row_count - 1}")
    return AuditFrame(
        columns=tuple(
            Column(
                col.name,
                col.dtype,
                col.role,
                tuple(col.cells[i] for i in indices),
            )
            for col in frame.columns
        )
    )


def replace_cells(frame: AuditFrame, name: str, cells: Sequence) -> AuditFrame:
    """New frame with column ``name``'s cells replaced."""
    target = frame.column(name)
    new_cells = tuple(cells)
    if len(new_cells) != frame.row_count:
        raise FrameError(
            f"replacement for {name!r} has {len(new_cells)} cells, "
            f"expected {frame.row_count}"
        )
    return AuditFrame(
        columns=tuple(
            Column(col.name, col.dtype, col.role, new_cells)
            if col.name == name
            else col
            for col in frame.columns
        )
    )
