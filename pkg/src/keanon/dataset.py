"""Tabular datasets: schema-checked CSV loading, column roles, row-level transforms.

A :class:`Dataset` is immutable by convention: every operation returns a new
instance and never mutates its input. Numeric columns are stored as float64
arrays, categorical columns as object arrays of ``str``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyDatasetError,
    ParseError,
    SchemaMismatchError,
)

CATEGORICAL = "categorical"
NUMERIC = "numeric"

EXPLICIT = "explicit"
K_QUASI = "k_quasi"
EPS_QUASI = "eps_quasi"
SENSITIVE = "sensitive"

ROLES = (EXPLICIT, K_QUASI, EPS_QUASI, SENSITIVE)


@dataclass(frozen=True)
class Schema:
    """Ordered column names and kinds (``categorical`` or ``numeric``)."""

    columns: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if not self.columns:
            raise SchemaMismatchError("schema must declare at least one column")
        names = [name for name, _ in self.columns]
        if len(set(names)) != len(names):
            raise SchemaMismatchError(f"duplicate column names in schema: {names}")
        for name, kind in self.columns:
            if kind not in (CATEGORICAL, NUMERIC):
                raise SchemaMismatchError(f"column {name!r}: unknown kind {kind!r}")

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.columns]

    def kind(self, name: str) -> str:
        for col, kind in self.columns:
            if col == name:
                return kind
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(col == name for col, _ in self.columns)


@dataclass(frozen=True)
class Dataset:
    """A rectangular table of records laid out column-wise.

    ``columns[name]`` is a float64 array for numeric columns and an object
    array of ``str`` for categorical ones; all arrays share the same length.
    """

    schema: Schema
    columns: dict[str, np.ndarray] = field(repr=False)

    def __post_init__(self):
        lengths = {name: len(arr) for name, arr in self.columns.items()}
        if set(lengths) != set(self.schema.names):
            raise SchemaMismatchError(
                f"columns {sorted(lengths)} do not match schema {self.schema.names}"
            )
        if len(set(lengths.values())) > 1:
            raise SchemaMismatchError(f"ragged columns: {lengths}")

    @property
    def n(self) -> int:
        return len(self.columns[self.schema.names[0]])

    def column(self, name: str) -> np.ndarray:
        return self.columns[name]

    def rows(self):
        """Iterate records as tuples in schema column order."""
        cols = [self.columns[name] for name in self.schema.names]
        for i in range(self.n):
            yield tuple(col[i] for col in cols)

    def take(self, indices: np.ndarray) -> "Dataset":
        """Row subset/reorder by integer indices."""
        return Dataset(
            self.schema,
            {name: arr[indices] for name, arr in self.columns.items()},
        )

    @staticmethod
    def from_rows(schema: Schema, rows: list[tuple]) -> "Dataset":
        if not rows:
            raise EmptyDatasetError("dataset must contain at least one record")
        cols: dict[str, np.ndarray] = {}
        for j, (name, kind) in enumerate(schema.columns):
            if kind == NUMERIC:
                arr = np.array([float(r[j]) for r in rows], dtype=np.float64)
                if not np.all(np.isfinite(arr)):
                    bad = int(np.flatnonzero(~np.isfinite(arr))[0])
                    raise ParseError(
                        f"non-finite value in numeric column {name!r} at row {bad + 1}",
                        row=bad + 1,
                    )
            else:
                arr = np.array([str(r[j]) for r in rows], dtype=object)
            cols[name] = arr
        return Dataset(schema, cols)


@dataclass(frozen=True)
class AttributeClassification:
    """Role per column: explicit | k_quasi | eps_quasi | sensitive."""

    roles: dict[str, str]

    def validate(self, schema: Schema, require_pipeline_roles: bool = False) -> None:
        """Check coverage and typing rules against a schema.

        With ``require_pipeline_roles`` the full-pipeline minimum applies:
        at least one k-quasi and at least one eps-quasi.
        """
        for name in schema.names:
            if name not in self.roles:
                raise SchemaMismatchError(f"column {name!r} has no role assigned")
        for name, role in self.roles.items():
            if name not in schema:
                raise SchemaMismatchError(f"role assigned to unknown column {name!r}")
            if role not in ROLES:
                raise SchemaMismatchError(f"column {name!r}: unknown role {role!r}")
            if role == EPS_QUASI and schema.kind(name) != NUMERIC:
                raise SchemaMismatchError(
                    f"eps_quasi column {name!r} must be numeric, got categorical"
                )
        if require_pipeline_roles:
            if not self.with_role(schema, K_QUASI):
                raise SchemaMismatchError("pipeline requires at least one k_quasi column")
            if not self.with_role(schema, EPS_QUASI):
                raise SchemaMismatchError("pipeline requires at least one eps_quasi column")

    def with_role(self, schema: Schema, role: str) -> list[str]:
        """Column names carrying ``role``, in schema order."""
        return [name for name in schema.names if self.roles.get(name) == role]


def load_csv(path: str | Path, schema: Schema) -> Dataset:
    """Load a comma-delimited, header-first, UTF-8 file against ``schema``.

    The header must contain exactly the schema's column names (any order);
    cells in numeric columns must parse as finite reals. Missing values are
    not supported: an empty cell in any column is an error. Cells may not
    contain NUL characters (a limitation of the CSV dialect).
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDatasetError(f"{path}: file is empty") from None
        missing = [c for c in schema.names if c not in header]
        extra = [c for c in header if c not in schema.names]
        if missing or extra:
            raise SchemaMismatchError(
                f"{path}: header mismatch (missing {missing}, unexpected {extra})"
            )
        order = [header.index(c) for c in schema.names]
        kinds = [schema.kind(c) for c in schema.names]
        rows = []
        for lineno, raw in enumerate(reader, start=1):
            if len(raw) != len(header):
                raise SchemaMismatchError(
                    f"{path}: row {lineno} has {len(raw)} cells, expected {len(header)}"
                )
            cells = []
            for name, j, kind in zip(schema.names, order, kinds):
                cell = raw[j]
                if kind == NUMERIC:
                    try:
                        value = float(cell)
                    except ValueError:
                        raise ParseError(
                            f"{path}: row {lineno}: cannot parse {cell!r} as a number "
                            f"in column {name!r}",
                            row=lineno,
                        ) from None
                    if not math.isfinite(value):
                        raise ParseError(
                            f"{path}: row {lineno}: non-finite numeric value {cell!r}",
                            row=lineno,
                        )
                    cells.append(value)
                else:
                    if cell == "":
                        raise ParseError(
                            f"{path}: row {lineno}: empty cell (missing values unsupported)",
                            row=lineno,
                        )
                    cells.append(cell)
            rows.append(tuple(cells))
    if not rows:
        raise EmptyDatasetError(f"{path}: no data rows")
    return Dataset.from_rows(schema, rows)


def format_cell(value, kind: str) -> str:
    """Canonical text form of a cell: shortest round-tripping decimal for numerics."""
    if kind == NUMERIC:
        f = float(value)
        if f.is_integer() and abs(f) < 1e16:
            return str(int(f))
        return repr(f)
    return str(value)


def write_csv(ds: Dataset, path: str | Path) -> None:
    """Write a dataset in the same dialect :func:`load_csv` reads."""
    path = Path(path)
    kinds = [ds.schema.kind(c) for c in ds.schema.names]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ds.schema.names)
        for row in ds.rows():
            writer.writerow([format_cell(v, k) for v, k in zip(row, kinds)])


def remove_explicit_identifiers(
    ds: Dataset, cls: AttributeClassification
) -> Dataset:
    """Drop every column classified ``explicit``; record count and order unchanged."""
    cls.validate(ds.schema)
    keep = [(name, kind) for name, kind in ds.schema.columns
            if cls.roles[name] != EXPLICIT]
    if len(keep) == len(ds.schema.columns):
        return ds
    schema = Schema(tuple(keep))
    return Dataset(schema, {name: ds.columns[name] for name, _ in keep})


def shuffle_records(ds: Dataset, seed: int) -> Dataset:
    """Permute rows with a Fisher-Yates shuffle driven by a Philox counter-based
    generator keyed on ``seed``; the permutation depends only on (n, seed)."""
    perm = permutation_for(ds.n, seed)
    return ds.take(perm)


def permutation_for(n: int, seed: int) -> np.ndarray:
    """The permutation :func:`shuffle_records` applies for a given (n, seed)."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, n])))
    return rng.permutation(n)
