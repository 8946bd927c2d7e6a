"""Per-attribute generalisation ladders and the joint lattice of their levels.

A hierarchy maps raw values to coarser tokens over levels ``0..h-1``:
level 0 is the value itself, level ``h-1`` collapses everything to one
token, and coarsening is monotone (values mapped together stay together
at every coarser level).
"""

from __future__ import annotations

import csv
import itertools
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DomainError, SchemaMismatchError

LatticeNode = tuple[int, ...]


def canonical_value(value) -> str:
    """Text form a hierarchy keys on: integral floats print without decimals."""
    if isinstance(value, (bool,)):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        f = float(value)
        if f.is_integer() and abs(f) < 1e16:
            return str(int(f))
        return repr(f)
    return str(value)


class Hierarchy:
    """Generalisation ladder for one attribute.

    ``mapper(canonical, level)`` must be total on the hierarchy's domain,
    the identity at level 0 and constant at level ``h-1``.
    """

    def __init__(
        self,
        attribute: str,
        h: int,
        mapper: Callable[[str, int], str],
        domain: frozenset[str] | None = None,
    ):
        if h < 1:
            raise DomainError(f"hierarchy {attribute!r}: h must be >= 1, got {h}")
        self.attribute = attribute
        self.h = h
        self._mapper = mapper
        self.domain = domain

    def generalise(self, value, level: int) -> str:
        if not 0 <= level <= self.h - 1:
            raise DomainError(
                f"hierarchy {self.attribute!r}: level {level} outside 0..{self.h - 1}"
            )
        cv = canonical_value(value)
        if self.domain is not None and cv not in self.domain:
            raise DomainError(
                f"hierarchy {self.attribute!r}: value {cv!r} not in domain"
            )
        return self._mapper(cv, level)

    @staticmethod
    def from_table(attribute: str, rows: list[tuple[str, ...]]) -> "Hierarchy":
        """Build from one row per raw value with h tokens (level 0 .. h-1).

        The first cell of each row is the raw value. Monotone coarsening and
        a constant top level are enforced.
        """
        if not rows:
            raise SchemaMismatchError(f"hierarchy {attribute!r}: no rows")
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise SchemaMismatchError(
                f"hierarchy {attribute!r}: ragged rows (widths {sorted(widths)})"
            )
        h = widths.pop()
        raws = [r[0] for r in rows]
        if len(set(raws)) != len(raws):
            raise SchemaMismatchError(f"hierarchy {attribute!r}: duplicate raw values")
        if h >= 2 and len({r[h - 1] for r in rows}) != 1:
            raise SchemaMismatchError(
                f"hierarchy {attribute!r}: top level is not a single token"
            )
        # monotone coarsening: same token at level l implies same token at l+1
        for l in range(h - 1):
            upper: dict[str, str] = {}
            for r in rows:
                prev = upper.setdefault(r[l], r[l + 1])
                if prev != r[l + 1]:
                    raise SchemaMismatchError(
                        f"hierarchy {attribute!r}: level {l} token {r[l]!r} maps to "
                        f"both {prev!r} and {r[l + 1]!r} at level {l + 1}"
                    )
        table = {r[0]: r for r in rows}

        def mapper(cv: str, level: int) -> str:
            return table[cv][level]

        return Hierarchy(attribute, h, mapper, domain=frozenset(raws))


def generalise(value, hier: Hierarchy, level: int) -> str:
    """Token for ``value`` at ``level`` of ``hier``."""
    return hier.generalise(value, level)


def _year_mapper(cv: str, level: int) -> str:
    try:
        year = int(cv)
    except ValueError:
        raise DomainError(f"year hierarchy: {cv!r} is not a year") from None
    if level == 0:
        return cv
    if level == 4:
        return "*"
    width = {1: 2, 2: 4, 3: 8}[level]
    lo = (year // width) * width
    return f"[{lo}-{lo + width - 1}]"


def _gender_mapper(cv: str, level: int) -> str:
    return cv if level == 0 else "Person"


def _star_top_mapper(cv: str, level: int) -> str:
    return cv if level == 0 else "*"


def _marital_mapper(cv: str, level: int) -> str:
    if level == 0:
        return cv
    if level == 2:
        return "*"
    return "In marriage" if cv.lower().startswith("married") else "Alone"


def _zip_mapper(cv: str, level: int) -> str:
    if len(cv) != 5:
        raise DomainError(f"zip hierarchy: {cv!r} is not a 5-character code")
    if level == 0:
        return cv
    return cv[: 5 - level] + "*" * level


def year_of_birth_hierarchy() -> Hierarchy:
    """5 levels: value, 2-yr, 4-yr, 8-yr interval, ``*``. Intervals are anchored
    at multiples of their width counted from year 0."""
    return Hierarchy("year_of_birth", 5, _year_mapper)


def gender_hierarchy() -> Hierarchy:
    return Hierarchy("gender", 2, _gender_mapper)


def race_hierarchy() -> Hierarchy:
    return Hierarchy("race", 2, _star_top_mapper)


def marital_status_hierarchy() -> Hierarchy:
    """3 levels: value, Alone / In marriage, ``*``. Values whose canonical form
    starts with 'married' (case-insensitive) count as in-marriage."""
    return Hierarchy("marital_status", 3, _marital_mapper)


def zip_code_hierarchy() -> Hierarchy:
    """6 levels of trailing-digit masking for 5-character codes."""
    return Hierarchy("zip_code", 6, _zip_mapper)


def builtin_hierarchies() -> dict[str, Hierarchy]:
    """The stock ladders, keyed by attribute name."""
    return {
        "year_of_birth": year_of_birth_hierarchy(),
        "gender": gender_hierarchy(),
        "race": race_hierarchy(),
        "marital_status": marital_status_hierarchy(),
        "zip_code": zip_code_hierarchy(),
    }


def load_hierarchy_csv(path: str | Path) -> Hierarchy:
    """Read a ladder file: first row names the attribute, then one row per
    raw value with h cells (level-0 .. level-(h-1) tokens)."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            head = next(reader)
        except StopIteration:
            raise SchemaMismatchError(f"{path}: empty hierarchy file") from None
        cells = [c for c in head if c != ""]
        if len(cells) != 1:
            raise SchemaMismatchError(
                f"{path}: first row must name the attribute (one cell), got {head}"
            )
        rows = [tuple(r) for r in reader if r]
    return Hierarchy.from_table(cells[0], rows)


def lattice_enumerate(hierarchies: list[Hierarchy]) -> list[list[LatticeNode]]:
    """All level vectors over the given ladders, grouped by node height.

    ``result[s]`` holds every node whose levels sum to ``s``; the union over
    heights enumerates the full product lattice exactly once.
    """
    if not hierarchies:
        raise DomainError("lattice requires at least one hierarchy")
    top = sum(h.h - 1 for h in hierarchies)
    groups: list[list[LatticeNode]] = [[] for _ in range(top + 1)]
    for node in itertools.product(*(range(h.h) for h in hierarchies)):
        groups[sum(node)].append(node)
    return groups
