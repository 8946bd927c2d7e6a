"""k-anonymous partitioning of the k-quasi columns.

Two algorithms are provided: a global-recoding lattice search over hierarchy
levels with a suppression budget (``ola_anonymise``), and local recoding by
recursive median splits (``mondrian_anonymise``). Both emit a
:class:`Partition` of equivalence classes whose members share one
generalised key.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .jsonutil import json_ready
from .dataset import (
    CATEGORICAL,
    K_QUASI,
    NUMERIC,
    AttributeClassification,
    Dataset,
    format_cell,
)
from .errors import ConfigurationError, DomainError, InfeasibleError
from .hierarchy import Hierarchy, LatticeNode

# key codes wider than this switch to incremental construction with compaction
_KEY_SPACE_LIMIT = 1 << 62


@dataclass(frozen=True)
class EquivalenceClass:
    """Records sharing one generalised k-quasi key.

    ``key`` holds one display token per k-quasi column; ``bounds`` (median
    splits only) holds the per-column [lo, hi] member intervals in ordered
    value space, used by the precision-loss metrics.
    """

    key: tuple[str, ...]
    members: np.ndarray
    bounds: tuple[tuple[float, float], ...] | None = None

    @property
    def m(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class Partition:
    """Equivalence classes plus the records suppressed to reach k-anonymity."""

    classes: list[EquivalenceClass]
    suppressed: frozenset[int]
    k: int
    algorithm: str
    kquasi_columns: tuple[str, ...]
    node: LatticeNode | None = None
    attr_ranges: dict[str, tuple[float, float]] | None = field(default=None, repr=False)

    def validate(self, n: int) -> None:
        """Disjoint cover of 0..n-1 and class sizes >= k."""
        seen = np.zeros(n, dtype=bool)
        for ec in self.classes:
            if ec.m < self.k:
                raise DomainError(f"class {ec.key} has {ec.m} members < k={self.k}")
            if seen[ec.members].any():
                raise DomainError("overlapping equivalence classes")
            seen[ec.members] = True
        for i in self.suppressed:
            if seen[i]:
                raise DomainError(f"record {i} both suppressed and in a class")
            seen[i] = True
        if not seen.all():
            raise DomainError("partition does not cover all records")

    def retained_indices(self, n: int) -> np.ndarray:
        """Ascending indices of records kept (not suppressed)."""
        mask = np.ones(n, dtype=bool)
        if self.suppressed:
            mask[list(self.suppressed)] = False
        return np.flatnonzero(mask)

    def suppressed_fraction(self, n: int) -> float:
        return len(self.suppressed) / n

    def to_json_dict(self) -> dict:
        return json_ready({
            "algorithm": self.algorithm,
            "k": self.k,
            "node": list(self.node) if self.node is not None else None,
            "kquasi_columns": list(self.kquasi_columns),
            "classes": [
                {"key": list(ec.key), "size": ec.m} for ec in self.classes
            ],
            "suppressed": sorted(int(i) for i in self.suppressed),
        })


def node_loss_key(node: LatticeNode, level_counts: list[int]) -> Fraction:
    """Exact-rational generalisation cost used to order lattice nodes.

    Sum over attributes of level/(h-1); attributes with a single level can
    never be generalised and contribute zero.
    """
    total = Fraction(0)
    for level, h in zip(node, level_counts):
        if h > 1:
            total += Fraction(level, h - 1)
    return total


def ola_anonymise(
    ds: Dataset,
    cls: AttributeClassification,
    hiers: dict[str, Hierarchy],
    k: int,
    max_supp: float,
) -> Partition:
    """Global recoding: pick the cheapest feasible lattice node.

    A node is feasible when generalising every k-quasi to its levels and
    suppressing all records in classes smaller than k leaves a suppressed
    fraction <= ``max_supp``. Among feasible nodes the one with minimal
    average categorical precision loss wins; ties break on lower node height,
    then the lexicographically smaller level vector.
    """
    cls.validate(ds.schema)
    n = ds.n
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if k > n:
        raise InfeasibleError(f"k={k} exceeds record count n={n}")
    if not 0.0 <= max_supp <= 1.0:
        raise DomainError(f"max_supp must lie in [0, 1], got {max_supp}")
    kq = cls.with_role(ds.schema, K_QUASI)
    if not kq:
        raise ConfigurationError("no k_quasi columns classified")
    for name in kq:
        if name not in hiers:
            raise ConfigurationError(f"k_quasi column {name!r} has no hierarchy")

    q = len(kq)
    level_counts = [hiers[name].h for name in kq]
    max_h = max(level_counts)

    # Dense per-(attribute, level) token codes, computed once on the distinct
    # raw values of each column.
    code_cols = np.zeros((q, max_h, n), dtype=np.int64)
    cards = np.zeros((q, max_h), dtype=np.int64)
    token_of_code: list[list[np.ndarray]] = []
    for a, name in enumerate(kq):
        uniques, inverse = np.unique(ds.column(name), return_inverse=True)
        hier = hiers[name]
        per_level = []
        for l in range(hier.h):
            tokens = np.array(
                [hier.generalise(v, l) for v in uniques], dtype=object
            )
            distinct, codes = np.unique(tokens, return_inverse=True)
            code_cols[a, l] = codes[inverse]
            cards[a, l] = len(distinct)
            per_level.append(distinct)
        token_of_code.append(per_level)

    nodes = sorted(
        itertools.product(*(range(h) for h in level_counts)),
        key=lambda nd: (node_loss_key(nd, level_counts), sum(nd), nd),
    )

    max_supp_count = max_supp * n

    def combined_codes(node):
        """Per-record key codes, lexicographic in attribute order."""
        node_cards = [int(cards[a, node[a]]) for a in range(q)]
        total = 1
        for c in node_cards:
            total *= c
        if total < _KEY_SPACE_LIMIT:
            strides = np.empty(q, dtype=np.int64)
            acc = 1
            for a in range(q - 1, -1, -1):
                strides[a] = acc
                acc *= node_cards[a]
            levels = np.array(node, dtype=np.int64)
            return kernels.combine_level_codes(code_cols, levels, strides), total
        # cardinality product would overflow the key space: build the key
        # incrementally, compacting to dense ranks whenever it grows too wide
        combined = code_cols[0, node[0]].copy()
        width = node_cards[0]
        for a in range(1, q):
            if width * node_cards[a] >= _KEY_SPACE_LIMIT:
                _, combined = np.unique(combined, return_inverse=True)
                width = int(combined.max()) + 1
            combined = combined * node_cards[a] + code_cols[a, node[a]]
            width *= node_cards[a]
        return combined, width

    chosen = None
    chosen_combined = None
    for node in nodes:
        combined, key_space = combined_codes(node)
        if key_space <= max(4 * n, 1 << 16):
            counts = np.bincount(combined, minlength=key_space)
        else:
            _, counts = np.unique(combined, return_counts=True)
        supp = kernels.suppressed_below_k(counts, k)
        if supp <= max_supp_count:
            chosen = node
            chosen_combined = combined
            break
    if chosen is None:
        # unreachable for k <= n: the top node has a single class of size n
        raise InfeasibleError("no feasible lattice node")

    order = np.argsort(chosen_combined, kind="stable")
    sorted_codes = chosen_combined[order]
    boundaries = np.flatnonzero(np.diff(sorted_codes)) + 1
    groups = np.split(order, boundaries)

    classes: list[EquivalenceClass] = []
    suppressed: list[int] = []
    for g in groups:
        if len(g) >= k:
            first = g[0]
            key = tuple(
                str(token_of_code[a][chosen[a]][code_cols[a, chosen[a], first]])
                for a in range(q)
            )
            classes.append(EquivalenceClass(key=key, members=g))
        else:
            suppressed.extend(int(i) for i in g)
    return Partition(
        classes=classes,
        suppressed=frozenset(suppressed),
        k=k,
        algorithm="ola",
        kquasi_columns=tuple(kq),
        node=chosen,
    )


def _interval_token(lo: float, hi: float, kind: str, order: list[str] | None) -> str:
    if kind == CATEGORICAL:
        lo_v, hi_v = order[int(lo)], order[int(hi)]
        return lo_v if lo_v == hi_v else f"[{lo_v}..{hi_v}]"
    lo_s, hi_s = format_cell(lo, NUMERIC), format_cell(hi, NUMERIC)
    return lo_s if lo == hi else f"[{lo_s}-{hi_s}]"


def mondrian_anonymise(
    ds: Dataset,
    cls: AttributeClassification,
    k: int,
    orders: dict[str, list[str]] | None = None,
) -> Partition:
    """Local recoding by recursive median splits; no suppression.

    Numeric k-quasis split on their values; categorical k-quasis require a
    total order in ``orders`` and split on ranks. Class keys are per-column
    [min, max] intervals of the member values.
    """
    cls.validate(ds.schema)
    n = ds.n
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if k > n:
        raise InfeasibleError(f"k={k} exceeds record count n={n}")
    kq = cls.with_role(ds.schema, K_QUASI)
    if not kq:
        raise ConfigurationError("no k_quasi columns classified")
    orders = orders or {}

    q = len(kq)
    mat = np.empty((n, q), dtype=np.float64)
    kinds = []
    for a, name in enumerate(kq):
        kind = ds.schema.kind(name)
        kinds.append(kind)
        col = ds.column(name)
        if kind == NUMERIC:
            mat[:, a] = col
        else:
            if name not in orders:
                raise ConfigurationError(
                    f"categorical k_quasi {name!r} needs a total order for median splits"
                )
            rank = {v: i for i, v in enumerate(orders[name])}
            try:
                mat[:, a] = [rank[v] for v in col]
            except KeyError as exc:
                raise ConfigurationError(
                    f"value {exc.args[0]!r} of column {name!r} missing from its order"
                ) from None

    full_lo = mat.min(axis=0)
    full_hi = mat.max(axis=0)
    labels, n_leaves = kernels.mondrian_partition(
        np.ascontiguousarray(mat), np.ascontiguousarray(full_hi - full_lo), k
    )

    order_idx = np.argsort(labels, kind="stable")
    boundaries = np.flatnonzero(np.diff(labels[order_idx])) + 1
    groups = np.split(order_idx, boundaries)

    classes = []
    for g in groups:
        sub = mat[g]
        los = sub.min(axis=0)
        his = sub.max(axis=0)
        key = tuple(
            _interval_token(los[a], his[a], kinds[a], orders.get(kq[a]))
            for a in range(q)
        )
        bounds = tuple((float(los[a]), float(his[a])) for a in range(q))
        classes.append(EquivalenceClass(key=key, members=g, bounds=bounds))
    return Partition(
        classes=classes,
        suppressed=frozenset(),
        k=k,
        algorithm="mondrian",
        kquasi_columns=tuple(kq),
        attr_ranges={name: (float(full_lo[a]), float(full_hi[a]))
                     for a, name in enumerate(kq)},
    )
