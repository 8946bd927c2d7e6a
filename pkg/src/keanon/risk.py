"""Adversarial evaluation: nearest-neighbour linking and confidence-based
suppression.

Both evaluations need the ground-truth correspondence between original and
anonymised rows. Anonymised datasets produced by :func:`keanon.noise.apply_dp`
keep retained records in ascending original order, so the correspondence is
the partition's retained index list; it exists only inside the evaluation
path and is never part of published output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dataset import EPS_QUASI, AttributeClassification, Dataset
from .errors import ConfigurationError, DomainError
from .jsonutil import json_ready
from .kanon import Partition
from .noise import diam


def link_indicator(ec_original: np.ndarray, ec_noisy: np.ndarray, i: int) -> int:
    """1 iff noisy value i is at least as close to its own original as to any
    other original of the class (ties count as successful links)."""
    orig = np.asarray(ec_original, dtype=np.float64)
    noisy = np.asarray(ec_noisy, dtype=np.float64)
    if orig.shape != noisy.shape:
        raise DomainError("original and noisy class vectors must have equal length")
    if not 0 <= i < orig.size:
        raise DomainError(f"record index {i} outside class of size {orig.size}")
    dists = np.abs(noisy[i] - orig)
    return int(dists[i] == dists.min())


@dataclass(frozen=True)
class LinkResult:
    """Per-class linked-record counts and the overall linking risk."""

    per_class: list[int]
    class_sizes: list[int]
    n_retained: int

    @property
    def linked_total(self) -> int:
        return sum(self.per_class)

    @property
    def risk(self) -> float:
        return self.linked_total / self.n_retained

    def to_json_dict(self) -> dict:
        return json_ready({
            "risk": self.risk,
            "linked_total": self.linked_total,
            "n_retained": self.n_retained,
            "per_class": [
                {"size": m, "linked": c}
                for m, c in zip(self.class_sizes, self.per_class)
            ],
        })


def _eps_column(original: Dataset, cls: AttributeClassification) -> str:
    cols = cls.with_role(original.schema, EPS_QUASI)
    if len(cols) != 1:
        raise ConfigurationError(f"exactly one eps_quasi column expected, got {cols}")
    return cols[0]


def _anonymised_positions(partition: Partition, n: int, anonymised_n: int) -> np.ndarray:
    """Map original record index -> row in the anonymised dataset."""
    retained = partition.retained_indices(n)
    if len(retained) != anonymised_n:
        raise DomainError(
            f"anonymised dataset has {anonymised_n} rows but the partition retains "
            f"{len(retained)}; correspondence is broken"
        )
    pos = np.full(n, -1, dtype=np.int64)
    pos[retained] = np.arange(len(retained))
    return pos


def linking_risk(
    original: Dataset,
    anonymised: Dataset,
    partition: Partition,
    cls: AttributeClassification,
) -> LinkResult:
    """Fraction of retained records whose noisy eps-quasi is nearest to their
    own original value within their class."""
    col = _eps_column(original, cls)
    orig_all = np.asarray(original.column(col), dtype=np.float64)
    noisy_all = np.asarray(anonymised.column(col), dtype=np.float64)
    pos = _anonymised_positions(partition, original.n, anonymised.n)
    per_class = []
    sizes = []
    for ec in partition.classes:
        orig = np.ascontiguousarray(orig_all[ec.members])
        noisy = np.ascontiguousarray(noisy_all[pos[ec.members]])
        per_class.append(kernels.nearest_link_count(orig, noisy))
        sizes.append(ec.m)
    return LinkResult(
        per_class=per_class,
        class_sizes=sizes,
        n_retained=int(sum(sizes)),
    )


def confidence_range(diam_ec: float, eps: float, c: float) -> float:
    """Window half-width r_c with P(|Lap(0, diam/eps)| <= r_c) = c.

    Closed form: r_c = -(diam/eps) * ln(1 - c).
    """
    if diam_ec < 0:
        raise DomainError(f"diameter must be >= 0, got {diam_ec}")
    if eps <= 0:
        raise DomainError(f"eps must be > 0, got {eps}")
    if not 0.0 <= c < 1.0:
        raise DomainError(f"confidence must lie in [0, 1), got {c}")
    return -(diam_ec / eps) * math.log1p(-c)


@dataclass(frozen=True)
class ConfidenceSuppression:
    """Outcome of the confidence-window suppression rule.

    ``window_counts[ci][j]`` is the number of original class values falling
    inside the confidence window around noisy member j of class ci. Records
    with a count strictly between 0 and k are suppressed; zero-count records
    stay (the noise pushed them far enough out to carry little risk), but
    still count against their class: a class survives only if at least k of
    its members have counts >= k, otherwise it is suppressed whole.
    """

    c: float
    k: int
    eps: float
    ranges: list[float]
    window_counts: list[np.ndarray]
    suppressed_records: frozenset[int]
    suppressed_classes: frozenset[int]

    def suppressed_count(self) -> int:
        return len(self.suppressed_records)

    def fraction_of(self, n: int) -> float:
        return len(self.suppressed_records) / n

    def to_json_dict(self) -> dict:
        return json_ready({
            "c": self.c,
            "k": self.k,
            "eps": self.eps,
            "suppressed_records": sorted(int(i) for i in self.suppressed_records),
            "suppressed_classes": sorted(int(i) for i in self.suppressed_classes),
            "per_class": [
                {"r_c": r, "counts": wc} for r, wc in
                zip(self.ranges, self.window_counts)
            ],
        })


def confidence_suppression(
    original: Dataset,
    anonymised: Dataset,
    partition: Partition,
    eps: float,
    c: float,
    k: int,
    cls: AttributeClassification,
) -> ConfidenceSuppression:
    """Apply the c-confident suppression rule to every retained class.

    Windows are centred on the noisy values and count original values, which
    is exactly what an adversary holding the un-anonymised quasis can do.
    The computation is deterministic given the anonymised dataset.
    """
    col = _eps_column(original, cls)
    orig_all = np.asarray(original.column(col), dtype=np.float64)
    noisy_all = np.asarray(anonymised.column(col), dtype=np.float64)
    pos = _anonymised_positions(partition, original.n, anonymised.n)
    ranges: list[float] = []
    counts_per_class: list[np.ndarray] = []
    suppressed: set[int] = set()
    dead_classes: set[int] = set()
    for ci, ec in enumerate(partition.classes):
        orig = np.ascontiguousarray(orig_all[ec.members])
        noisy = np.ascontiguousarray(noisy_all[pos[ec.members]])
        rc = confidence_range(diam(orig), eps, c)
        ell = kernels.window_counts(orig, noisy, rc)
        ranges.append(rc)
        counts_per_class.append(ell)
        if int(np.sum(ell >= k)) < k:
            dead_classes.add(ci)
            suppressed.update(int(i) for i in ec.members)
        else:
            risky = ec.members[(ell > 0) & (ell < k)]
            suppressed.update(int(i) for i in risky)
    return ConfidenceSuppression(
        c=c,
        k=k,
        eps=eps,
        ranges=ranges,
        window_counts=counts_per_class,
        suppressed_records=frozenset(suppressed),
        suppressed_classes=frozenset(dead_classes),
    )
