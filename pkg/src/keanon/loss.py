"""Information-loss metrics.

Generalised k-quasis are scored by categorical precision (hierarchy level
over ladder height) or numerical precision (interval width over dataset
range). The perturbed eps-quasi is scored by relative error, both as the
closed-form expectation diam/(eps * harmonic mean) per class and as the
empirical mean over an actual run.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import EPS_QUASI, AttributeClassification, Dataset
from .errors import ConfigurationError, DomainError
from .hierarchy import Hierarchy
from .jsonutil import json_ready
from .kanon import Partition


def categorical_precision_loss(level: int, h: int) -> float:
    """level/(h-1) for a ladder with h >= 2 levels."""
    if h < 2:
        raise DomainError(f"categorical precision needs h >= 2, got h={h}")
    if not 0 <= level <= h - 1:
        raise DomainError(f"level {level} outside 0..{h - 1}")
    return level / (h - 1)


def numerical_precision_loss(
    interval: tuple[float, float], domain: tuple[float, float]
) -> float:
    """Width of the generalised interval relative to the dataset range."""
    lo, hi = interval
    dlo, dhi = domain
    if dhi - dlo <= 0:
        raise DomainError("dataset range must be positive")
    if lo > hi or lo < dlo or hi > dhi:
        raise DomainError(f"interval {interval} not contained in domain {domain}")
    return (hi - lo) / (dhi - dlo)


def ola_precision_by_column(
    partition: Partition, hiers: dict[str, Hierarchy]
) -> dict[str, float]:
    """Per-k-quasi categorical precision loss at the chosen node's levels.

    Columns whose ladder has a single level can never be generalised and
    score zero.
    """
    if partition.node is None:
        raise DomainError("partition carries no lattice node (not a global recoding)")
    out = {}
    for name, level in zip(partition.kquasi_columns, partition.node):
        h = hiers[name].h
        out[name] = 0.0 if h == 1 else categorical_precision_loss(level, h)
    return out


def ola_loss(partition: Partition, hiers: dict[str, Hierarchy]) -> float:
    """Mean categorical precision loss over the k-quasis at the chosen node."""
    per_col = ola_precision_by_column(partition, hiers)
    return sum(per_col.values()) / len(per_col)


def mondrian_precision_by_column(partition: Partition) -> dict[str, float]:
    """Record-weighted numerical precision loss per k-quasi.

    Categorical columns are measured in rank space (the same space the
    median splits ran in). Columns constant across the dataset have no range
    to lose and score zero.
    """
    if partition.attr_ranges is None:
        raise DomainError("partition carries no attribute ranges (not a median split)")
    total = sum(ec.m for ec in partition.classes)
    out = {}
    for a, name in enumerate(partition.kquasi_columns):
        dlo, dhi = partition.attr_ranges[name]
        if dhi - dlo <= 0:
            out[name] = 0.0
            continue
        acc = 0.0
        for ec in partition.classes:
            acc += ec.m * numerical_precision_loss(ec.bounds[a], (dlo, dhi))
        out[name] = acc / total
    return out


def harmonic_mean(values: np.ndarray) -> float:
    """m / sum(1/v) over strictly positive values."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise DomainError("harmonic mean of an empty vector is undefined")
    if np.any(arr <= 0):
        raise DomainError("harmonic mean requires strictly positive values")
    return arr.size / float(np.sum(1.0 / arr))


def expected_ec_error(ec_values: np.ndarray, eps: float) -> float:
    """Closed-form mean relative error for one class: diam/(eps * Hm)."""
    if eps <= 0:
        raise DomainError(f"eps must be > 0, got {eps}")
    arr = np.asarray(ec_values, dtype=np.float64)
    d = float(arr.max() - arr.min()) if arr.size else 0.0
    if arr.size == 0:
        raise DomainError("empty equivalence class")
    return d / (eps * harmonic_mean(arr))


def expected_dataset_error(
    partition: Partition,
    ds: Dataset,
    eps: float,
    cls: AttributeClassification,
) -> float:
    """Size-weighted average of the per-class expected errors.

    Suppressed records are excluded; the weights use the retained count.
    """
    if eps <= 0:
        raise DomainError(f"eps must be > 0, got {eps}")
    col = _single_eps_column(ds, cls)
    values = ds.column(col)
    n_retained = sum(ec.m for ec in partition.classes)
    acc = 0.0
    for ec in partition.classes:
        sub = values[ec.members]
        d = float(sub.max() - sub.min())
        acc += (d / harmonic_mean(sub)) * (ec.m / n_retained)
    return acc / eps


def per_class_breakdown(
    partition: Partition, ds: Dataset, eps: float, cls: AttributeClassification
) -> list[dict]:
    """diam, harmonic mean, size and expected error for every class."""
    col = _single_eps_column(ds, cls)
    values = ds.column(col)
    rows = []
    for ec in partition.classes:
        sub = values[ec.members]
        d = float(sub.max() - sub.min())
        hm = harmonic_mean(sub)
        rows.append({
            "size": ec.m,
            "diam": d,
            "harmonic_mean": hm,
            "expected_error": d / (eps * hm),
        })
    return rows


def empirical_relative_error(
    original: Dataset,
    anonymised: Dataset,
    eps_quasi: str,
    retained_indices: np.ndarray | None = None,
) -> float:
    """Mean |v' - v| / |v| over retained records.

    Row i of ``anonymised`` corresponds to original row
    ``retained_indices[i]`` (identity when omitted).
    """
    noisy = np.asarray(anonymised.column(eps_quasi), dtype=np.float64)
    orig_col = np.asarray(original.column(eps_quasi), dtype=np.float64)
    if retained_indices is None:
        if anonymised.n != original.n:
            raise DomainError(
                "row counts differ; pass retained_indices for the correspondence"
            )
        orig = orig_col
    else:
        if len(retained_indices) != anonymised.n:
            raise DomainError("retained_indices length must match anonymised rows")
        orig = orig_col[retained_indices]
    if np.any(orig == 0):
        raise DomainError("relative error undefined for original value 0")
    return float(np.mean(np.abs((noisy - orig) / orig)))


def uniform_baseline_error(values: np.ndarray, p: float) -> float:
    """Expected relative error of additive noise uniform on [-p*v, +p*v].

    The expectation is p/2 for every record regardless of its value.
    """
    if p < 0:
        raise DomainError(f"p must be >= 0, got {p}")
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise DomainError("empty value vector")
    return p / 2.0


def uniform_width_for_error(mean_error: float) -> float:
    """The +-p matching a mechanism's mean relative error: p = 2 * error."""
    if mean_error < 0:
        raise DomainError("mean error must be >= 0")
    return 2.0 * mean_error


def sample_uniform_perturbation(
    values: np.ndarray, p: float, rng: np.random.Generator
) -> np.ndarray:
    """One draw of v + U(-p*v, +p*v) per record, for error-distribution plots."""
    if p < 0:
        raise DomainError(f"p must be >= 0, got {p}")
    arr = np.asarray(values, dtype=np.float64)
    offsets = rng.uniform(-1.0, 1.0, size=arr.size) * p * arr
    return arr + offsets


@dataclass(frozen=True)
class LossReport:
    """Per-run information-loss summary."""

    kquasi_precision: dict[str, float]
    expected_error: float
    empirical_error: float | None
    per_class: list[dict]

    def to_json_dict(self) -> dict:
        return json_ready({
            "kquasi_precision": self.kquasi_precision,
            "expected_error": self.expected_error,
            "empirical_error": self.empirical_error,
            "per_class": self.per_class,
        })


def build_loss_report(
    partition: Partition,
    ds: Dataset,
    eps: float,
    cls: AttributeClassification,
    hiers: dict[str, Hierarchy] | None = None,
    empirical_error: float | None = None,
) -> LossReport:
    """Assemble the loss metrics for one anonymisation run.

    Precision losses come from the chosen lattice node for global recoding
    (``hiers`` required) or from the class intervals for median splits; the
    expected error always uses original values, never noisy ones.
    """
    if partition.algorithm == "ola":
        if hiers is None:
            raise ConfigurationError("hierarchies required to score a lattice node")
        precision = ola_precision_by_column(partition, hiers)
    else:
        precision = mondrian_precision_by_column(partition)
    return LossReport(
        kquasi_precision=precision,
        expected_error=expected_dataset_error(partition, ds, eps, cls),
        empirical_error=empirical_error,
        per_class=per_class_breakdown(partition, ds, eps, cls),
    )


def write_error_triples(path: str | Path, rows: list[tuple]) -> None:
    """Write (k, eps, error) triples as CSV for loss-versus-parameter curves."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "eps", "error"])
        writer.writerows(rows)


def _single_eps_column(ds: Dataset, cls: AttributeClassification) -> str:
    cols = cls.with_role(ds.schema, EPS_QUASI)
    if len(cols) != 1:
        raise ConfigurationError(f"exactly one eps_quasi column expected, got {cols}")
    return cols[0]
