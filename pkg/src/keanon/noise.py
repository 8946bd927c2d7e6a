"""Laplace mechanism calibrated per equivalence class.

The scale of the noise is diam/eps where diam is the range of the class's
own values, so tight classes receive little noise and constant classes none
at all. Sampling uses the inverse CDF on a Philox counter-based generator so
results reproduce bit-for-bit across platforms and are independent of the
order classes are processed in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import (
    CATEGORICAL,
    EPS_QUASI,
    AttributeClassification,
    Dataset,
    Schema,
)
from .errors import DomainError, UnsupportedConfigurationError
from .kanon import Partition


@dataclass(frozen=True)
class LaplaceParams:
    """Location mu and scale b >= 0; the variance is 2*b**2."""

    mu: float
    b: float

    def __post_init__(self):
        if self.b < 0:
            raise DomainError(f"Laplace scale must be >= 0, got {self.b}")


@dataclass(frozen=True)
class NoiseAssignment:
    """Noisy values for one equivalence class and the (eps, diam) that shaped them."""

    values: np.ndarray
    eps: float
    diam: float


def diam(values: np.ndarray) -> float:
    """Range (max - min) of a non-empty vector of finite reals."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise DomainError("diameter of an empty vector is undefined")
    if not np.all(np.isfinite(arr)):
        raise DomainError("diameter requires finite values")
    return float(arr.max() - arr.min())


def sample_laplace(params: LaplaceParams, rng: np.random.Generator, size=None):
    """Inverse-CDF Laplace draw(s): mu - b*sgn(u)*ln(1-2|u|), u uniform on (-1/2, 1/2).

    b=0 short-circuits to exactly mu without consuming randomness. With
    ``size=None`` a scalar is returned, else an array of that shape.
    """
    if params.b == 0.0:
        if size is None:
            return params.mu
        return np.full(size, params.mu, dtype=np.float64)
    scalar = size is None
    u = rng.random(1 if scalar else size) - 0.5
    # rng.random() covers [0, 1); remap the measure-zero -0.5 endpoint
    u[u == -0.5] = 0.0
    out = params.mu - params.b * np.sign(u) * np.log1p(-2.0 * np.abs(u))
    return float(out[0]) if scalar else out


def perturb_equivalence_class(
    values: np.ndarray, eps: float, rng: np.random.Generator
) -> NoiseAssignment:
    """Add independent Lap(0, diam(values)/eps) noise to each value.

    A class without variation (diam 0) is returned unchanged: its members
    are already indistinguishable.
    """
    if eps <= 0:
        raise DomainError(f"eps must be > 0, got {eps}")
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 1:
        raise DomainError("equivalence class must contain at least one value")
    d = diam(arr)
    if d == 0.0:
        return NoiseAssignment(values=arr.copy(), eps=eps, diam=0.0)
    noise = sample_laplace(LaplaceParams(0.0, d / eps), rng, size=arr.size)
    return NoiseAssignment(values=arr + noise, eps=eps, diam=d)


def class_rng(master_seed: int, class_index: int) -> np.random.Generator:
    """Independent Philox stream for one equivalence class."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence([master_seed, class_index]))
    )


def apply_dp(
    ds: Dataset,
    partition: Partition,
    cls: AttributeClassification,
    eps: float,
    master_seed: int,
) -> Dataset:
    """Per-class Laplace perturbation of the single eps-quasi column.

    For every class the eps-quasi values are replaced by their perturbed
    versions and the k-quasi columns by the class key; suppressed records are
    dropped. Output rows keep ascending original-record order, which is the
    correspondence the evaluation operations rely on (publication shuffles
    separately). Each class draws from its own (master_seed, class index)
    stream, so the result does not depend on processing order.
    """
    cls.validate(ds.schema)
    if eps <= 0:
        raise DomainError(f"eps must be > 0, got {eps}")
    eps_cols = cls.with_role(ds.schema, EPS_QUASI)
    if len(eps_cols) != 1:
        raise UnsupportedConfigurationError(
            f"exactly one eps_quasi column is supported, got {eps_cols}"
        )
    eps_col = eps_cols[0]
    n = ds.n

    noisy = np.array(ds.column(eps_col), dtype=np.float64)
    key_cols = {
        name: np.empty(n, dtype=object) for name in partition.kquasi_columns
    }
    for ci, ec in enumerate(partition.classes):
        assignment = perturb_equivalence_class(
            noisy[ec.members], eps, class_rng(master_seed, ci)
        )
        noisy[ec.members] = assignment.values
        for j, name in enumerate(partition.kquasi_columns):
            key_cols[name][ec.members] = ec.key[j]

    retained = partition.retained_indices(n)
    out_schema = Schema(tuple(
        (name, CATEGORICAL if name in partition.kquasi_columns else kind)
        for name, kind in ds.schema.columns
    ))
    out_columns = {}
    for name, _ in ds.schema.columns:
        if name in key_cols:
            out_columns[name] = key_cols[name][retained]
        elif name == eps_col:
            out_columns[name] = noisy[retained]
        else:
            out_columns[name] = ds.column(name)[retained]
    return Dataset(out_schema, out_columns)
