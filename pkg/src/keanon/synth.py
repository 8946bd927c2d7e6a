"""Synthetic numeric attributes conditioned on age band and gender.

Heights are drawn from per-cell normal distributions, weights from per-cell
log-normals. The shipped defaults are plausible adult-population values for
demonstrations and tests only; they are not fitted to any published
reference, and using them requires explicit opt-in.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import CATEGORICAL, NUMERIC, Dataset, Schema
from .errors import ConfigurationError, ParseError, SchemaMismatchError

HEIGHT = "height"
WEIGHT = "weight"


@dataclass(frozen=True)
class AnthropometricModel:
    """Distribution parameters per (age band, gender, attribute).

    ``bands`` are [lo, hi) intervals in years; ``cells`` maps
    (band index, gender, attribute) to (param1, param2): mean/sd in cm for
    height, log-mean/log-sd for weight. Degenerate sd=0 cells are allowed
    for deterministic tests.
    """

    bands: tuple[tuple[float, float], ...]
    cells: dict[tuple[int, str, str], tuple[float, float]]

    def __post_init__(self):
        for (bi, gender, attr), (_, spread) in self.cells.items():
            if spread < 0:
                raise ConfigurationError(
                    f"negative spread for band {self.bands[bi]}, {gender}, {attr}"
                )

    def params(self, age: float, gender: str, attribute: str) -> tuple[float, float]:
        # bands may differ between attributes (each row declares its own),
        # so search every covering band for one that carries the cell
        g = gender.strip().lower()
        for bi, (lo, hi) in enumerate(self.bands):
            if lo <= age < hi and (bi, g, attribute) in self.cells:
                return self.cells[(bi, g, attribute)]
        raise ConfigurationError(
            f"no parameters for age {age}, gender {gender!r}, {attribute}"
        )

    @staticmethod
    def load(path: str | Path) -> "AnthropometricModel":
        """Read a parameter table: age_low, age_high, gender, attribute, param1, param2."""
        path = Path(path)
        bands: list[tuple[float, float]] = []
        cells: dict[tuple[int, str, str], tuple[float, float]] = {}
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            required = {"age_low", "age_high", "gender", "attribute", "param1", "param2"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise SchemaMismatchError(
                    f"{path}: parameter file needs columns {sorted(required)}"
                )
            for row in reader:
                band = (float(row["age_low"]), float(row["age_high"]))
                if band not in bands:
                    bands.append(band)
                attr = row["attribute"].strip().lower()
                if attr not in (HEIGHT, WEIGHT):
                    raise SchemaMismatchError(
                        f"{path}: unknown attribute {row['attribute']!r}"
                    )
                key = (bands.index(band), row["gender"].strip().lower(), attr)
                cells[key] = (float(row["param1"]), float(row["param2"]))
        if not cells:
            raise SchemaMismatchError(f"{path}: no parameter rows")
        return AnthropometricModel(bands=tuple(bands), cells=cells)

    @staticmethod
    def plausible_defaults() -> "AnthropometricModel":
        """Demo parameters over 10-year bands; NOT population ground truth."""
        bands = tuple((float(lo), float(lo + 10)) for lo in range(0, 120, 10))
        # (male height mean/sd cm, female height mean/sd cm,
        #  male weight log-mean/log-sd, female weight log-mean/log-sd)
        by_decade = {
            0: (95.0, 12.0, 94.0, 12.0, math.log(15.0), 0.25, math.log(14.5), 0.25),
            10: (165.0, 10.0, 158.0, 8.0, math.log(55.0), 0.22, math.log(50.0), 0.22),
            20: (176.5, 7.5, 162.8, 7.0, math.log(82.0), 0.20, math.log(68.0), 0.21),
            30: (176.3, 7.5, 162.7, 7.0, math.log(86.0), 0.20, math.log(72.0), 0.21),
            40: (176.0, 7.4, 162.4, 6.9, math.log(87.0), 0.19, math.log(74.0), 0.21),
            50: (175.3, 7.3, 161.8, 6.9, math.log(87.0), 0.19, math.log(74.5), 0.21),
            60: (174.2, 7.2, 160.8, 6.8, math.log(85.0), 0.19, math.log(73.5), 0.20),
            70: (172.8, 7.0, 159.3, 6.7, math.log(82.0), 0.18, math.log(70.0), 0.20),
            80: (171.0, 6.9, 157.5, 6.6, math.log(77.0), 0.18, math.log(65.0), 0.19),
            90: (169.5, 6.8, 156.0, 6.5, math.log(72.0), 0.18, math.log(60.0), 0.19),
            100: (168.5, 6.8, 155.0, 6.5, math.log(68.0), 0.18, math.log(57.0), 0.19),
            110: (168.0, 6.8, 154.5, 6.5, math.log(66.0), 0.18, math.log(55.0), 0.19),
        }
        cells = {}
        for bi, (lo, _) in enumerate(bands):
            mh, msd, fh, fsd, mlw, mlsd, flw, flsd = by_decade[int(lo)]
            cells[(bi, "male", HEIGHT)] = (mh, msd)
            cells[(bi, "female", HEIGHT)] = (fh, fsd)
            cells[(bi, "male", WEIGHT)] = (mlw, mlsd)
            cells[(bi, "female", WEIGHT)] = (flw, flsd)
        return AnthropometricModel(bands=bands, cells=cells)


def generate_height(
    age: float, gender: str, model: AnthropometricModel, rng: np.random.Generator
) -> float:
    """One normal draw from the (age band, gender) height cell, in cm."""
    mean, sd = model.params(age, gender, HEIGHT)
    return float(mean + sd * rng.standard_normal())


def generate_weight(
    age: float, gender: str, model: AnthropometricModel, rng: np.random.Generator
) -> float:
    """One log-normal draw (exp of a normal draw in log space), in kg."""
    log_mean, log_sd = model.params(age, gender, WEIGHT)
    return float(math.exp(log_mean + log_sd * rng.standard_normal()))


def augment_dataset(
    ds: Dataset,
    age_column: str,
    gender_column: str,
    kind: str,
    model: AnthropometricModel,
    seed: int,
) -> Dataset:
    """Append one synthetic numeric column named after ``kind``.

    Each record draws from its own stream split off the master seed, so the
    augmented dataset is bit-identical for a fixed seed.
    """
    if kind not in (HEIGHT, WEIGHT):
        raise ConfigurationError(f"kind must be '{HEIGHT}' or '{WEIGHT}', got {kind!r}")
    if kind in ds.schema:
        raise ConfigurationError(f"dataset already has a column named {kind!r}")
    for col in (age_column, gender_column):
        if col not in ds.schema:
            raise ConfigurationError(f"column {col!r} not in dataset")
    ages_raw = ds.column(age_column)
    genders = ds.column(gender_column)
    draw = generate_height if kind == HEIGHT else generate_weight
    streams = np.random.SeedSequence([seed]).spawn(ds.n)
    out = np.empty(ds.n, dtype=np.float64)
    for i in range(ds.n):
        try:
            age = float(ages_raw[i])
        except (TypeError, ValueError):
            raise ParseError(
                f"row {i + 1}: cannot parse age {ages_raw[i]!r}", row=i + 1
            ) from None
        gender = str(genders[i])
        rng = np.random.Generator(np.random.Philox(streams[i]))
        out[i] = draw(age, gender, model, rng)
    schema = Schema(ds.schema.columns + ((kind, NUMERIC),))
    columns = dict(ds.columns)
    columns[kind] = out
    return Dataset(schema, columns)


def synthetic_census(n: int, seed: int, reference_year: int = 1994) -> Dataset:
    """Adult-census-flavoured demo table for tests and benchmarks.

    Columns: record_id, year_of_birth, age, gender, race, marital_status.
    Marginal frequencies loosely follow the UCI Adult training split; no
    claim of fidelity beyond that.
    """
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, n])))
    ages = np.clip(np.rint(rng.normal(38.6, 13.7, size=n)), 17, 90).astype(np.int64)
    years = reference_year - ages
    genders = rng.choice(
        np.array(["Male", "Female"], dtype=object), size=n, p=[0.669, 0.331]
    )
    races = rng.choice(
        np.array(
            ["White", "Black", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other"],
            dtype=object,
        ),
        size=n,
        p=[0.854, 0.096, 0.031, 0.010, 0.009],
    )
    maritals = rng.choice(
        np.array(
            [
                "Married-civ-spouse", "Never-married", "Divorced", "Separated",
                "Widowed", "Married-spouse-absent", "Married-AF-spouse",
            ],
            dtype=object,
        ),
        size=n,
        p=[0.459, 0.328, 0.137, 0.031, 0.030, 0.013, 0.002],
    )
    schema = Schema((
        ("record_id", CATEGORICAL),
        ("year_of_birth", NUMERIC),
        ("age", NUMERIC),
        ("gender", CATEGORICAL),
        ("race", CATEGORICAL),
        ("marital_status", CATEGORICAL),
    ))
    return Dataset(schema, {
        "record_id": np.array([f"id-{i:06d}" for i in range(n)], dtype=object),
        "year_of_birth": years.astype(np.float64),
        "age": ages.astype(np.float64),
        "gender": genders,
        "race": races,
        "marital_status": maritals,
    })
