import numpy as np
import pytest

from keanon import AttributeClassification, remove_explicit_identifiers, synthetic_census
from keanon.synth import AnthropometricModel, augment_dataset

CENSUS_ROLES = {
    "record_id": "explicit",
    "age": "explicit",
    "year_of_birth": "k_quasi",
    "gender": "k_quasi",
    "race": "k_quasi",
    "marital_status": "k_quasi",
    "height": "eps_quasi",
}

MONDRIAN_ORDERS = {
    "gender": ["Female", "Male"],
    "race": ["Amer-Indian-Eskimo", "Asian-Pac-Islander", "Black", "Other", "White"],
    "marital_status": [
        "Never-married", "Separated", "Divorced", "Widowed",
        "Married-spouse-absent", "Married-AF-spouse", "Married-civ-spouse",
    ],
}


def census_with_height(n: int, seed: int):
    """Demo census plus synthetic height, ready for the pipeline."""
    ds = synthetic_census(n, seed=seed)
    model = AnthropometricModel.plausible_defaults()
    return augment_dataset(ds, "age", "gender", "height", model, seed=seed + 1)


def prepared(n: int, seed: int):
    """(base dataset, classification) with explicit identifiers removed."""
    aug = census_with_height(n, seed)
    cls = AttributeClassification(CENSUS_ROLES)
    base = remove_explicit_identifiers(aug, cls)
    base_cls = AttributeClassification(
        {k: v for k, v in CENSUS_ROLES.items() if k in base.schema}
    )
    return base, base_cls


@pytest.fixture(scope="session")
def small_base():
    return prepared(1200, seed=42)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(12345)))
