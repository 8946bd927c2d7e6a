"""(k, eps)-anonymity: k-anonymise chosen quasi identifiers, then add
per-equivalence-class Laplace noise to the remaining numeric quasi, and
quantify information loss, linking risk and confidence-based suppression.
"""

from .dataset import (
    CATEGORICAL,
    EPS_QUASI,
    EXPLICIT,
    K_QUASI,
    NUMERIC,
    SENSITIVE,
    AttributeClassification,
    Dataset,
    Schema,
    load_csv,
    remove_explicit_identifiers,
    shuffle_records,
    write_csv,
)
from .errors import (
    ConfigurationError,
    DomainError,
    EmptyDatasetError,
    InfeasibleError,
    KeanonError,
    ParseError,
    SchemaMismatchError,
    StageError,
    UnsupportedConfigurationError,
)
from .hierarchy import (
    Hierarchy,
    builtin_hierarchies,
    generalise,
    lattice_enumerate,
    load_hierarchy_csv,
)
from .kanon import EquivalenceClass, Partition, mondrian_anonymise, ola_anonymise
from .kernels import BACKEND
from .loss import (
    LossReport,
    build_loss_report,
    categorical_precision_loss,
    empirical_relative_error,
    expected_dataset_error,
    expected_ec_error,
    harmonic_mean,
    numerical_precision_loss,
    ola_loss,
    uniform_baseline_error,
    uniform_width_for_error,
)
from .noise import (
    LaplaceParams,
    NoiseAssignment,
    apply_dp,
    diam,
    perturb_equivalence_class,
    sample_laplace,
)
from .pipeline import (
    AnonymisationReport,
    RunConfig,
    load_config,
    run_grid,
    run_pipeline,
)
from .risk import (
    ConfidenceSuppression,
    LinkResult,
    confidence_range,
    confidence_suppression,
    link_indicator,
    linking_risk,
)
from .synth import (
    AnthropometricModel,
    augment_dataset,
    generate_height,
    generate_weight,
    synthetic_census,
)

__version__ = "0.1.0"
