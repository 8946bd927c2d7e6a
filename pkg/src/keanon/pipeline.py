"""End-to-end workflow and experiment grids.

One run executes, in order: classify attributes, remove explicit
identifiers, k-anonymise the k-quasis, perturb the eps-quasi per
equivalence class, merge, shuffle. Evaluation (loss, linking risk,
confidence suppression) happens on the pre-shuffle pair, where the
record correspondence still exists; published output never carries it.
"""

from __future__ import annotations

import csv
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import loss as loss_metrics
from . import risk as risk_eval
from .dataset import (
    CATEGORICAL,
    EPS_QUASI,
    K_QUASI,
    AttributeClassification,
    Dataset,
    Schema,
    load_csv,
    permutation_for,
    remove_explicit_identifiers,
    shuffle_records,
)
from .errors import ConfigurationError, KeanonError, StageError
from .hierarchy import Hierarchy, builtin_hierarchies, load_hierarchy_csv
from .jsonutil import json_ready
from .kanon import EquivalenceClass, Partition, mondrian_anonymise, ola_anonymise
from .kernels import BACKEND
from .noise import apply_dp
from .synth import AnthropometricModel, augment_dataset

GRID_HEADER = [
    "k", "eps", "expected_error", "empirical_error", "risk",
    "conf_suppression_pct", "ola_suppression_pct",
]

# fixed tags keeping derived seed streams disjoint
_RUN_TAG = 101
_SHUFFLE_TAG = 202


def derive_seed(*parts: int) -> int:
    """Deterministic 64-bit seed from integer parts."""
    ss = np.random.SeedSequence([int(p) for p in parts])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class RunConfig:
    """Everything one anonymisation run needs."""

    input: Path | None
    schema: Schema
    classification: AttributeClassification
    hierarchy_sources: dict[str, str] = field(default_factory=dict)
    orders: dict[str, list[str]] = field(default_factory=dict)
    algorithm: str = "ola"
    k: int = 2
    max_suppression: float = 0.05
    eps: float = 1.0
    confidence: float | None = None
    seed: int = 0
    runs: int = 1
    grid_k: list[int] = field(default_factory=list)
    grid_eps: list[float] = field(default_factory=list)
    synth: dict | None = None
    base_dir: Path = Path(".")

    def validate(self) -> None:
        if self.algorithm not in ("ola", "mondrian"):
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}")
        if self.k < 2:
            raise ConfigurationError(f"k must be >= 2, got {self.k}")
        if self.eps <= 0:
            raise ConfigurationError(f"eps must be > 0, got {self.eps}")
        if not 0.0 <= self.max_suppression <= 1.0:
            raise ConfigurationError(
                f"max_suppression must lie in [0, 1], got {self.max_suppression}"
            )
        if self.confidence is not None and not 0.0 <= self.confidence < 1.0:
            raise ConfigurationError(
                f"confidence must lie in [0, 1), got {self.confidence}"
            )
        if self.runs < 1:
            raise ConfigurationError(f"runs must be >= 1, got {self.runs}")

    def resolve_hierarchies(self) -> dict[str, Hierarchy]:
        builtins = builtin_hierarchies()
        out: dict[str, Hierarchy] = {}
        for column, source in self.hierarchy_sources.items():
            if source.startswith("builtin:"):
                name = source.split(":", 1)[1]
                if name not in builtins:
                    raise ConfigurationError(
                        f"unknown builtin hierarchy {name!r} "
                        f"(have {sorted(builtins)})"
                    )
                out[column] = builtins[name]
            else:
                out[column] = load_hierarchy_csv(self.base_dir / source)
        return out


def load_config(path: str | Path) -> RunConfig:
    """Parse a TOML run configuration; see docs/example_config.toml."""
    path = Path(path)
    with path.open("rb") as fh:
        raw = tomllib.load(fh)
    columns = raw.get("columns")
    if not columns:
        raise ConfigurationError(f"{path}: [columns] section is required")
    schema_cols = []
    roles = {}
    hierarchy_sources = {}
    orders = {}
    for name, entry in columns.items():
        if "kind" not in entry or "role" not in entry:
            raise ConfigurationError(
                f"{path}: column {name!r} needs 'kind' and 'role'"
            )
        schema_cols.append((name, entry["kind"]))
        roles[name] = entry["role"]
        if "hierarchy" in entry:
            hierarchy_sources[name] = entry["hierarchy"]
        if "order" in entry:
            orders[name] = [str(v) for v in entry["order"]]
    anon = raw.get("anonymise", {})
    grid = raw.get("grid", {})
    dataset_sec = raw.get("dataset", {})
    cfg = RunConfig(
        input=(path.parent / dataset_sec["input"]) if "input" in dataset_sec else None,
        schema=Schema(tuple(schema_cols)),
        classification=AttributeClassification(roles),
        hierarchy_sources=hierarchy_sources,
        orders=orders,
        algorithm=anon.get("algorithm", "ola"),
        k=int(anon.get("k", 2)),
        max_suppression=float(anon.get("max_suppression", 0.05)),
        eps=float(anon.get("eps", 1.0)),
        confidence=(
            float(anon["confidence"]) if "confidence" in anon else None
        ),
        seed=int(anon.get("seed", 0)),
        runs=int(anon.get("runs", 1)),
        grid_k=[int(v) for v in grid.get("k", [])],
        grid_eps=[float(v) for v in grid.get("eps", [])],
        synth=raw.get("synth"),
        base_dir=path.parent,
    )
    cfg.validate()
    return cfg


@dataclass
class AnonymisationReport:
    """Aggregated metrics and bookkeeping for one configuration.

    ``linkage`` maps each published row to its original record index. It is
    evaluation-only state: ``to_json_dict``/``save`` never emit it, and it
    reaches disk only through the CLI's explicit --keep-linkage debug flag.
    """

    config: dict
    totals: dict
    partition: dict
    loss: dict
    risk: dict | None
    confidence: dict | None
    timings: dict
    backend: str = BACKEND
    linkage: list[int] | None = field(default=None, repr=False)

    def to_json_dict(self) -> dict:
        return json_ready({
            "config": self.config,
            "totals": self.totals,
            "partition": self.partition,
            "loss": self.loss,
            "risk": self.risk,
            "confidence": self.confidence,
            "timings": self.timings,
            "backend": self.backend,
        })

    def save(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)


def _staged(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (KeanonError, OSError) as exc:
        raise StageError(stage, exc) from exc


def build_partition(
    base: Dataset,
    cls: AttributeClassification,
    cfg: RunConfig,
    k: int | None = None,
    hiers: dict[str, Hierarchy] | None = None,
) -> Partition:
    k = cfg.k if k is None else k
    if cfg.algorithm == "ola":
        hiers = cfg.resolve_hierarchies() if hiers is None else hiers
        return ola_anonymise(base, cls, hiers, k, cfg.max_suppression)
    return mondrian_anonymise(base, cls, k, orders=cfg.orders)


def _evaluate_runs(
    base: Dataset,
    partition: Partition,
    cls: AttributeClassification,
    eps: float,
    confidence: float | None,
    k: int,
    runs: int,
    seed_parts: tuple[int, ...],
):
    """Repeat perturbation ``runs`` times; collect per-run metrics.

    Returns (first run's anonymised dataset, metrics dict). Per-run master
    seeds derive from ``seed_parts`` so cells of a grid never share streams.
    """
    eps_col = cls.with_role(base.schema, EPS_QUASI)[0]
    retained = partition.retained_indices(base.n)
    empirical = []
    risks = []
    conf_fractions = []
    nonpositive = []
    first_anon = None
    for r in range(runs):
        master = derive_seed(*seed_parts, r)
        anon = apply_dp(base, partition, cls, eps, master)
        if r == 0:
            first_anon = anon
        empirical.append(
            loss_metrics.empirical_relative_error(base, anon, eps_col, retained)
        )
        risks.append(risk_eval.linking_risk(base, anon, partition, cls).risk)
        nonpositive.append(int(np.sum(anon.column(eps_col) <= 0)))
        if confidence is not None:
            supp = risk_eval.confidence_suppression(
                base, anon, partition, eps, confidence, k, cls
            )
            conf_fractions.append(supp.fraction_of(base.n))
    metrics = {
        "empirical_error_runs": empirical,
        "empirical_error_mean": float(np.mean(empirical)),
        "empirical_error_std": float(np.std(empirical)),
        "risk_runs": risks,
        "risk_mean": float(np.mean(risks)),
        "risk_std": float(np.std(risks)),
        "noisy_nonpositive_mean": float(np.mean(nonpositive)),
        "conf_suppression_runs": conf_fractions,
        "conf_suppression_mean": (
            float(np.mean(conf_fractions)) if conf_fractions else None
        ),
    }
    return first_anon, metrics


def run_pipeline(
    cfg: RunConfig, dataset: Dataset | None = None
) -> tuple[Dataset, AnonymisationReport]:
    """Execute the full workflow for one (algorithm, k, eps) setting.

    With ``runs > 1`` the stochastic metrics are means over the runs; the
    returned dataset is the shuffled first run. Identical config and seed
    reproduce identical outputs.
    """
    cfg.validate()
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    if dataset is None:
        if cfg.input is None:
            raise StageError("load", ConfigurationError("no input path configured"))
        dataset = _staged("load", load_csv, cfg.input, cfg.schema)
    timings["load"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    _staged("classify", cfg.classification.validate, dataset.schema,
            require_pipeline_roles=True)
    timings["classify"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    base = _staged("remove-identifiers", remove_explicit_identifiers,
                   dataset, cfg.classification)
    base_cls = AttributeClassification({
        name: role for name, role in cfg.classification.roles.items()
        if name in base.schema
    })
    timings["remove_identifiers"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    hiers = cfg.resolve_hierarchies() if cfg.algorithm == "ola" else None
    partition = _staged("k-anonymise", build_partition, base, base_cls, cfg,
                        hiers=hiers)
    timings["k_anonymise"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    first_anon, metrics = _staged(
        "dp", _evaluate_runs, base, partition, base_cls, cfg.eps,
        cfg.confidence, cfg.k, cfg.runs, (cfg.seed, _RUN_TAG),
    )
    timings["dp_and_evaluate"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    shuffle_seed = derive_seed(cfg.seed, _SHUFFLE_TAG)
    published = _staged("shuffle", shuffle_records, first_anon, shuffle_seed)
    perm = permutation_for(first_anon.n, shuffle_seed)
    linkage = [int(i) for i in partition.retained_indices(base.n)[perm]]
    timings["shuffle"] = time.perf_counter() - t0

    n = base.n
    retained = n - len(partition.suppressed)
    if published.n + len(partition.suppressed) != n:
        raise StageError("report", KeanonError(
            f"published rows ({published.n}) + suppressed "
            f"({len(partition.suppressed)}) != n ({n})"))

    loss_report = loss_metrics.build_loss_report(
        partition, base, cfg.eps, base_cls, hiers=hiers,
        empirical_error=metrics["empirical_error_mean"],
    )
    sizes = [ec.m for ec in partition.classes]
    hist: dict[int, int] = {}
    for s in sizes:
        hist[s] = hist.get(s, 0) + 1
    report = AnonymisationReport(
        config={
            "input": str(cfg.input) if cfg.input else None,
            "algorithm": cfg.algorithm,
            "k": cfg.k,
            "eps": cfg.eps,
            "max_suppression": cfg.max_suppression,
            "confidence": cfg.confidence,
            "seed": cfg.seed,
            "runs": cfg.runs,
        },
        totals={
            "n_input": dataset.n,
            "n": n,
            "ola_suppressed": len(partition.suppressed),
            "retained": retained,
            "published_rows": published.n,
        },
        partition={
            "algorithm": partition.algorithm,
            "k": partition.k,
            "node": list(partition.node) if partition.node else None,
            "class_count": len(partition.classes),
            "size_histogram": {str(s): c for s, c in sorted(hist.items())},
            "ola_suppression_fraction": partition.suppressed_fraction(n),
        },
        loss={
            **loss_report.to_json_dict(),
            "empirical_error_mean": metrics["empirical_error_mean"],
            "empirical_error_std": metrics["empirical_error_std"],
            "empirical_error_runs": metrics["empirical_error_runs"],
            "uniform_equivalent_p": loss_metrics.uniform_width_for_error(
                metrics["empirical_error_mean"]
            ),
            "noisy_nonpositive_mean": metrics["noisy_nonpositive_mean"],
        },
        risk={
            "risk_mean": metrics["risk_mean"],
            "risk_std": metrics["risk_std"],
            "risk_runs": metrics["risk_runs"],
        },
        confidence=(
            None if cfg.confidence is None else {
                "c": cfg.confidence,
                "suppression_fraction_mean": metrics["conf_suppression_mean"],
                "suppression_fraction_runs": metrics["conf_suppression_runs"],
            }
        ),
        timings=timings,
        linkage=linkage,
    )
    return published, report


def run_grid(
    cfg: RunConfig,
    k_list: list[int] | None = None,
    eps_list: list[float] | None = None,
    dataset: Dataset | None = None,
) -> list[dict]:
    """Sweep (k, eps) and aggregate each cell over ``cfg.runs`` runs.

    One partition is computed per k (the perturbation does not change it);
    every cell derives its own seed streams, so results are independent of
    sweep order.
    """
    cfg.validate()
    k_list = k_list or cfg.grid_k
    eps_list = eps_list or cfg.grid_eps
    if not k_list or not eps_list:
        raise ConfigurationError("grid requires non-empty k and eps lists")
    if any(k < 2 for k in k_list):
        raise ConfigurationError("grid k values must be >= 2")
    if any(e <= 0 for e in eps_list):
        raise ConfigurationError("grid eps values must be > 0")

    if dataset is None:
        if cfg.input is None:
            raise StageError("load", ConfigurationError("no input path configured"))
        dataset = _staged("load", load_csv, cfg.input, cfg.schema)
    _staged("classify", cfg.classification.validate, dataset.schema,
            require_pipeline_roles=True)
    base = _staged("remove-identifiers", remove_explicit_identifiers,
                   dataset, cfg.classification)
    base_cls = AttributeClassification({
        name: role for name, role in cfg.classification.roles.items()
        if name in base.schema
    })
    hiers = cfg.resolve_hierarchies() if cfg.algorithm == "ola" else None

    rows = []
    for ki, k in enumerate(k_list):
        partition = _staged("k-anonymise", build_partition, base, base_cls,
                            cfg, k=k, hiers=hiers)
        ola_pct = partition.suppressed_fraction(base.n) * 100.0
        for ei, eps in enumerate(eps_list):
            _, metrics = _staged(
                "dp", _evaluate_runs, base, partition, base_cls, eps,
                cfg.confidence, k, cfg.runs, (cfg.seed, _RUN_TAG, ki, ei),
            )
            expected = loss_metrics.expected_dataset_error(
                partition, base, eps, base_cls
            )
            rows.append({
                "k": k,
                "eps": eps,
                "expected_error": expected,
                "empirical_error": metrics["empirical_error_mean"],
                "risk": metrics["risk_mean"],
                "conf_suppression_pct": (
                    metrics["conf_suppression_mean"] * 100.0
                    if metrics["conf_suppression_mean"] is not None else None
                ),
                "ola_suppression_pct": ola_pct,
            })
    return rows


def write_grid_csv(rows: list[dict], path: str | Path) -> None:
    """Emit grid rows with the canonical plot-data header."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(GRID_HEADER)
        for row in rows:
            writer.writerow([
                row["k"],
                row["eps"],
                repr(row["expected_error"]),
                repr(row["empirical_error"]),
                repr(row["risk"]),
                "" if row["conf_suppression_pct"] is None
                else repr(row["conf_suppression_pct"]),
                repr(row["ola_suppression_pct"]),
            ])


def run_synth(cfg: RunConfig, seed: int | None = None) -> Dataset:
    """Augment the configured input with a synthetic height/weight column."""
    if cfg.synth is None:
        raise ConfigurationError("config has no [synth] section")
    section = cfg.synth
    for key in ("age_column", "gender_column", "attribute", "params"):
        if key not in section:
            raise ConfigurationError(f"[synth] section needs {key!r}")
    if cfg.input is None:
        raise ConfigurationError("no input path configured")
    ds = load_csv(cfg.input, cfg.schema)
    if section["params"] == "default":
        model = AnthropometricModel.plausible_defaults()
    else:
        model = AnthropometricModel.load(cfg.base_dir / section["params"])
    return augment_dataset(
        ds,
        age_column=section["age_column"],
        gender_column=section["gender_column"],
        kind=section["attribute"],
        model=model,
        seed=cfg.seed if seed is None else seed,
    )


def anonymised_schema(cfg: RunConfig) -> Schema:
    """Schema of a published file: k-quasis become categorical token columns,
    explicit identifiers are gone."""
    cols = []
    for name, kind in cfg.schema.columns:
        role = cfg.classification.roles[name]
        if role == "explicit":
            continue
        if role == K_QUASI:
            cols.append((name, CATEGORICAL))
        else:
            cols.append((name, kind))
    return Schema(tuple(cols))


def evaluate_pair(
    cfg: RunConfig,
    original: Dataset,
    anonymised: Dataset,
    linkage: list[int] | None = None,
) -> dict:
    """Risk/loss evaluation of an existing original/anonymised pair.

    Classes are reconstructed by grouping the anonymised k-quasi tokens.
    ``linkage`` gives the original row index of each anonymised row (written
    by ``anonymise --keep-linkage``); without it rows are assumed aligned.
    """
    base = remove_explicit_identifiers(original, cfg.classification)
    base_cls = AttributeClassification({
        name: role for name, role in cfg.classification.roles.items()
        if name in base.schema
    })
    if linkage is None:
        if anonymised.n != base.n:
            raise ConfigurationError(
                "row counts differ; provide the linkage file for the correspondence"
            )
        correspondence = np.arange(base.n, dtype=np.int64)
    else:
        correspondence = np.asarray(linkage, dtype=np.int64)
        if len(correspondence) != anonymised.n:
            raise ConfigurationError("linkage length must match anonymised rows")
        if len(np.unique(correspondence)) != len(correspondence):
            raise ConfigurationError("linkage maps two rows to one original record")

    # reorder anonymised rows into ascending original order
    order = np.argsort(correspondence, kind="stable")
    anon_sorted = anonymised.take(order)
    retained = correspondence[order]

    kq = base_cls.with_role(base.schema, K_QUASI)
    keys: dict[tuple, list[int]] = {}
    for j in range(anon_sorted.n):
        key = tuple(str(anon_sorted.column(name)[j]) for name in kq)
        keys.setdefault(key, []).append(j)
    classes = [
        EquivalenceClass(key=key, members=retained[np.array(rows, dtype=np.int64)])
        for key, rows in sorted(keys.items())
    ]
    suppressed = frozenset(range(base.n)) - frozenset(int(i) for i in retained)
    partition = Partition(
        classes=classes,
        suppressed=frozenset(suppressed),
        k=cfg.k,
        algorithm="external",
        kquasi_columns=tuple(kq),
    )
    eps_col = base_cls.with_role(base.schema, EPS_QUASI)[0]
    link = risk_eval.linking_risk(base, anon_sorted, partition, base_cls)
    err = loss_metrics.empirical_relative_error(base, anon_sorted, eps_col, retained)
    out = {
        "k": cfg.k,
        "eps": cfg.eps,
        "c": cfg.confidence,
        "risk": link.risk,
        "empirical_error": err,
        "ola_suppression": len(suppressed) / base.n,
        "confidence_suppression": None,
        "per_class": link.to_json_dict()["per_class"],
    }
    if cfg.confidence is not None:
        supp = risk_eval.confidence_suppression(
            base, anon_sorted, partition, cfg.eps, cfg.confidence, cfg.k, base_cls
        )
        out["confidence_suppression"] = supp.fraction_of(base.n)
    return json_ready(out)
