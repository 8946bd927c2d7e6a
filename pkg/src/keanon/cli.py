"""Command-line interface.

Subcommands: anonymise, grid, synth, evaluate, hierarchies. All take
``--config`` (TOML, see docs/example_config.toml) plus optional ``--seed``
and ``--out``; errors exit non-zero with a stage-tagged message.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .dataset import load_csv, write_csv
from .errors import KeanonError
from .hierarchy import builtin_hierarchies, load_hierarchy_csv
from .pipeline import (
    anonymised_schema,
    evaluate_pair,
    load_config,
    run_grid,
    run_pipeline,
    run_synth,
    write_grid_csv,
)


def _add_common(sub: argparse.ArgumentParser, config_required: bool = True):
    sub.add_argument("--config", type=Path, required=config_required,
                     help="TOML run configuration")
    sub.add_argument("--seed", type=int, default=None,
                     help="override the configured master seed")
    sub.add_argument("--out", type=Path, default=Path("."),
                     help="output directory (created if missing)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="keanon",
        description=(
            "k-anonymise chosen quasi identifiers, add per-equivalence-class "
            "Laplace noise to the remaining numeric quasi, and report "
            "information loss, linking risk and suppression."
        ),
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("anonymise", help="run the full workflow once")
    _add_common(p)
    p.add_argument("--keep-linkage", action="store_true",
                   help="also write the row correspondence to linkage.json "
                        "(debug only; never part of the published CSV)")

    p = subs.add_parser("grid", help="sweep a (k, eps) grid and write plot data")
    _add_common(p)
    p.add_argument("--k", type=str, default=None,
                   help="comma-separated k values (default: [grid].k)")
    p.add_argument("--eps", type=str, default=None,
                   help="comma-separated eps values (default: [grid].eps)")

    p = subs.add_parser("synth", help="append a synthetic height/weight column")
    _add_common(p)

    p = subs.add_parser("evaluate",
                        help="risk/loss of an existing original/anonymised pair")
    _add_common(p)
    p.add_argument("--original", type=Path, required=True)
    p.add_argument("--anonymised", type=Path, required=True)
    p.add_argument("--linkage", type=Path, default=None,
                   help="linkage.json written by anonymise --keep-linkage")

    p = subs.add_parser("hierarchies", help="list builtins / validate ladder files")
    _add_common(p, config_required=False)
    p.add_argument("--validate", type=Path, default=None,
                   help="hierarchy CSV file to check")
    return parser


def _cmd_anonymise(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    args.out.mkdir(parents=True, exist_ok=True)
    published, report = run_pipeline(cfg)
    out_csv = args.out / "anonymised.csv"
    write_csv(published, out_csv)
    report.save(args.out / "report.json")
    if args.keep_linkage:
        with (args.out / "linkage.json").open("w", encoding="utf-8") as fh:
            json.dump({"original_index_per_row": report.linkage}, fh)
    print(f"wrote {out_csv} ({published.n} rows) and report.json")
    return 0


def _cmd_grid(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    k_list = [int(v) for v in args.k.split(",")] if args.k else None
    eps_list = [float(v) for v in args.eps.split(",")] if args.eps else None
    args.out.mkdir(parents=True, exist_ok=True)
    rows = run_grid(cfg, k_list=k_list, eps_list=eps_list)
    out = args.out / "grid.csv"
    write_grid_csv(rows, out)
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


def _cmd_synth(args) -> int:
    cfg = load_config(args.config)
    augmented = run_synth(cfg, seed=args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    out = args.out / f"{Path(cfg.input).stem}_{cfg.synth['attribute']}.csv"
    write_csv(augmented, out)
    print(f"wrote {out} ({augmented.n} rows)")
    return 0


def _cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    original = load_csv(args.original, cfg.schema)
    anonymised = load_csv(args.anonymised, anonymised_schema(cfg))
    linkage = None
    if args.linkage is not None:
        with args.linkage.open(encoding="utf-8") as fh:
            linkage = json.load(fh)["original_index_per_row"]
    result = evaluate_pair(cfg, original, anonymised, linkage)
    args.out.mkdir(parents=True, exist_ok=True)
    out = args.out / "evaluation.json"
    with out.open("w", encoding="utf-8") as fh:
        json.dump(result, fh, indent=2)
    print(f"risk={result['risk']:.4f} empirical_error={result['empirical_error']:.4f}")
    print(f"wrote {out}")
    return 0


def _cmd_hierarchies(args) -> int:
    if args.validate is not None:
        hier = load_hierarchy_csv(args.validate)
        domain = len(hier.domain) if hier.domain is not None else "open"
        print(f"ok: {hier.attribute}: {hier.h} levels, domain size {domain}")
        return 0
    print("builtin hierarchies:")
    for name, hier in builtin_hierarchies().items():
        print(f"  {name}: {hier.h} levels")
    if args.config is not None:
        cfg = load_config(args.config)
        print("configured hierarchies:")
        for column, source in cfg.hierarchy_sources.items():
            hier = cfg.resolve_hierarchies()[column]
            print(f"  {column}: {source} ({hier.h} levels)")
    return 0


_COMMANDS = {
    "anonymise": _cmd_anonymise,
    "grid": _cmd_grid,
    "synth": _cmd_synth,
    "evaluate": _cmd_evaluate,
    "hierarchies": _cmd_hierarchies,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (KeanonError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
