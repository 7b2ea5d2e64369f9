"""Batch command-line front end.

Every subcommand reads an optional JSON config (``--config``) whose keys are
:class:`~privdetect.pipeline.RunConfig` fields; flags given on the command
line override the file.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .corpus import (
    Document,
    HUMAN_SOURCE,
    MACHINE_SOURCE,
    REFERENCE_SOURCE,
    extract_document,
    filter_corpus,
    generate_reference,
    generate_synthetic,
    read_corpus,
    write_corpus,
)
from .features import write_features_csv, write_features_jsonl
from .mechanisms import RandomSource, derive_stream
from .pipeline import RunConfig, StageError, compute_features, fit_scorer, load_reference, run_ablation, run_pipeline
from .sanitizer import audit, sanitize, write_audit
from .scoring import METRIC_ALIASES

logger = logging.getLogger("privdetect")

# flag dest -> RunConfig field
_OVERRIDES = (
    "corpus", "reference", "registry", "out", "features", "epsilon", "grid_min", "grid_max",
    "grid_count", "count_fraction", "weight_mode", "collapse_text_bucket", "iqr_factor",
    "train_fraction", "metric", "seed", "jobs",
)


def _add_shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of run settings")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--corpus", help="JSON Lines corpus")
    p.add_argument("--reference", help="JSON Lines corpus used to fit the proxy scorer")
    p.add_argument("--registry", help="sensitivity registry JSON")
    p.add_argument("--metric", choices=sorted(METRIC_ALIASES))
    budget = p.add_mutually_exclusive_group()
    budget.add_argument("--epsilon", type=float, help="single total budget")
    budget.add_argument("--grid-min", type=float, dest="grid_min")
    p.add_argument("--grid-max", type=float, dest="grid_max")
    p.add_argument("--grid-count", type=int, dest="grid_count")
    p.add_argument("--count-fraction", type=float, dest="count_fraction")
    p.add_argument("--weight-mode", choices=("plain", "count_scaled"), dest="weight_mode")
    p.add_argument("--collapse-text-bucket", action="store_const", const=True,
                   dest="collapse_text_bucket")
    p.add_argument("--iqr-factor", type=float, dest="iqr_factor")
    p.add_argument("--train-fraction", type=float, dest="train_fraction")
    p.add_argument("--features", help="precomputed features file (pipeline skips sanitization)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="privdetect", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in (
        ("extract", "write detected entity spans per document"),
        ("sanitize", "sanitize a corpus at one budget and write audit records"),
        ("features", "write perturbation-trajectory features"),
        ("pipeline", "filter, featurize, train and evaluate"),
        ("ablation", "pipeline F1 for several grid sizes"),
        ("synth", "write a synthetic labelled corpus and a reference corpus"),
    ):
        p = sub.add_parser(name, help=help_)
        _add_shared(p)
        if name == "ablation":
            p.add_argument("--d-values", default="10,20,30,60",
                           help="comma-separated grid sizes (default: %(default)s)")
        if name == "synth":
            p.add_argument("--n-per-class", type=int, default=200)
            p.add_argument("--n-reference", type=int, default=1000)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {k: getattr(args, k) for k in _OVERRIDES if getattr(args, k, None) is not None}
    if overrides.get("epsilon") is None and any(
        k in overrides for k in ("grid_min", "grid_max", "grid_count")
    ):
        overrides["epsilon"] = None
    return dataclasses.replace(config, **overrides)


def _require(value, what: str):
    if not value:
        raise ValueError(f"{what} is required")
    return value


def cmd_extract(config: RunConfig) -> int:
    registry = config.load_registry()
    docs = read_corpus(_require(config.corpus, "--corpus"))
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "entities.jsonl", "w", encoding="utf-8") as fh:
        for doc in sorted(docs, key=lambda d: d.doc_id):
            ex = extract_document(doc, registry)
            spans = [
                {"start": s.start, "end": s.end, "kind": s.kind.value, "surface": s.surface}
                for s in ex.spans
            ]
            row = {"doc_id": doc.doc_id, "density": ex.density,
                   "counts": {k.value: n for k, n in ex.counts.items()}, "spans": spans}
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    print(f"extracted entities from {len(docs)} document(s) -> {out / 'entities.jsonl'}")
    return 0


def cmd_sanitize(config: RunConfig) -> int:
    if config.epsilon is None:
        raise ValueError("sanitize needs a single --epsilon")
    registry = config.load_registry()
    plan_config = config.plan_config()
    docs = sorted(read_corpus(_require(config.corpus, "--corpus")), key=lambda d: d.doc_id)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    sanitized, records = [], []
    for doc in docs:
        rng = RandomSource(config.seed, derive_stream(doc.doc_id, "sanitize"))
        result = sanitize(doc.text, config.epsilon, registry, plan_config, rng,
                          extraction=extract_document(doc, registry))
        sanitized.append(Document(doc.doc_id, result.sanitized_text, doc.label, doc.source))
        records.append(audit(result, doc.doc_id))
    write_corpus(sanitized, out / "sanitized.jsonl")
    write_audit(records, out / "audit.jsonl")

    spent = [r["ledger_total"] for r in records]
    n_spans = sum(len(r["records"]) for r in records)
    n_redacted = sum(1 for r in records for s in r["records"] if s["mechanism"] == "redacted")
    print(f"documents: {len(records)}  epsilon_total: {config.epsilon:g}")
    if records:
        print(f"entities: {n_spans}  perturbed: {n_spans - n_redacted}  redacted: {n_redacted}")
        print(f"ledger spend: max {max(spent):.6g}  mean {sum(spent) / len(spent):.6g}")
    return 0


def cmd_features(config: RunConfig) -> int:
    registry = config.load_registry()
    docs = read_corpus(_require(config.corpus, "--corpus"))
    kept, rejected = filter_corpus(docs, registry)
    scorer = fit_scorer(load_reference(_require(config.reference, "--reference")), config.smoothing_k)
    rows = compute_features(kept, scorer, config.metric, config.grid(), registry,
                            config.plan_config(), config.seed, config.jobs)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    write_features_jsonl(rows, out / "features.jsonl")
    write_features_csv(rows, out / "features.csv")
    print(f"features for {len(rows)} document(s), {len(rejected)} rejected by the filter")
    return 0


def cmd_pipeline(config: RunConfig) -> int:
    metrics = run_pipeline(config)
    print(json.dumps(metrics, indent=2, sort_keys=True))
    return 0


def cmd_ablation(config: RunConfig, d_values) -> int:
    results = run_ablation(config, d_values)
    for row in results:
        print(f"d={row['d']:<4d} f1={row['f1']:.4f}")
    return 0


def cmd_synth(config: RunConfig, n_per_class: int, n_reference: int) -> int:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    docs = generate_synthetic(n_per_class, HUMAN_SOURCE, MACHINE_SOURCE, seed=config.seed)
    ref = generate_reference(n_reference, seed=config.seed, source=REFERENCE_SOURCE)
    write_corpus(docs, out / "corpus.jsonl")
    write_corpus([Document(f"ref-{i:05d}", t, 0, "synthetic:reference") for i, t in enumerate(ref)],
                 out / "reference.jsonl")
    print(f"wrote {len(docs)} labelled and {len(ref)} reference documents to {out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args)
        if args.command == "extract":
            return cmd_extract(config)
        if args.command == "sanitize":
            return cmd_sanitize(config)
        if args.command == "features":
            return cmd_features(config)
        if args.command == "pipeline":
            return cmd_pipeline(config)
        if args.command == "ablation":
            d_values = [int(x) for x in args.d_values.split(",") if x.strip()]
            return cmd_ablation(config, d_values)
        return cmd_synth(config, args.n_per_class, args.n_reference)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
