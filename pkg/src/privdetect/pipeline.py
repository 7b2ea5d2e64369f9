"""End-to-end runs: filter, trajectory features, outlier removal, split, train, evaluate."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .allocator import PlanConfig
from .corpus import Document, extract_document, filter_corpus, read_corpus
from .detector import (
    Dataset,
    TrainConfig,
    evaluate,
    filter_outliers,
    split_stratified,
    train,
)
from .entities import SensitivityRegistry, default_registry, load_registry
from .features import (
    extract_trajectory,
    feature_row,
    read_features_jsonl,
    write_features_csv,
    write_features_jsonl,
)
from .sanitizer import epsilon_grid
from .scoring import TrigramScorer, canonical_metric, score

logger = logging.getLogger(__name__)


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class RunConfig:
    corpus: Optional[str] = None
    reference: Optional[str] = None
    registry: Optional[str] = None
    out: str = "out"
    features: Optional[str] = None  # precomputed features file; skips sanitization
    epsilon: Optional[float] = None
    grid_min: float = 0.1
    grid_max: float = 2.0
    grid_count: int = 30
    count_fraction: float = 0.1
    weight_mode: str = "plain"
    collapse_text_bucket: bool = False
    iqr_factor: float = 1.5
    train_fraction: float = 0.8
    metric: str = "log_likelihood"
    smoothing_k: float = 0.1
    seed: int = 0
    jobs: int = 1
    learning_rate: float = 0.1
    epochs: int = 500
    l2: float = 1e-3

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - names
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        return cls(**raw)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def grid(self) -> list[float]:
        if self.epsilon is not None:
            return [float(self.epsilon)]
        return epsilon_grid(self.grid_min, self.grid_max, self.grid_count)

    def plan_config(self) -> PlanConfig:
        return PlanConfig(self.count_fraction, self.weight_mode, self.collapse_text_bucket)

    def train_config(self) -> TrainConfig:
        return TrainConfig(self.learning_rate, self.epochs, self.l2, self.seed)

    def load_registry(self) -> SensitivityRegistry:
        return load_registry(self.registry) if self.registry else default_registry()


def fit_scorer(reference_texts: Sequence[str], k: float = 0.1) -> TrigramScorer:
    return TrigramScorer(k).fit(reference_texts)


def load_reference(path) -> list[str]:
    return [d.text for d in read_corpus(path)]


# Worker state for process pools; set once per worker by _init_worker.
_WORKER: dict = {}


def _init_worker(scorer, metric, grid, registry, plan_config, seed):
    _WORKER.update(scorer=scorer, metric=metric, grid=grid, registry=registry,
                   plan_config=plan_config, seed=seed)


def _features_for(doc: Document) -> dict:
    w = _WORKER
    traj = extract_trajectory(
        doc.text, w["scorer"], w["metric"], w["grid"], w["registry"], w["plan_config"],
        w["seed"], doc_key=doc.doc_id, extraction=extract_document(doc, w["registry"]),
    )
    return feature_row(doc.doc_id, doc.label, traj)


def compute_features(docs: Sequence[Document], scorer, metric: str, grid: Sequence[float],
                     registry: SensitivityRegistry, plan_config: PlanConfig, seed: int,
                     jobs: int = 1) -> list[dict]:
    """Feature rows for ``docs``, sorted by doc_id whatever the worker count."""
    args = (scorer, canonical_metric(metric), list(grid), registry, plan_config, seed)
    docs = sorted(docs, key=lambda d: d.doc_id)
    if jobs <= 1:
        _init_worker(*args)
        rows = [_features_for(d) for d in docs]
    else:
        with ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=args) as pool:
            rows = list(pool.map(_features_for, docs, chunksize=8))
    return rows


def baseline_features(docs: Sequence[Document], scorer, metric: str) -> list[dict]:
    """Single-feature rows holding the mean token score of the unsanitized text."""
    return [
        {"doc_id": d.doc_id, "label": d.label, "epsilon_grid": [],
         "flat": [score(d.text, scorer, metric).mean()]}
        for d in sorted(docs, key=lambda d: d.doc_id)
    ]


def fit_and_evaluate(rows: Sequence[dict], config: RunConfig, remove_outliers: bool = True):
    """Outlier removal, stratified split, training and test metrics."""
    data = Dataset.from_feature_rows(rows)
    n_before = len(data)
    if remove_outliers:
        data = filter_outliers(data, config.iqr_factor)
    n_removed = n_before - len(data)
    train_set, test_set = split_stratified(data, config.train_fraction, config.seed)
    model = train(train_set, config.train_config())
    metrics = evaluate(model, test_set)
    metrics.update(n_train=len(train_set), n_test=len(test_set), n_outliers_removed=n_removed)
    return model, metrics, (train_set, test_set)


def evaluate_on_split(rows: Sequence[dict], train_ids, test_ids, config: RunConfig) -> dict:
    """Train/evaluate ``rows`` on a given doc-id split (used for baselines)."""
    data = Dataset.from_feature_rows(rows)
    index = {doc_id: i for i, doc_id in enumerate(data.doc_ids)}
    train_set = data.subset([index[i] for i in train_ids])
    test_set = data.subset([index[i] for i in test_ids])
    model = train(train_set, config.train_config())
    metrics = evaluate(model, test_set)
    metrics.update(n_train=len(train_set), n_test=len(test_set))
    return metrics


def _dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run_pipeline(config: RunConfig, docs: Optional[Sequence[Document]] = None,
                 reference_texts: Optional[Sequence[str]] = None) -> dict:
    """Run every stage and write features, model and metrics under ``config.out``."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)

    if config.features:
        try:
            rows = read_features_jsonl(config.features)
        except (OSError, ValueError) as exc:
            raise StageError("features", str(exc)) from exc
        n_rejected = None
    else:
        try:
            registry = config.load_registry()
            if docs is None:
                if not config.corpus:
                    raise ValueError("no corpus given")
                docs = read_corpus(config.corpus)
            kept, rejected = filter_corpus(docs, registry)
            n_rejected = len(rejected)
        except (OSError, ValueError) as exc:
            raise StageError("filter", str(exc)) from exc
        try:
            if reference_texts is None:
                if not config.reference:
                    raise ValueError("a reference corpus is needed to fit the proxy scorer")
                reference_texts = load_reference(config.reference)
            scorer = fit_scorer(reference_texts, config.smoothing_k)
            rows = compute_features(kept, scorer, config.metric, config.grid(), registry,
                                    config.plan_config(), config.seed, config.jobs)
        except (OSError, ValueError, RuntimeError) as exc:
            raise StageError("features", str(exc)) from exc
        write_features_jsonl(rows, out / "features.jsonl")

    try:
        model, metrics, _ = fit_and_evaluate(rows, config)
    except (ValueError, RuntimeError) as exc:
        raise StageError("detector", str(exc)) from exc
    if n_rejected is not None:
        metrics["n_rejected"] = n_rejected
    metrics["d"] = len(rows[0]["epsilon_grid"]) if rows else 0
    model.save(out / "model.json")
    _dump_json(metrics, out / "metrics.json")
    return metrics


def run_ablation(config: RunConfig, d_values: Sequence[int], docs=None, reference_texts=None) -> list[dict]:
    """F1 per grid size ``d`` with the corpus and seed held fixed; writes ablation.csv."""
    if any(int(d) < 1 for d in d_values):
        raise ValueError("d values must be positive integers")
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    if docs is None and config.corpus:
        docs = read_corpus(config.corpus)
    if reference_texts is None and config.reference:
        reference_texts = load_reference(config.reference)
    results = []
    for d in d_values:
        sub = dataclasses.replace(config, grid_count=int(d), epsilon=None, features=None,
                                  out=str(out / f"d{int(d)}"))
        m = run_pipeline(sub, docs, reference_texts)
        results.append({"d": int(d), "f1": m["f1"], "domain": "all",
                        "precision": m["precision"], "recall": m["recall"],
                        "accuracy": m["accuracy"]})
    with open(out / "ablation.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["d", "f1", "domain", "precision", "recall", "accuracy"])
        writer.writeheader()
        writer.writerows(results)
    return results
