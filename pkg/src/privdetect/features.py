"""Perturbation-trajectory features: one (metric, confidence, effect) row per budget."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .allocator import PlanConfig
from .entities import SensitivityRegistry, default_registry
from .extractor import ExtractionResult
from .sanitizer import epsilon_grid, sanitize_grid
from .scoring import canonical_metric, score
from .stats import UndefinedEffectSize, cohens_d, mann_whitney_u

logger = logging.getLogger(__name__)

COLUMNS = ("metric", "conf", "d")


class FeatureError(RuntimeError):
    pass


@dataclass
class FeatureTrajectory:
    epsilon_grid: list[float]
    matrix: np.ndarray  # shape (d, 3)

    @property
    def flat(self) -> np.ndarray:
        return self.matrix.reshape(-1)

    @property
    def d(self) -> int:
        return len(self.epsilon_grid)


def _effect_size(variant, original, where: str) -> float:
    try:
        return cohens_d(variant, original)
    except UndefinedEffectSize:
        logger.warning("zero pooled variance (%s); using effect size 0", where)
        return 0.0
    except ValueError as exc:
        # fewer than two tokens
        logger.warning("effect size undefined (%s): %s; using 0", where, exc)
        return 0.0


def trajectory_row(variant_scores: np.ndarray, original_scores: np.ndarray, where: str = ""):
    _, p = mann_whitney_u(variant_scores, original_scores)
    return (
        float(np.mean(variant_scores)),
        1.0 - p,
        _effect_size(variant_scores, original_scores, where),
    )


def extract_trajectory(
    text: str,
    scorer,
    metric: str = "log_likelihood",
    grid: Optional[Sequence[float]] = None,
    registry: Optional[SensitivityRegistry] = None,
    config: PlanConfig = PlanConfig(),
    seed: int = 0,
    doc_key: str = "",
    extraction: Optional[ExtractionResult] = None,
) -> FeatureTrajectory:
    """Sanitize ``text`` once per budget level and compare each variant to the original.

    Each row holds the mean token score of the sanitized variant, 1 - p of
    the Mann-Whitney test (variant vs. original token scores) and Cohen's d
    of the same two samples.
    """
    metric = canonical_metric(metric)
    registry = registry or default_registry()
    grid = epsilon_grid() if grid is None else list(grid)
    try:
        original = score(text, scorer, metric).scores
        variants = sanitize_grid(text, grid, registry, config, seed, doc_key, extraction)
        rows = []
        for eps, doc in zip(grid, variants):
            variant = score(doc.sanitized_text, scorer, metric).scores
            rows.append(trajectory_row(variant, original, f"{doc_key} eps={eps:.4g}"))
    except ValueError as exc:
        raise FeatureError(f"document {doc_key!r}: {exc}") from exc
    return FeatureTrajectory(grid, np.array(rows, dtype=float))


def column_names(d: int) -> list[str]:
    return [f"eps_{i}_{c}" for i in range(d) for c in COLUMNS]


def write_features_jsonl(rows: Iterable[dict], path) -> None:
    """Rows are ``{doc_id, label, epsilon_grid, flat}`` dicts."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_features_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_features_csv(rows: Sequence[dict], path) -> None:
    d = len(rows[0]["epsilon_grid"]) if rows else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doc_id", "label"] + column_names(d))
        for row in rows:
            writer.writerow([row["doc_id"], row["label"]] + [repr(float(x)) for x in row["flat"]])


def feature_row(doc_id: str, label: int, traj: FeatureTrajectory) -> dict:
    return {
        "doc_id": doc_id,
        "label": int(label),
        "epsilon_grid": list(traj.epsilon_grid),
        "flat": [float(x) for x in traj.flat],
    }
