"""Noisy entity counting, adaptive per-instance budgets and the privacy ledger."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .entities import (
    TEXT_BUCKET,
    WEIGHT_MODES,
    ConfigurationError,
    EntityKind,
    SensitivityRegistry,
    bucket_delta,
    weight,
)
from .extractor import ExtractionResult
from .mechanisms import ParameterError, as_generator, laplace_sample

BUDGET_TOLERANCE = 1e-9
COUNT_BUCKET = "__count__"


class BudgetExceededError(RuntimeError):
    pass


class NothingToAllocate(ValueError):
    """Raised by :func:`allocate` when there are no buckets."""


@dataclass(frozen=True)
class PlanConfig:
    count_fraction: float = 0.1
    weight_mode: str = "plain"
    collapse_text_bucket: bool = False

    def __post_init__(self):
        if not 0 < self.count_fraction < 1:
            raise ParameterError(f"count_fraction must lie in (0, 1), got {self.count_fraction}")
        if self.weight_mode not in WEIGHT_MODES:
            raise ConfigurationError(f"unknown weight mode {self.weight_mode!r}")


@dataclass(frozen=True)
class BucketPlan:
    bucket: str
    true_count: int
    noisy_count: float
    delta: float
    weight: float
    share: float
    per_instance_epsilon: float
    perturb_limit: int


@dataclass(frozen=True)
class BudgetPlan:
    epsilon_total: float
    epsilon_cnt: float
    epsilon_sub: float
    buckets: dict[str, BucketPlan] = field(default_factory=dict)

    def planned_spend(self) -> float:
        return sum(b.perturb_limit * b.per_instance_epsilon for b in self.buckets.values())


@dataclass
class LedgerEntry:
    bucket: str
    instance: int
    mechanism: str
    epsilon: float


@dataclass
class AccountantLedger:
    """Sequential-composition accountant for one document.

    The counting budget is charged at construction; every later mechanism
    call must be charged before it runs.
    """

    epsilon_total: float
    epsilon_cnt: float
    entries: list[LedgerEntry] = field(default_factory=list)

    def __post_init__(self):
        if self.epsilon_cnt > self.epsilon_total + BUDGET_TOLERANCE:
            raise BudgetExceededError(
                f"counting budget {self.epsilon_cnt} exceeds total {self.epsilon_total}"
            )

    @property
    def total(self) -> float:
        return self.epsilon_cnt + math.fsum(e.epsilon for e in self.entries)

    def bucket_totals(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for e in self.entries:
            out[e.bucket] = out.get(e.bucket, 0.0) + e.epsilon
        return out

    @property
    def remaining(self) -> float:
        return self.epsilon_total - self.total


def charge(ledger: AccountantLedger, bucket: str, mechanism: str, epsilon: float,
           instance: Optional[int] = None) -> AccountantLedger:
    if epsilon < 0:
        raise ParameterError(f"cannot charge negative epsilon {epsilon}")
    if ledger.total + epsilon > ledger.epsilon_total + BUDGET_TOLERANCE:
        raise BudgetExceededError(
            f"charging {epsilon:.6g} to {bucket} would spend {ledger.total + epsilon:.12g} "
            f"> epsilon_total {ledger.epsilon_total:.12g}"
        )
    if instance is None:
        instance = sum(1 for e in ledger.entries if e.bucket == bucket)
    ledger.entries.append(LedgerEntry(str(bucket), instance, mechanism, epsilon))
    return ledger


def split_budget(epsilon_total: float, count_fraction: float = 0.1) -> tuple[float, float]:
    if not epsilon_total > 0:
        raise ParameterError(f"epsilon_total must be positive, got {epsilon_total}")
    if not 0 < count_fraction < 1:
        raise ParameterError(f"count_fraction must lie in (0, 1), got {count_fraction}")
    epsilon_cnt = count_fraction * epsilon_total
    return epsilon_cnt, epsilon_total - epsilon_cnt


def noisy_count(c: int, epsilon_cnt: float, rng) -> float:
    """Laplace-noised count (sensitivity 1), floored at 1."""
    if not epsilon_cnt > 0:
        raise ParameterError(f"epsilon_cnt must be positive, got {epsilon_cnt}")
    return max(1.0, c + laplace_sample(1.0 / epsilon_cnt, rng))


def allocate(epsilon_sub: float, buckets: Mapping) -> dict:
    """Per-instance budgets ``eps_sub * rho / (c_noisy * sum(rho))``.

    ``buckets`` maps a bucket id to ``(noisy_count, delta, weight)``; the
    share is ``rho = delta * weight * noisy_count``.
    """
    if not buckets:
        raise NothingToAllocate("no entity buckets to allocate budget to")
    if not epsilon_sub > 0:
        raise ParameterError(f"epsilon_sub must be positive, got {epsilon_sub}")
    rho = {}
    for key, (c_noisy, delta, w) in buckets.items():
        if not (c_noisy > 0 and delta > 0 and w > 0):
            raise ParameterError(f"bucket {key}: noisy count, delta and weight must be positive")
        rho[key] = delta * w * c_noisy
    total = math.fsum(rho.values())
    return {key: epsilon_sub * rho[key] / (buckets[key][0] * total) for key in buckets}


def bucket_of(kind: EntityKind, config: PlanConfig) -> str:
    if config.collapse_text_bucket and kind.is_textual:
        return TEXT_BUCKET
    return kind.value


def bucket_counts(extraction: ExtractionResult, config: PlanConfig) -> dict[str, int]:
    """True counts per bucket, in a fixed (enum) order, present buckets only."""
    counts: dict[str, int] = {}
    for kind in EntityKind:
        c = extraction.count(kind)
        if c:
            b = bucket_of(kind, config)
            counts[b] = counts.get(b, 0) + c
    return counts


def build_plan(
    extraction: ExtractionResult,
    epsilon_total: float,
    registry: SensitivityRegistry,
    rng,
    config: PlanConfig = PlanConfig(),
    noisy_counts: Optional[Mapping[str, float]] = None,
) -> BudgetPlan:
    """Stage 1 (noisy counts) and stage 2 (allocation) for one budget level.

    ``noisy_counts`` overrides the Laplace draw per bucket; it exists for
    tracing the truncation rule and is never used by the pipeline.
    """
    eps_cnt, eps_sub = split_budget(epsilon_total, config.count_fraction)
    gen = as_generator(rng)
    counts = bucket_counts(extraction, config)

    noisy = {}
    for b, c in counts.items():
        draw = noisy_count(c, eps_cnt, gen)
        if noisy_counts is not None and b in noisy_counts:
            draw = max(1.0, float(noisy_counts[b]))
        noisy[b] = draw

    if not counts:
        return BudgetPlan(epsilon_total, eps_cnt, eps_sub, {})

    inputs = {}
    for b, c_tilde in noisy.items():
        count_for_weight = int(math.floor(c_tilde))
        w = weight(b if b == TEXT_BUCKET else EntityKind(b), registry,
                   count_for_weight, config.weight_mode)
        inputs[b] = (c_tilde, bucket_delta(b if b == TEXT_BUCKET else EntityKind(b), registry), w)
    eps = allocate(eps_sub, inputs)

    buckets = {}
    for b, (c_tilde, delta, w) in inputs.items():
        buckets[b] = BucketPlan(
            bucket=b,
            true_count=counts[b],
            noisy_count=c_tilde,
            delta=delta,
            weight=w,
            share=delta * w * c_tilde,
            per_instance_epsilon=eps[b],
            perturb_limit=min(counts[b], int(math.floor(c_tilde))),
        )
    return BudgetPlan(epsilon_total, eps_cnt, eps_sub, buckets)
