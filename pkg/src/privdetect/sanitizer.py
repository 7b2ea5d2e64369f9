"""Document-level sanitization: extract, plan, perturb, redact, splice."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .allocator import (
    BUDGET_TOLERANCE,
    AccountantLedger,
    BudgetPlan,
    PlanConfig,
    bucket_of,
    build_plan,
    charge,
)
from .entities import EntityKind, SensitivityRegistry
from .extractor import EntitySpan, ExtractionResult, extract
from .mechanisms import (
    ParameterError,
    PerturbedValue,
    RandomSource,
    as_generator,
    derive_stream,
    perturb_numeric,
    perturb_textual,
    redacted,
)

CLOCK_KINDS = (EntityKind.TIME_HOUR, EntityKind.TIME_MINUTE)

DEFAULT_GRID_MIN = 0.1
DEFAULT_GRID_MAX = 2.0
DEFAULT_GRID_COUNT = 30


def epsilon_grid(lo: float = DEFAULT_GRID_MIN, hi: float = DEFAULT_GRID_MAX,
                 count: int = DEFAULT_GRID_COUNT) -> list[float]:
    if count < 1:
        raise ParameterError(f"grid count must be positive, got {count}")
    if count == 1:
        return [float(hi)]
    return [float(x) for x in np.linspace(lo, hi, count)]


@dataclass(frozen=True)
class SpanRecord:
    span: EntitySpan
    value: PerturbedValue
    text: str  # replacement written into the sanitized text


@dataclass
class SanitizedDocument:
    original_text: str
    sanitized_text: str
    records: list[SpanRecord]
    plan: BudgetPlan
    ledger: AccountantLedger
    epsilon_total: float
    rng_stream: Optional[RandomSource] = None

    @property
    def n_redacted(self) -> int:
        return sum(1 for r in self.records if r.value.mechanism == "redacted")


def format_number(value: float, surface: str, width: int = 0) -> str:
    """Render ``value`` in the surface style of ``surface``.

    Keeps a leading currency symbol, thousands separators, decimal places and
    zero padding of the original. Integers are also padded to ``width``.
    """
    body = surface.lstrip("$€£")
    prefix = surface[: len(surface) - len(body)]
    stripped = body.lstrip()
    prefix += body[: len(body) - len(stripped)]
    digits = stripped
    decimals = len(digits.split(".", 1)[1]) if "." in digits else 0
    grouped = "," in digits
    if decimals:
        out = f"{value:,.{decimals}f}" if grouped else f"{value:.{decimals}f}"
    else:
        ivalue = int(round(value))
        out = f"{ivalue:,}" if grouped else str(ivalue)
        if len(digits) > 1 and digits.startswith("0") and ivalue >= 0:
            out = out.zfill(len(digits))
        out = out.zfill(width)
    return prefix + out


def _splice(text: str, records: Sequence[SpanRecord]) -> str:
    out = text
    for rec in sorted(records, key=lambda r: r.span.start, reverse=True):
        out = out[: rec.span.start] + rec.text + out[rec.span.end:]
    return out


def sanitize(
    text: str,
    epsilon_total: float,
    registry: SensitivityRegistry,
    config: PlanConfig = PlanConfig(),
    rng=None,
    extraction: Optional[ExtractionResult] = None,
    noisy_counts=None,
) -> SanitizedDocument:
    """Sanitize one document at one total budget.

    Instances past a bucket's perturbation limit are replaced with
    ``[KIND]`` and cost nothing. Every mechanism call is charged to the
    ledger before it runs, so an overspend aborts the document.
    """
    if not epsilon_total > 0:
        raise ParameterError(f"epsilon_total must be positive, got {epsilon_total}")
    if rng is None:
        rng = RandomSource(0)
    stream = rng if isinstance(rng, RandomSource) else None
    gen = as_generator(rng)
    if extraction is None:
        extraction = extract(text, registry)

    plan = build_plan(extraction, epsilon_total, registry, gen, config, noisy_counts)
    ledger = AccountantLedger(epsilon_total, plan.epsilon_cnt)

    seen: dict[str, int] = {}
    records = []
    for span in extraction.spans:
        bucket = bucket_of(span.kind, config)
        i = seen.get(bucket, 0)
        seen[bucket] = i + 1
        bp = plan.buckets[bucket]
        if i >= bp.perturb_limit:
            value = redacted(span)
            records.append(SpanRecord(span, value, value.output))
            continue
        eps = bp.per_instance_epsilon
        spec = registry.spec(span.kind)
        if span.kind.is_numeric:
            charge(ledger, bucket, "laplace", eps, i)
            value = perturb_numeric(span.numeric_value, spec.delta, eps, spec.bounds, gen,
                                    kind=span.kind, surface=span.surface)
            # clock fields stay two digits wide: 9:05, never 9:5
            width = 2 if span.kind in CLOCK_KINDS and len(span.surface) == 2 else 0
            rendered = format_number(value.output, span.surface, width)
        else:
            charge(ledger, bucket, "exponential", eps, i)
            value = perturb_textual(span, spec.pool, eps, gen)
            rendered = value.output
        records.append(SpanRecord(span, value, rendered))

    return SanitizedDocument(
        original_text=text,
        sanitized_text=_splice(text, records),
        records=records,
        plan=plan,
        ledger=ledger,
        epsilon_total=epsilon_total,
        rng_stream=stream,
    )


def sanitize_grid(
    text: str,
    grid: Optional[Sequence[float]],
    registry: SensitivityRegistry,
    config: PlanConfig = PlanConfig(),
    seed: int = 0,
    doc_key: str = "",
    extraction: Optional[ExtractionResult] = None,
) -> list[SanitizedDocument]:
    """One independent sanitization per budget level.

    Level ``i`` draws from stream ``derive_stream(doc_key, i)`` so levels do
    not share noise and results do not depend on processing order.
    """
    grid = epsilon_grid() if grid is None else list(grid)
    if not grid:
        raise ParameterError("epsilon grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ParameterError("epsilon grid must be strictly increasing")
    if extraction is None:
        extraction = extract(text, registry)
    return [
        sanitize(text, eps, registry, config, RandomSource(seed, derive_stream(doc_key, i)),
                 extraction=extraction)
        for i, eps in enumerate(grid)
    ]


def audit(doc: SanitizedDocument, doc_id: str = "") -> dict:
    plan = doc.plan
    return {
        "doc_id": doc_id,
        "epsilon_total": doc.epsilon_total,
        "epsilon_cnt": plan.epsilon_cnt,
        "epsilon_sub": plan.epsilon_sub,
        "buckets": [
            {
                "kind": b.bucket,
                "c": b.true_count,
                "c_tilde": b.noisy_count,
                "rho": b.share,
                "eps_tau": b.per_instance_epsilon,
                "perturb_limit": b.perturb_limit,
            }
            for b in plan.buckets.values()
        ],
        "records": [
            {
                "start": r.span.start,
                "end": r.span.end,
                "kind": r.span.kind.value,
                "original": r.span.surface,
                "output": r.text,
                "mechanism": r.value.mechanism,
                "eps": r.value.epsilon_used,
            }
            for r in doc.records
        ],
        "ledger_total": doc.ledger.total,
    }


def verify_audit(record: dict, collapse_text_bucket: bool = False) -> list[str]:
    """Recompute the budget bookkeeping of an audit record; return problems found."""
    problems = []
    eps_total = record["epsilon_total"]
    eps_cnt = record["epsilon_cnt"]
    eps_sub = record.get("epsilon_sub", eps_total - eps_cnt)
    buckets = {b["kind"]: b for b in record["buckets"]}
    if buckets:
        planned = math.fsum(b["c_tilde"] * b["eps_tau"] for b in buckets.values())
        if abs(planned - eps_sub) > BUDGET_TOLERANCE:
            problems.append(f"sum of c_tilde * eps_tau = {planned!r} != eps_sub {eps_sub!r}")
        total_rho = math.fsum(b["rho"] for b in buckets.values())
        for b in buckets.values():
            expect = eps_sub * b["rho"] / (b["c_tilde"] * total_rho)
            if abs(expect - b["eps_tau"]) > BUDGET_TOLERANCE:
                problems.append(f"{b['kind']}: eps_tau {b['eps_tau']!r} != recomputed {expect!r}")
            if b["perturb_limit"] != min(b["c"], math.floor(b["c_tilde"])):
                problems.append(f"{b['kind']}: perturb_limit inconsistent")
    spent = eps_cnt + math.fsum(r["eps"] for r in record["records"])
    if abs(spent - record["ledger_total"]) > BUDGET_TOLERANCE:
        problems.append(f"ledger_total {record['ledger_total']!r} != recomputed {spent!r}")
    if spent > eps_total + BUDGET_TOLERANCE:
        problems.append(f"spent {spent!r} exceeds epsilon_total {eps_total!r}")
    for r in record["records"]:
        kind = EntityKind(r["kind"])
        bucket = "TEXT" if collapse_text_bucket and kind.is_textual else kind.value
        b = buckets.get(bucket)
        if b is None:
            problems.append(f"record {r['start']}:{r['end']} has no bucket {bucket}")
        elif r["mechanism"] != "redacted" and abs(r["eps"] - b["eps_tau"]) > BUDGET_TOLERANCE:
            problems.append(f"record {r['start']}:{r['end']} eps differs from its bucket")
    return problems


def write_audit(records: Iterable[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_audit(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
