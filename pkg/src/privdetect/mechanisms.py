"""Laplace and exponential mechanisms, with validity post-processing."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from decimal import Decimal
from typing import Optional, Union

import numpy as np

from .entities import EntityKind
from .extractor import EntitySpan


class ParameterError(ValueError):
    pass


class BudgetError(ValueError):
    pass


@dataclass(frozen=True)
class RandomSource:
    """Seed plus stream id; each pair yields an independent, reproducible stream."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence([self.seed & (2**64 - 1), self.stream_id & (2**64 - 1)])
        return np.random.Generator(np.random.PCG64(ss))


def derive_stream(*keys) -> int:
    """Stable 64-bit stream id from arbitrary keys (independent of PYTHONHASHSEED)."""
    h = hashlib.blake2b(repr(keys).encode("utf-8"), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RandomSource):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RandomSource or numpy Generator, got {type(rng).__name__}")


@dataclass(frozen=True)
class PerturbedValue:
    original: Union[float, str]
    output: Union[float, str]
    kind: EntityKind
    epsilon_used: float
    mechanism: str  # "laplace" | "exponential" | "redacted"


def laplace_from_uniform(u, scale):
    """Inverse CDF of Laplace(0, scale) evaluated at ``u`` in [-1/2, 1/2)."""
    u = np.asarray(u, dtype=float)
    tail = np.maximum(1.0 - 2.0 * np.abs(u), np.finfo(float).tiny)
    return -scale * np.sign(u) * np.log(tail)


def laplace_sample(scale: float, rng, size=None):
    if not scale > 0:
        raise ParameterError(f"Laplace scale must be positive, got {scale}")
    u = as_generator(rng).random(size) - 0.5
    out = laplace_from_uniform(u, scale)
    return float(out) if size is None else out


def _decimals(value: float, surface: Optional[str]) -> int:
    if surface is not None:
        digits = surface.lstrip("$€£").strip().replace(",", "")
        return len(digits.split(".", 1)[1]) if "." in digits else 0
    exponent = Decimal(repr(float(value))).normalize().as_tuple().exponent
    return max(0, -exponent)


def clamp(value: float, bounds) -> float:
    if bounds is None:
        return value
    lo, hi = bounds
    if lo is not None and value < lo:
        value = lo
    if hi is not None and value > hi:
        value = hi
    return value


def perturb_numeric(
    value: float,
    delta: float,
    epsilon: float,
    bounds=None,
    rng=None,
    kind: EntityKind = EntityKind.CARDINAL,
    surface: Optional[str] = None,
) -> PerturbedValue:
    """Add Laplace(delta/epsilon) noise, round to the original precision and clamp.

    ``surface`` (the source text of the value) fixes the number of decimals;
    without it the precision is read off ``value``.
    """
    if not epsilon > 0:
        raise BudgetError(f"epsilon must be positive, got {epsilon}")
    if not delta > 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    noisy = value + laplace_sample(delta / epsilon, rng)
    ndigits = _decimals(value, surface)
    out = round(noisy, ndigits) if ndigits else float(round(noisy))
    out = float(clamp(out, bounds))
    return PerturbedValue(value, out, kind, epsilon, "laplace")


def keep_probability(epsilon: float, pool_size: int) -> float:
    """P(output == input) for the exponential mechanism with 0/1 utility."""
    if pool_size < 2:
        raise ParameterError(f"pool needs at least 2 candidates, got {pool_size}")
    if epsilon < 0:
        raise BudgetError(f"epsilon must be non-negative, got {epsilon}")
    # e^(e/2) / (e^(e/2) + n - 1), rewritten to avoid overflow for large epsilon
    return 1.0 / (1.0 + (pool_size - 1) * math.exp(-epsilon / 2.0))


def exponential_choice(index: int, pool_size: int, epsilon: float, gen: np.random.Generator) -> int:
    """Sample a pool index: keep ``index`` w.p. P_keep, else uniform over the rest."""
    if gen.random() < keep_probability(epsilon, pool_size):
        return index
    j = int(gen.integers(pool_size - 1))
    return j if j < index else j + 1


def perturb_textual(span: EntitySpan, pool, epsilon: float, rng) -> PerturbedValue:
    if not span.kind.is_textual:
        raise ParameterError(f"{span.kind.value} is not a textual kind")
    if len(pool) < 2:
        raise ParameterError(f"pool for {span.kind.value} has fewer than 2 entries")
    if epsilon < 0:
        raise BudgetError(f"epsilon must be non-negative, got {epsilon}")
    index = span.pool_index if span.pool_index is not None else pool.index(span.surface)
    choice = exponential_choice(index, len(pool), epsilon, as_generator(rng))
    output = span.surface if choice == index else pool[choice]
    return PerturbedValue(span.surface, output, span.kind, epsilon, "exponential")


def redacted(span: EntitySpan) -> PerturbedValue:
    original = span.numeric_value if span.kind.is_numeric else span.surface
    return PerturbedValue(original, f"[{span.kind.value}]", span.kind, 0.0, "redacted")
