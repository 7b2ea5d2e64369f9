"""Entity kinds, DP sensitivities, allocation weights and replacement pools."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional


class ConfigurationError(ValueError):
    """Raised for malformed or inconsistent registry configuration."""


class EntityKind(str, enum.Enum):
    CARDINAL = "CARDINAL"
    MONEY = "MONEY"
    DATE_DAY = "DATE_DAY"
    TIME_HOUR = "TIME_HOUR"
    TIME_MINUTE = "TIME_MINUTE"
    PERSON = "PERSON"
    GPE = "GPE"
    ORG = "ORG"
    PRODUCT = "PRODUCT"
    EVENT = "EVENT"
    WORK_OF_ART = "WORK_OF_ART"
    FAC = "FAC"
    LAW = "LAW"

    @property
    def is_numeric(self) -> bool:
        return self in NUMERIC_KINDS

    @property
    def is_textual(self) -> bool:
        return not self.is_numeric


NUMERIC_KINDS = frozenset(
    {
        EntityKind.CARDINAL,
        EntityKind.MONEY,
        EntityKind.DATE_DAY,
        EntityKind.TIME_HOUR,
        EntityKind.TIME_MINUTE,
    }
)
TEXTUAL_KINDS = tuple(k for k in EntityKind if k not in NUMERIC_KINDS)

# Bucket name used when every textual kind shares one allocation bucket.
TEXT_BUCKET = "TEXT"
TEXT_BUCKET_WEIGHT = 0.25

WEIGHT_MODES = ("plain", "count_scaled")


@dataclass(frozen=True)
class KindSpec:
    """Static DP parameters for one entity kind.

    ``bounds`` is a closed interval; either end may be ``None`` for an open side.
    ``pool`` is empty for numeric kinds.
    """

    delta: float
    base_weight: float
    bounds: Optional[tuple[Optional[float], Optional[float]]] = None
    pool: tuple[str, ...] = ()


@dataclass(frozen=True)
class SensitivityRegistry:
    kinds: Mapping[EntityKind, KindSpec] = field(default_factory=dict)

    def __post_init__(self):
        for kind, spec in self.kinds.items():
            if not isinstance(kind, EntityKind):
                raise ConfigurationError(f"registry key {kind!r} is not an EntityKind")
            if spec.delta <= 0 or spec.base_weight <= 0:
                raise ConfigurationError(
                    f"{kind.value}: delta and base_weight must be positive"
                )
            if kind.is_textual:
                if len(spec.pool) < 2:
                    raise ConfigurationError(
                        f"{kind.value}: candidate pool needs at least 2 entries"
                    )
                if spec.delta != len(spec.pool):
                    raise ConfigurationError(
                        f"{kind.value}: delta {spec.delta} != pool size {len(spec.pool)}"
                    )
                if len(set(spec.pool)) != len(spec.pool):
                    raise ConfigurationError(f"{kind.value}: duplicate pool entries")

    def spec(self, kind: EntityKind) -> KindSpec:
        try:
            return self.kinds[EntityKind(kind)]
        except (KeyError, ValueError):
            raise ConfigurationError(f"unknown entity kind {kind!r}") from None

    def __contains__(self, kind) -> bool:
        return kind in self.kinds

    def delta(self, kind: EntityKind) -> float:
        return self.spec(kind).delta

    def base_weight(self, kind: EntityKind) -> float:
        return self.spec(kind).base_weight

    def bounds(self, kind: EntityKind):
        return self.spec(kind).bounds

    def pool(self, kind: EntityKind) -> tuple[str, ...]:
        return self.spec(kind).pool

    def max_pool_size(self) -> int:
        sizes = [len(s.pool) for k, s in self.kinds.items() if k.is_textual]
        return max(sizes) if sizes else 0


_POOL_FILES = {kind: f"{kind.value.lower()}.txt" for kind in TEXTUAL_KINDS}

_NUMERIC_DEFAULTS = {
    EntityKind.CARDINAL: KindSpec(10000.0, 0.3, (0, None)),
    EntityKind.MONEY: KindSpec(10000.0, 0.3, (0, None)),
    EntityKind.DATE_DAY: KindSpec(29.0, 0.3, (1, 31)),
    EntityKind.TIME_HOUR: KindSpec(23.0, 0.3, (0, 23)),
    EntityKind.TIME_MINUTE: KindSpec(59.0, 0.3, (0, 59)),
}

_TEXTUAL_BASE_WEIGHT = 0.25


def read_pool(path) -> tuple[str, ...]:
    """Read a UTF-8 newline-delimited word list, skipping blank lines."""
    text = Path(path).read_text(encoding="utf-8")
    return tuple(line.strip() for line in text.splitlines() if line.strip())


def _bundled_pool(kind: EntityKind) -> tuple[str, ...]:
    ref = resources.files("privdetect") / "data" / "pools" / _POOL_FILES[kind]
    text = ref.read_text(encoding="utf-8")
    return tuple(line.strip() for line in text.splitlines() if line.strip())


def default_registry() -> SensitivityRegistry:
    kinds: dict[EntityKind, KindSpec] = dict(_NUMERIC_DEFAULTS)
    for kind in TEXTUAL_KINDS:
        pool = _bundled_pool(kind)
        kinds[kind] = KindSpec(float(len(pool)), _TEXTUAL_BASE_WEIGHT, None, pool)
    return SensitivityRegistry(kinds)


def weight(kind, registry: SensitivityRegistry, count: int = 0, mode: str = "plain") -> float:
    """Allocation weight ``w_base * ln(delta + 1)``.

    In ``"count_scaled"`` mode the weight is additionally scaled by ``count + 1``.
    The allocator already multiplies the share by the noisy count, so the
    default ``"plain"`` mode leaves the count out.
    """
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    if mode not in WEIGHT_MODES:
        raise ConfigurationError(f"unknown weight mode {mode!r}")
    if kind == TEXT_BUCKET:
        w = TEXT_BUCKET_WEIGHT * math.log(registry.max_pool_size() + 1)
    else:
        spec = registry.spec(kind)
        w = spec.base_weight * math.log(spec.delta + 1)
    if mode == "count_scaled":
        w *= count + 1
    return w


def bucket_delta(bucket, registry: SensitivityRegistry) -> float:
    if bucket == TEXT_BUCKET:
        return float(registry.max_pool_size())
    return registry.delta(bucket)


def save_registry(registry: SensitivityRegistry, path) -> None:
    """Write the registry as JSON; pools go to ``<kind>.txt`` beside it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = {}
    for kind, spec in registry.kinds.items():
        entry = {
            "delta": spec.delta,
            "base_weight": spec.base_weight,
            "bounds": list(spec.bounds) if spec.bounds is not None else None,
            "pool_path": None,
        }
        if kind.is_textual:
            pool_name = f"{path.stem}.{kind.value.lower()}.txt"
            (path.parent / pool_name).write_text("\n".join(spec.pool) + "\n", encoding="utf-8")
            entry["pool_path"] = pool_name
        out[kind.value] = entry
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_registry(path) -> SensitivityRegistry:
    """Load a registry JSON file.

    Kinds absent from the file keep their defaults. ``pool_path`` is resolved
    relative to the JSON file; textual ``delta`` may be omitted and is then
    taken from the pool size.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: expected a JSON object keyed by kind")

    kinds = dict(default_registry().kinds)
    for tag, entry in raw.items():
        try:
            kind = EntityKind(tag)
        except ValueError:
            raise ConfigurationError(f"{path}: unknown entity kind {tag!r}") from None
        base = kinds[kind]
        pool = base.pool
        if entry.get("pool_path"):
            pool = read_pool(path.parent / entry["pool_path"])
        if kind.is_numeric:
            pool = ()
        delta = entry.get("delta")
        if delta is None:
            delta = float(len(pool)) if kind.is_textual else base.delta
        bounds = entry.get("bounds", base.bounds)
        kinds[kind] = KindSpec(
            delta=float(delta),
            base_weight=float(entry.get("base_weight", base.base_weight)),
            bounds=tuple(bounds) if bounds is not None else None,
            pool=tuple(pool),
        )
    return SensitivityRegistry(kinds)
