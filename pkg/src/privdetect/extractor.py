"""Rule-based entity detection: regexes for numbers, gazetteers for names."""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .entities import EntityKind, SensitivityRegistry


class AnnotationError(ValueError):
    """An externally supplied span does not fit the text it annotates."""


@dataclass(frozen=True)
class EntitySpan:
    start: int
    end: int
    kind: EntityKind
    surface: str
    numeric_value: Optional[float] = None
    pool_index: Optional[int] = None


@dataclass
class ExtractionResult:
    spans: list[EntitySpan]
    counts: dict[EntityKind, int] = field(default_factory=dict)
    density: float = 0.0

    @classmethod
    def from_spans(cls, spans: Iterable[EntitySpan], text_length: int) -> "ExtractionResult":
        spans = sorted(spans, key=lambda s: s.start)
        counts: dict[EntityKind, int] = {}
        for s in spans:
            counts[s.kind] = counts.get(s.kind, 0) + 1
        return cls(spans, counts, len(spans) / max(1, text_length))

    def count(self, kind: EntityKind) -> int:
        return self.counts.get(kind, 0)

    @property
    def n_numeric(self) -> int:
        return sum(1 for s in self.spans if s.kind.is_numeric)

    @property
    def n_textual(self) -> int:
        return sum(1 for s in self.spans if s.kind.is_textual)


MONTHS = (
    "January February March April May June July August September October "
    "November December Jan Feb Mar Apr Jun Jul Aug Sep Sept Oct Nov Dec"
).split()
_MONTH = "(?:" + "|".join(sorted(MONTHS, key=len, reverse=True)) + ")"

_NUM = r"\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?"
_MONEY_RE = re.compile(r"[$€£]\s?(?:" + _NUM + r")(?![\d\w])")
_TIME_RE = re.compile(r"(?<![\w:.])([01]?\d|2[0-3]):([0-5]\d)(?![\w:]|\.\d)")
_DATE_MD_RE = re.compile(r"\b" + _MONTH + r"\.?\s+(\d{1,2})(?:st|nd|rd|th)?(?![\w:]|[.,]\d)")
_DATE_DM_RE = re.compile(r"(?<![\w.,$€£:])(\d{1,2})(?:st|nd|rd|th)?\s+" + _MONTH + r"\b")
_DATE_ISO_RE = re.compile(r"(?<![\w-])\d{4}-\d{2}-(\d{2})(?![\w-])")
_CARDINAL_RE = re.compile(r"(?<![\w.,$€£:\-])(?:" + _NUM + r")(?![\w:]|[.,]\d)")

# Lower value = higher priority on equal-length overlaps at the same start.
_PRIORITY = {
    EntityKind.MONEY: 0,
    EntityKind.TIME_HOUR: 1,
    EntityKind.DATE_DAY: 2,
    EntityKind.CARDINAL: 3,
}
_TEXTUAL_PRIORITY = 4


def parse_number(surface: str) -> float:
    digits = surface.lstrip("$€£").strip().replace(",", "")
    return float(digits)


@dataclass
class _Candidate:
    # Region used for overlap resolution; may be wider than the emitted spans
    # (a "March 14" match only perturbs the day digits).
    start: int
    end: int
    priority: int
    order: int
    spans: list[EntitySpan]


def _numeric_span(text: str, start: int, end: int, kind: EntityKind) -> EntitySpan:
    surface = text[start:end]
    return EntitySpan(start, end, kind, surface, numeric_value=parse_number(surface))


def _numeric_candidates(text: str) -> list[_Candidate]:
    out = []
    for m in _MONEY_RE.finditer(text):
        span = _numeric_span(text, m.start(), m.end(), EntityKind.MONEY)
        out.append(_Candidate(m.start(), m.end(), _PRIORITY[EntityKind.MONEY], 0, [span]))
    for m in _TIME_RE.finditer(text):
        spans = [
            _numeric_span(text, m.start(1), m.end(1), EntityKind.TIME_HOUR),
            _numeric_span(text, m.start(2), m.end(2), EntityKind.TIME_MINUTE),
        ]
        out.append(_Candidate(m.start(), m.end(), _PRIORITY[EntityKind.TIME_HOUR], 0, spans))
    for regex in (_DATE_MD_RE, _DATE_DM_RE, _DATE_ISO_RE):
        for m in regex.finditer(text):
            day = int(m.group(1))
            if not 1 <= day <= 31:
                continue
            span = _numeric_span(text, m.start(1), m.end(1), EntityKind.DATE_DAY)
            out.append(_Candidate(m.start(), m.end(), _PRIORITY[EntityKind.DATE_DAY], 0, [span]))
    for m in _CARDINAL_RE.finditer(text):
        span = _numeric_span(text, m.start(), m.end(), EntityKind.CARDINAL)
        out.append(_Candidate(m.start(), m.end(), _PRIORITY[EntityKind.CARDINAL], 0, [span]))
    return out


_GAZETTEER_CACHE: dict[tuple[str, ...], re.Pattern] = {}


def _gazetteer(pool: tuple[str, ...]) -> re.Pattern:
    pattern = _GAZETTEER_CACHE.get(pool)
    if pattern is None:
        alternatives = "|".join(re.escape(p) for p in sorted(pool, key=len, reverse=True))
        pattern = re.compile(r"(?<!\w)(?:" + alternatives + r")(?!\w)")
        _GAZETTEER_CACHE[pool] = pattern
    return pattern


def _textual_candidates(text: str, registry: SensitivityRegistry) -> list[_Candidate]:
    out = []
    for order, (kind, spec) in enumerate(registry.kinds.items()):
        if kind.is_numeric or not spec.pool:
            continue
        index = {entry: i for i, entry in enumerate(spec.pool)}
        for m in _gazetteer(spec.pool).finditer(text):
            span = EntitySpan(m.start(), m.end(), kind, m.group(0), pool_index=index[m.group(0)])
            out.append(_Candidate(m.start(), m.end(), _TEXTUAL_PRIORITY, order, [span]))
    return out


def _resolve(candidates: list[_Candidate], taken: Optional[list[tuple[int, int]]] = None):
    """Greedy selection: longest region first, then leftmost, then kind priority."""
    candidates.sort(key=lambda c: (-(c.end - c.start), c.start, c.priority, c.order))
    taken = list(taken or [])
    chosen = []
    for cand in candidates:
        if any(cand.start < e and s < cand.end for s, e in taken):
            continue
        taken.append((cand.start, cand.end))
        chosen.extend(cand.spans)
    return chosen


def extract(text: str, registry: SensitivityRegistry) -> ExtractionResult:
    candidates = _numeric_candidates(text) + _textual_candidates(text, registry)
    return ExtractionResult.from_spans(_resolve(candidates), len(text))


def nearest_pool_index(pool: tuple[str, ...], value: str) -> int:
    """Index of the lexicographically nearest pool entry.

    Neighbours in sorted order are compared by common-prefix length; ties go
    to the entry sorting after ``value``.
    """
    if value in pool:
        return pool.index(value)
    ordered = sorted(pool)
    pos = bisect.bisect_left(ordered, value)
    neighbours = [ordered[i] for i in (pos, pos - 1) if 0 <= i < len(ordered)]

    def common_prefix(a: str) -> int:
        n = 0
        for x, y in zip(a, value):
            if x != y:
                break
            n += 1
        return n

    best = max(neighbours, key=common_prefix)
    return pool.index(best)


def _annotation_span(text: str, raw, registry: SensitivityRegistry) -> EntitySpan:
    if isinstance(raw, EntitySpan):
        start, end, kind = raw.start, raw.end, raw.kind
        surface = raw.surface
    else:
        start, end, kind = raw["start"], raw["end"], raw["kind"]
        surface = raw.get("surface")
    try:
        kind = EntityKind(kind)
    except ValueError:
        raise AnnotationError(f"span {start}:{end} has unknown kind {kind!r}") from None
    if not (isinstance(start, int) and isinstance(end, int)) or not 0 <= start < end <= len(text):
        raise AnnotationError(
            f"span {start}:{end} ({kind.value}) is out of range for text of length {len(text)}"
        )
    if surface is not None and surface != text[start:end]:
        raise AnnotationError(
            f"span {start}:{end} ({kind.value}) surface {surface!r} != text {text[start:end]!r}"
        )
    surface = text[start:end]
    if kind.is_numeric:
        try:
            value = parse_number(surface)
        except ValueError:
            raise AnnotationError(
                f"span {start}:{end} ({kind.value}) surface {surface!r} is not a number"
            ) from None
        return EntitySpan(start, end, kind, surface, numeric_value=value)
    pool = registry.pool(kind)
    return EntitySpan(start, end, kind, surface, pool_index=nearest_pool_index(pool, surface))


def merge_annotations(text: str, spans, registry: SensitivityRegistry) -> ExtractionResult:
    """Combine supplied annotations with rule matches; supplied spans win overlaps."""
    supplied = sorted((_annotation_span(text, s, registry) for s in spans), key=lambda s: s.start)
    for a, b in zip(supplied, supplied[1:]):
        if b.start < a.end:
            raise AnnotationError(
                f"spans {a.start}:{a.end} and {b.start}:{b.end} overlap"
            )
    candidates = _numeric_candidates(text) + _textual_candidates(text, registry)
    taken = [(s.start, s.end) for s in supplied]
    rule_spans = _resolve(candidates, taken)
    return ExtractionResult.from_spans(supplied + rule_spans, len(text))
