"""Corpus I/O, quality filtering and a synthetic human/machine corpus generator."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .entities import ConfigurationError, EntityKind, SensitivityRegistry, default_registry
from .extractor import ExtractionResult, extract, merge_annotations
from .mechanisms import RandomSource, derive_stream

MIN_CHARS = 100
MAX_CHARS = 15000
MIN_DENSITY = 0.003


class CorpusFormatError(ValueError):
    pass


@dataclass
class Document:
    doc_id: str
    text: str
    label: int
    source: str = ""
    entities: Optional[list[dict]] = None

    def to_json(self) -> dict:
        out = asdict(self)
        if out["entities"] is None:
            del out["entities"]
        return out


def read_corpus(path) -> list[Document]:
    docs = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                doc = Document(
                    doc_id=str(raw["doc_id"]),
                    text=raw["text"],
                    label=int(raw.get("label", 0)),
                    source=raw.get("source", ""),
                    entities=raw.get("entities"),
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorpusFormatError(f"{path}: line {lineno}: {exc}") from exc
            if doc.label not in (0, 1):
                raise CorpusFormatError(f"{path}: line {lineno}: label must be 0 or 1")
            if doc.doc_id in seen:
                raise CorpusFormatError(f"{path}: line {lineno}: duplicate doc_id {doc.doc_id!r}")
            seen.add(doc.doc_id)
            docs.append(doc)
    return docs


def write_corpus(docs: Iterable[Document], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def extract_document(doc: Document, registry: SensitivityRegistry) -> ExtractionResult:
    if doc.entities:
        return merge_annotations(doc.text, doc.entities, registry)
    return extract(doc.text, registry)


def rejection_reason(doc: Document, registry: SensitivityRegistry) -> Optional[str]:
    n = len(doc.text)
    if not MIN_CHARS <= n <= MAX_CHARS:
        return "length"
    ex = extract_document(doc, registry)
    if ex.n_numeric < 1:
        return "no_numeric_entity"
    if ex.n_textual < 1:
        return "no_textual_entity"
    if not ex.density > MIN_DENSITY:
        return "density"
    return None


def filter_corpus(docs: Sequence[Document], registry: Optional[SensitivityRegistry] = None):
    """Split ``docs`` into kept documents and ``(doc, reason)`` rejections.

    The reason is the first failed check: length, numeric entity, textual
    entity, then entity density.
    """
    registry = registry or default_registry()
    kept, rejected = [], []
    for doc in docs:
        reason = rejection_reason(doc, registry)
        if reason is None:
            kept.append(doc)
        else:
            rejected.append((doc, reason))
    return kept, rejected


# --- synthetic corpus ---------------------------------------------------

@dataclass(frozen=True)
class SourceConfig:
    """Sampling settings for one synthetic author population."""

    temperature: float = 1.0
    min_words: int = 90
    max_words: int = 170
    entity_rate: float = 0.2  # chance per word slot of starting an entity phrase
    value_temperature: Optional[float] = None  # temperature for entity values; defaults to temperature

    @property
    def entity_temperature(self) -> float:
        return self.temperature if self.value_temperature is None else self.value_temperature


# Machine text picks stereotyped entity values far more often than people do;
# the gap on ordinary words is kept small.
HUMAN_SOURCE = SourceConfig(temperature=1.05, value_temperature=2.0)
MACHINE_SOURCE = SourceConfig(temperature=0.95, value_temperature=0.2)
REFERENCE_SOURCE = SourceConfig(temperature=1.0)

_ONSETS = "b c d f g h j k l m n p r s t v w z br ch cl dr fl gr pl pr sh st th tr".split()
_VOWELS = "a e i o u ai ea ie oo ou".split()
_CODAS = ["", "", "", "n", "r", "s", "t", "l", "m", "nd", "st", "rk"]

_MONTH_NAMES = (
    "January February March April May June July August September October November December"
).split()

# (template, needs) - tokens in braces are filled by entity samplers
_TEMPLATES = (
    "{person} paid {money}",
    "on {month} {day}",
    "at {hour}:{minute}",
    "{person} from {gpe}",
    "{count} {word}",
    "{person} met {person} at {hour}:{minute}",
)


@dataclass
class SyntheticLanguage:
    """A fixed random trigram source shared by every population.

    Populations differ only by the temperatures applied when sampling from
    it, one for ordinary words and one for entity values. Each document also
    draws a sharpness multiplier for its word logits, independent of label,
    so the raw mean score varies a lot within each class.
    """

    seed: int = 0
    vocab_size: int = 600
    zipf_exponent: float = 1.1
    successors: int = 12
    boost: float = 3.0
    value_exponent: float = 2.0
    # Per-document multiplier on word logits, drawn uniformly from this range
    # for every population alike; entity values are not affected.
    topic_sharpness: tuple[float, float] = (0.5, 2.0)
    registry: SensitivityRegistry = field(default_factory=default_registry)

    def __post_init__(self):
        rng = RandomSource(self.seed, derive_stream("vocab")).generator()
        words: list[str] = []
        seen = set()
        while len(words) < self.vocab_size:
            n_syl = int(rng.integers(1, 4))
            w = "".join(
                _ONSETS[rng.integers(len(_ONSETS))] + _VOWELS[rng.integers(len(_VOWELS))]
                + _CODAS[rng.integers(len(_CODAS))]
                for _ in range(n_syl)
            )
            if w not in seen and len(w) > 1:
                seen.add(w)
                words.append(w)
        # "." behaves as a frequent word so sentences emerge from the chain
        self.words = ["."] + words
        ranks = np.arange(1, len(self.words) + 1, dtype=float)
        self.base_logits = -self.zipf_exponent * np.log(ranks)
        self._ctx_cache: dict[tuple[str, str], np.ndarray] = {}

        for kind in (EntityKind.PERSON, EntityKind.GPE):
            if len(self.registry.pool(kind)) < 2:
                raise ConfigurationError(f"{kind.value} pool too small for synthetic entities")
        self.value_priors = {
            "person": self._value_prior(list(self.registry.pool(EntityKind.PERSON)), "person"),
            "gpe": self._value_prior(list(self.registry.pool(EntityKind.GPE)), "gpe"),
            "month": self._value_prior(_MONTH_NAMES, "month"),
            "day": self._value_prior([str(d) for d in range(1, 29)], "day"),
            "hour": self._value_prior([f"{h:02d}" for h in range(24)], "hour"),
            "minute": self._value_prior([f"{m:02d}" for m in range(0, 60, 5)], "minute"),
            "money": self._value_prior(
                ["$" + f"{v:,}" for v in (5, 10, 12, 15, 20, 25, 30, 40, 45, 50, 60, 75, 80,
                                          99, 100, 120, 150, 200, 250, 300, 400, 450, 500,
                                          600, 750, 800, 900, 1000, 1200, 1500, 2000, 2500,
                                          3000, 5000, 7500, 10000)],
                "money",
            ),
            "count": self._value_prior([str(v) for v in range(2, 60)], "count"),
        }

    def _value_prior(self, values: list[str], name: str):
        # Zipf prior over a fixed random ordering of the values
        rng = RandomSource(self.seed, derive_stream("prior", name)).generator()
        order = [values[i] for i in rng.permutation(len(values))]
        logits = -self.value_exponent * np.log(np.arange(1, len(order) + 1, dtype=float))
        return order, logits

    def context_logits(self, u: str, v: str) -> np.ndarray:
        key = (u, v)
        logits = self._ctx_cache.get(key)
        if logits is None:
            rng = RandomSource(self.seed, derive_stream("ctx", u, v)).generator()
            logits = self.base_logits.copy()
            idx = rng.choice(len(self.words), size=self.successors, replace=False)
            logits[idx] += self.boost * rng.exponential(1.0, size=self.successors)
            self._ctx_cache[key] = logits
        return logits

    @staticmethod
    def _sample(logits: np.ndarray, temperature: float, gen: np.random.Generator) -> int:
        z = logits / temperature
        p = np.exp(z - z.max())
        p /= p.sum()
        return int(gen.choice(len(p), p=p))

    def _value(self, name: str, temperature: float, gen) -> str:
        values, logits = self.value_priors[name]
        return values[self._sample(logits, temperature, gen)]

    def _phrase(self, template: str, source: SourceConfig, gen, sharpness: float = 1.0) -> str:
        out = template
        while "{" in out:
            start = out.index("{")
            end = out.index("}", start)
            name = out[start + 1:end]
            if name == "word":
                value = self.words[1 + self._sample(sharpness * self.base_logits[1:], source.temperature, gen)]
            else:
                value = self._value(name, source.entity_temperature, gen)
            out = out[:start] + value + out[end + 1:]
        return out

    def generate(self, source: SourceConfig, gen: np.random.Generator) -> str:
        n_words = int(gen.integers(source.min_words, source.max_words + 1))
        lo, hi = self.topic_sharpness
        sharpness = float(gen.uniform(lo, hi)) if hi > lo else lo
        pieces: list[str] = []
        context = [".", "."]
        # first phrase carries both a numeric and a textual entity
        pending = [_TEMPLATES[0]]
        while len(pieces) < n_words or pending:
            if pending or gen.random() < source.entity_rate:
                template = pending.pop() if pending else _TEMPLATES[int(gen.integers(len(_TEMPLATES)))]
                phrase = self._phrase(template, source, gen, sharpness)
                pieces.append(phrase)
                toks = phrase.lower().replace(":", " : ").replace("$", "$ ").split()
                context = (context + toks)[-2:]
                continue
            idx = self._sample(sharpness * self.context_logits(*context), source.temperature, gen)
            word = self.words[idx]
            pieces.append(word)
            context = [context[1], word]
        text = " ".join(pieces).replace(" .", ".")
        return text.lstrip(". ")


def generate_synthetic(
    n_per_class: int,
    human_source_config: SourceConfig = HUMAN_SOURCE,
    machine_source_config: SourceConfig = MACHINE_SOURCE,
    seed: int = 0,
    language: Optional[SyntheticLanguage] = None,
) -> list[Document]:
    """Balanced corpus; label 0 from the human source, 1 from the machine source."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be at least 1")
    language = language or SyntheticLanguage(seed)
    registry = language.registry
    docs = []
    for label, name, src in ((0, "human", human_source_config), (1, "machine", machine_source_config)):
        for i in range(n_per_class):
            doc_id = f"{name}-{i:05d}"
            attempt = 0
            while True:
                gen = RandomSource(seed, derive_stream("doc", doc_id, attempt)).generator()
                text = language.generate(src, gen)
                doc = Document(doc_id, text, label, f"synthetic:{name}:T={src.temperature}")
                if rejection_reason(doc, registry) is None:
                    break
                attempt += 1
                if attempt > 50:
                    raise ConfigurationError(
                        f"could not generate a document passing the corpus filter for {doc_id}"
                    )
            docs.append(doc)
    return docs


def generate_reference(n_docs: int, seed: int = 0, source: SourceConfig = REFERENCE_SOURCE,
                       language: Optional[SyntheticLanguage] = None) -> list[str]:
    """Unlabelled text from the same language at neutral temperature, for fitting a scorer."""
    language = language or SyntheticLanguage(seed)
    return [
        language.generate(source, RandomSource(seed, derive_stream("reference", i)).generator())
        for i in range(n_docs)
    ]
