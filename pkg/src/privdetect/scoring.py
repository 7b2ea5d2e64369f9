"""Word-level trigram proxy model with add-k smoothing.

Any object with a ``score(text, metric) -> TokenScores`` method can stand in
for :class:`TrigramScorer` in feature extraction.
"""

from __future__ import annotations

import json
import math
import re
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

METRICS = ("log_likelihood", "rank", "entropy")
METRIC_ALIASES = {"ll": "log_likelihood", "rank": "rank", "entropy": "entropy"}

BOS = "<s>"
UNK = "<unk>"

_TOKEN_RE = re.compile(r"[^\W\d_]+(?:'[^\W\d_]+)?|\d+(?:[.,]\d+)*|[^\w\s]|_")


class DegenerateInputError(ValueError):
    pass


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def canonical_metric(metric: str) -> str:
    metric = METRIC_ALIASES.get(metric, metric)
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    return metric


@dataclass
class TokenScores:
    tokens: list[str]
    scores: np.ndarray

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        if len(self.tokens) != len(self.scores):
            raise ValueError("tokens and scores differ in length")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("token scores must be finite")

    def mean(self) -> float:
        return float(self.scores.mean())


class _Context:
    __slots__ = ("total", "counts", "sorted_counts", "entropy")

    def __init__(self, counts: dict[str, int], vocab_size: int, k: float):
        self.counts = counts
        self.total = sum(counts.values())
        self.sorted_counts = np.sort(np.fromiter(counts.values(), dtype=float, count=len(counts)))
        z = self.total + k * vocab_size
        seen = (self.sorted_counts + k) / z
        unseen = vocab_size - len(counts)
        h = -float(np.sum(seen * np.log(seen)))
        if unseen:
            q = k / z
            h -= unseen * q * math.log(q)
        self.entropy = h


class TrigramScorer:
    """Trigram LM, ``p(w | u, v) = (c(u, v, w) + k) / (c(u, v) + k V)``.

    Out-of-vocabulary tokens map to ``<unk>``, which is always part of the
    vocabulary. Contexts never seen in training give the uniform
    distribution over the vocabulary.
    """

    def __init__(self, k: float = 0.1):
        if k <= 0:
            raise ValueError("add-k constant must be positive")
        self.k = k
        self.vocab: set[str] = {UNK}
        self._trigrams: dict[tuple[str, str], dict[str, int]] = {}
        self._cache: dict[tuple[str, str], _Context] = {}

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def fit(self, texts: Iterable[str]) -> "TrigramScorer":
        docs = [tokenize(t) for t in texts]
        vocab = {UNK}
        for toks in docs:
            vocab.update(toks)
        trigrams: dict[tuple[str, str], dict[str, int]] = defaultdict(dict)
        for toks in docs:
            padded = [BOS, BOS] + toks
            for u, v, w in zip(padded, padded[1:], padded[2:]):
                row = trigrams[(u, v)]
                row[w] = row.get(w, 0) + 1
        self.vocab = vocab
        self._trigrams = dict(trigrams)
        self._cache = {}
        return self

    def _context(self, u: str, v: str) -> _Context:
        ctx = self._cache.get((u, v))
        if ctx is None:
            ctx = _Context(self._trigrams.get((u, v), {}), self.vocab_size, self.k)
            self._cache[(u, v)] = ctx
        return ctx

    def _map(self, tok: str) -> str:
        return tok if tok in self.vocab else UNK

    def token_scores(self, tokens: list[str], metric: str) -> np.ndarray:
        metric = canonical_metric(metric)
        V = self.vocab_size
        k = self.k
        mapped = [BOS, BOS] + [self._map(t) for t in tokens]
        out = np.empty(len(tokens))
        for i in range(len(tokens)):
            u, v, w = mapped[i], mapped[i + 1], mapped[i + 2]
            ctx = self._context(u, v)
            c = ctx.counts.get(w, 0)
            if metric == "log_likelihood":
                out[i] = math.log((c + k) / (ctx.total + k * V))
            elif metric == "entropy":
                out[i] = ctx.entropy
            else:
                sc = ctx.sorted_counts
                greater = len(sc) - int(np.searchsorted(sc, c, side="right"))
                if c:
                    ties = int(np.searchsorted(sc, c, side="right") - np.searchsorted(sc, c, side="left"))
                else:
                    ties = V - len(sc)
                out[i] = -(greater + (ties + 1) / 2.0)
        return out

    def score(self, text: str, metric: str = "log_likelihood") -> TokenScores:
        tokens = tokenize(text)
        if not tokens:
            raise DegenerateInputError("text has no tokens")
        return TokenScores(tokens, self.token_scores(tokens, metric))

    def save(self, path) -> None:
        rows = [[u, v, counts] for (u, v), counts in sorted(self._trigrams.items())]
        payload = {"k": self.k, "vocab": sorted(self.vocab), "trigrams": rows}
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TrigramScorer":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        scorer = cls(payload["k"])
        scorer.vocab = set(payload["vocab"])
        scorer._trigrams = {(u, v): dict(c) for u, v, c in payload["trigrams"]}
        return scorer


def score(text: str, scorer, metric: str = "log_likelihood") -> TokenScores:
    """Score ``text`` with any scorer that implements ``score(text, metric)``."""
    result = scorer.score(text, canonical_metric(metric))
    if len(result.tokens) == 0:
        raise DegenerateInputError("text has no tokens")
    return result
