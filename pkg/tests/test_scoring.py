import math

import numpy as np
import pytest

from privdetect.scoring import DegenerateInputError, TrigramScorer, canonical_metric, score, tokenize


def test_tokenize():
    assert tokenize("Alice paid $1,250 at 09:45.") == ["alice", "paid", "$", "1,250", "at", "09", ":", "45", "."]


def test_metric_aliases():
    assert canonical_metric("ll") == "log_likelihood"
    with pytest.raises(ValueError):
        canonical_metric("perplexity")


def test_probabilities_normalise(small_scorer):
    # sum over the whole vocabulary of p(w | u, v) is 1 for a seen and an unseen context
    vocab = sorted(small_scorer.vocab)
    for ctx in (("alice", "paid"), ("zzz", "qqq")):
        total = sum(math.exp(small_scorer.token_scores([ctx[0], ctx[1], w], "ll")[2]) for w in vocab)
        assert total == pytest.approx(1.0, rel=1e-9)


def test_single_token(small_scorer):
    assert len(score("lamp", small_scorer).scores) == 1


def test_empty_text_rejected(small_scorer):
    with pytest.raises(DegenerateInputError):
        score("   ", small_scorer)


def test_training_text_beats_random_tokens(small_scorer):
    gen = np.random.default_rng(0)
    vocab = sorted(small_scorer.vocab)
    seen = score("Oliver met Alice at 10:30 and they walked to the market.", small_scorer).mean()
    rand = np.mean([
        score(" ".join(gen.choice(vocab, 12)), small_scorer).mean() for _ in range(100)
    ])
    assert seen > rand


def test_entropy_of_near_point_mass():
    scorer = TrigramScorer(0.1).fit(["a b c"] * 2000)
    h = score("a b c", scorer, "entropy").scores[2]
    assert 0 <= h < 0.01


def test_entropy_matches_direct_sum(small_scorer):
    vocab = sorted(small_scorer.vocab)
    u, v = "alice", "paid"
    probs = np.exp([small_scorer.token_scores([u, v, w], "ll")[2] for w in vocab])
    expect = -float(np.sum(probs * np.log(probs)))
    assert small_scorer.token_scores([u, v, "x"], "entropy")[2] == pytest.approx(expect, rel=1e-9)


def test_rank_is_negated_midrank(small_scorer):
    # "paid" is the only continuation of (<s>, alice) seen in training
    assert small_scorer.token_scores(["alice", "paid"], "rank")[1] == -1.0
    # an unseen continuation ties with every other unseen word
    r = small_scorer.token_scores(["alice", "lamp"], "rank")[1]
    n_unseen = small_scorer.vocab_size - 1
    assert r == -(1 + (n_unseen + 1) / 2)


def test_save_load(small_scorer, tmp_path):
    small_scorer.save(tmp_path / "lm.json")
    again = TrigramScorer.load(tmp_path / "lm.json")
    text = "Alice paid $9 for a red lamp"
    for metric in ("ll", "rank", "entropy"):
        np.testing.assert_array_equal(score(text, again, metric).scores, score(text, small_scorer, metric).scores)


def test_k_must_be_positive():
    with pytest.raises(ValueError):
        TrigramScorer(0)
