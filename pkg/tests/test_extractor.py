import pytest
from hypothesis import given, settings, strategies as st

from privdetect.entities import EntityKind, KindSpec, SensitivityRegistry
from privdetect.extractor import (
    AnnotationError,
    EntitySpan,
    extract,
    merge_annotations,
    nearest_pool_index,
)

K = EntityKind


def kinds_and_values(result):
    return [(s.kind, s.numeric_value if s.kind.is_numeric else s.surface) for s in result.spans]


def test_mixed_sentence(registry):
    text = "Alice paid $250 on March 14 at 09:45"
    res = extract(text, registry)
    assert kinds_and_values(res) == [
        (K.PERSON, "Alice"),
        (K.MONEY, 250.0),
        (K.DATE_DAY, 14.0),
        (K.TIME_HOUR, 9.0),
        (K.TIME_MINUTE, 45.0),
    ]
    assert res.density == pytest.approx(5 / len(text))
    assert res.n_numeric == 4 and res.n_textual == 1


def test_empty_text(registry):
    res = extract("", registry)
    assert res.spans == [] and res.density == 0
    assert all(res.count(k) == 0 for k in K)


def test_no_pools_no_matches():
    reg = SensitivityRegistry({K.CARDINAL: KindSpec(10.0, 0.3, None)})
    assert extract("hello world", reg).spans == []


@pytest.mark.parametrize(
    "text, expected",
    [
        ("we counted 1,250 birds", [(K.CARDINAL, 1250.0)]),
        ("it cost €3.50 today", [(K.MONEY, 3.5)]),
        ("due 2024-03-07 latest", [(K.DATE_DAY, 7.0)]),
        ("on 5th June we met", [(K.DATE_DAY, 5.0)]),
        ("version v2 and x7y", []),
        ("ratio 3:4:5 holds", []),  # colon runs that are not a valid time are skipped
    ],
)
def test_numeric_patterns(registry, text, expected):
    assert kinds_and_values(extract(text, registry)) == expected


def test_gazetteer_is_whole_word(registry):
    assert extract("Alicea and Oliverson", registry).spans == []


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet=st.sampled_from(list("Alice Oliver paid$,.:0123456789 March-")), max_size=80))
def test_spans_reconstruct_and_do_not_overlap(registry, text):
    res = extract(text, registry)
    prev_end = 0
    for s in res.spans:
        assert text[s.start:s.end] == s.surface
        assert s.start >= prev_end
        prev_end = s.end


def test_nearest_pool_index():
    pool = ("Bob", "Anna", "Zed", "Carl")
    assert nearest_pool_index(pool, "Anna") == 1
    assert nearest_pool_index(pool, "Zorbl") == 2
    assert nearest_pool_index(pool, "Ann") == 1


def test_supplied_span_not_in_pool(registry):
    text = "Zorbl arrived"
    res = merge_annotations(text, [{"start": 0, "end": 5, "kind": "PERSON"}], registry)
    (span,) = res.spans
    pool = registry.pool(K.PERSON)
    assert span.kind is K.PERSON and span.surface == "Zorbl"
    assert span.pool_index == nearest_pool_index(pool, "Zorbl")


def test_supplied_span_out_of_range(registry):
    with pytest.raises(AnnotationError):
        merge_annotations("short", [{"start": 2, "end": 9, "kind": "PERSON"}], registry)


def test_supplied_span_wins_overlap(registry):
    text = "Alice paid 40"
    res = merge_annotations(text, [{"start": 0, "end": 10, "kind": "ORG"}], registry)
    assert [(s.kind, s.surface) for s in res.spans] == [(K.ORG, "Alice paid"), (K.CARDINAL, "40")]


def test_supplied_spans_must_not_overlap(registry):
    spans = [{"start": 0, "end": 5, "kind": "PERSON"}, {"start": 3, "end": 8, "kind": "ORG"}]
    with pytest.raises(AnnotationError):
        merge_annotations("Alice paid 40", spans, registry)


def test_supplied_numeric_must_parse(registry):
    with pytest.raises(AnnotationError):
        merge_annotations("Alice paid", [EntitySpan(0, 5, K.MONEY, "Alice")], registry)


def test_empty_supplied_list_matches_extract(registry):
    text = "Alice paid $250 on March 14 at 09:45"
    assert merge_annotations(text, [], registry) == extract(text, registry)
