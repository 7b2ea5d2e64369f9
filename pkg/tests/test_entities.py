import json

import pytest

from privdetect.entities import (
    ConfigurationError,
    EntityKind,
    KindSpec,
    SensitivityRegistry,
    TEXT_BUCKET,
    load_registry,
    save_registry,
    weight,
)

# 0.3 * ln(10001), evaluated with mpmath at 30 digits
CARDINAL_WEIGHT = 2.76313211009295481332


def test_default_sensitivities(registry):
    assert registry.delta(EntityKind.DATE_DAY) == 29
    assert registry.delta(EntityKind.TIME_MINUTE) == 59
    assert registry.delta(EntityKind.TIME_HOUR) == 23
    assert registry.delta(EntityKind.PERSON) == len(registry.pool(EntityKind.PERSON))


def test_weight_modes(registry):
    assert weight(EntityKind.CARDINAL, registry) == pytest.approx(CARDINAL_WEIGHT, rel=1e-12)
    assert weight(EntityKind.CARDINAL, registry, count=1, mode="count_scaled") == pytest.approx(
        2 * CARDINAL_WEIGHT, rel=1e-12
    )
    # spec mode ignores the count
    assert weight(EntityKind.CARDINAL, registry, count=7) == weight(EntityKind.CARDINAL, registry)


def test_text_bucket_weight_uses_largest_pool(registry):
    import math

    assert weight(TEXT_BUCKET, registry) == pytest.approx(0.25 * math.log(registry.max_pool_size() + 1))


def test_weight_rejects_bad_mode(registry):
    with pytest.raises(ConfigurationError):
        weight(EntityKind.CARDINAL, registry, mode="log2")


@pytest.mark.parametrize(
    "spec",
    [
        KindSpec(0.0, 0.3, None),
        KindSpec(-1.0, 0.3, None),
        KindSpec(1.0, 0.0, None),
    ],
)
def test_registry_rejects_nonpositive(spec):
    with pytest.raises(ConfigurationError):
        SensitivityRegistry({EntityKind.CARDINAL: spec})


def test_registry_textual_invariants():
    with pytest.raises(ConfigurationError):
        SensitivityRegistry({EntityKind.PERSON: KindSpec(1.0, 0.25, None, ("Ann",))})
    with pytest.raises(ConfigurationError):
        SensitivityRegistry({EntityKind.PERSON: KindSpec(3.0, 0.25, None, ("Ann", "Bo"))})
    with pytest.raises(ConfigurationError):
        SensitivityRegistry({EntityKind.PERSON: KindSpec(2.0, 0.25, None, ("Ann", "Ann"))})


def test_unknown_kind(registry):
    with pytest.raises(ConfigurationError):
        registry.spec("NOT_A_KIND")


def test_registry_round_trip(registry, tmp_path):
    path = tmp_path / "reg.json"
    save_registry(registry, path)
    assert load_registry(path) == registry


def test_load_partial_registry(tmp_path):
    (tmp_path / "people.txt").write_text("Ann\nBo\n\nCy\n", encoding="utf-8")
    (tmp_path / "reg.json").write_text(
        json.dumps({"PERSON": {"base_weight": 0.5, "pool_path": "people.txt"},
                    "CARDINAL": {"delta": 100, "bounds": [0, 1000]}}),
        encoding="utf-8",
    )
    reg = load_registry(tmp_path / "reg.json")
    assert reg.pool(EntityKind.PERSON) == ("Ann", "Bo", "Cy")
    assert reg.delta(EntityKind.PERSON) == 3
    assert reg.base_weight(EntityKind.PERSON) == 0.5
    assert reg.delta(EntityKind.CARDINAL) == 100
    assert reg.bounds(EntityKind.CARDINAL) == (0, 1000)
    assert reg.delta(EntityKind.DATE_DAY) == 29


def test_load_registry_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_registry(bad)
    bad.write_text(json.dumps({"WIDGET": {}}), encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_registry(bad)
