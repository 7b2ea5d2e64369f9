import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from privdetect.allocator import (
    AccountantLedger,
    BudgetExceededError,
    NothingToAllocate,
    PlanConfig,
    allocate,
    build_plan,
    charge,
    noisy_count,
    split_budget,
)
from privdetect.entities import EntityKind, TEXT_BUCKET
from privdetect.extractor import extract
from privdetect.mechanisms import laplace_sample

positive = st.floats(0.01, 1e4, allow_nan=False, allow_infinity=False)
bucket_configs = st.dictionaries(
    st.text("ABCDEFG", min_size=1, max_size=3),
    st.tuples(st.floats(1.0, 500.0), positive, positive),
    min_size=1,
    max_size=8,
)


def test_split_budget():
    assert split_budget(1.0, 0.1) == pytest.approx((0.1, 0.9))
    assert split_budget(2.0, 0.5) == pytest.approx((1.0, 1.0))


def test_split_budget_conserves():
    gen = np.random.default_rng(0)
    for total, frac in zip(gen.uniform(0.01, 10, 100), gen.uniform(0.01, 0.99, 100)):
        cnt, sub = split_budget(total, frac)
        assert cnt + sub == pytest.approx(total, abs=1e-12)


def test_noisy_count_clamps_at_one():
    for seed in range(1000):
        if laplace_sample(1.0, np.random.default_rng(seed)) <= -3:
            assert noisy_count(0, 1.0, np.random.default_rng(seed)) == 1.0
            break
    else:
        pytest.fail("no seed gave a draw of -3 or lower")


def test_noisy_count_vanishing_noise():
    assert noisy_count(5, 1e6, np.random.default_rng(0)) == pytest.approx(5, abs=1e-4)


def test_noisy_count_median():
    gen = np.random.default_rng(4)
    draws = [noisy_count(10, 0.5, gen) for _ in range(100_000)]
    assert abs(np.median(draws) - 10) <= 0.5


def test_allocate_single_bucket():
    assert allocate(0.8, {"X": (4.0, 123.0, 0.7)})["X"] == pytest.approx(0.2)


def test_allocate_two_equal_share_buckets():
    # equal rho: delta * w * c equal with c = 1 and c = 3
    eps = allocate(1.2, {"a": (1.0, 3.0, 1.0), "b": (3.0, 1.0, 1.0)})
    assert eps["a"] == pytest.approx(0.6) and eps["b"] == pytest.approx(0.2)


def test_allocate_empty():
    with pytest.raises(NothingToAllocate):
        allocate(1.0, {})


@settings(max_examples=300, deadline=None)
@given(bucket_configs, st.floats(0.01, 10.0))
def test_allocation_spends_exactly_eps_sub(buckets, eps_sub):
    eps = allocate(eps_sub, buckets)
    spent = math.fsum(buckets[k][0] * eps[k] for k in buckets)
    assert abs(spent - eps_sub) <= 1e-9


@settings(max_examples=200, deadline=None)
@given(bucket_configs, st.floats(0.01, 10.0), st.floats(0.1, 10.0))
def test_allocation_scales_with_budget(buckets, eps_sub, factor):
    a = allocate(eps_sub, buckets)
    b = allocate(eps_sub * factor, buckets)
    for k in buckets:
        assert b[k] == pytest.approx(a[k] * factor, rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(bucket_configs, st.floats(0.01, 10.0), st.randoms(use_true_random=False))
def test_allocation_ignores_bucket_order(buckets, eps_sub, rnd):
    keys = list(buckets)
    rnd.shuffle(keys)
    shuffled = {k: buckets[k] for k in keys}
    a = allocate(eps_sub, buckets)
    b = allocate(eps_sub, shuffled)
    for k in buckets:
        assert b[k] == pytest.approx(a[k], rel=1e-12)


def test_ledger_charges():
    ledger = AccountantLedger(1.0, 0.1)
    charge(ledger, "PERSON", "exponential", 0.2)
    assert ledger.total == pytest.approx(0.3)
    charge(ledger, "PERSON", "exponential", 0.7)
    assert ledger.total == pytest.approx(1.0)
    with pytest.raises(BudgetExceededError):
        charge(ledger, "PERSON", "exponential", 1e-6)
    assert ledger.bucket_totals() == {"PERSON": pytest.approx(0.9)}


def test_plan_for_text_without_entities(registry):
    plan = build_plan(extract("nothing to see here", registry), 1.0, registry, np.random.default_rng(0))
    assert plan.buckets == {}
    assert plan.epsilon_cnt == pytest.approx(0.1)


def test_truncation_limits(registry):
    ex = extract("Alice, Oliver, Alice, Oliver and Alice", registry)
    plan = build_plan(ex, 1.0, registry, np.random.default_rng(0), noisy_counts={"PERSON": 2.7})
    assert plan.buckets["PERSON"].true_count == 5
    assert plan.buckets["PERSON"].perturb_limit == 2

    ex = extract("only Alice here", registry)
    plan = build_plan(ex, 1.0, registry, np.random.default_rng(0), noisy_counts={"PERSON": 6.0})
    assert plan.buckets["PERSON"].perturb_limit == 1


def test_plan_buckets_only_present_kinds(registry):
    ex = extract("Alice paid $20 at 10:15", registry)
    plan = build_plan(ex, 1.0, registry, np.random.default_rng(0))
    assert set(plan.buckets) == {"PERSON", "MONEY", "TIME_HOUR", "TIME_MINUTE"}
    planned = math.fsum(b.noisy_count * b.per_instance_epsilon for b in plan.buckets.values())
    assert planned == pytest.approx(plan.epsilon_sub, abs=1e-9)


def test_collapsed_text_bucket(registry):
    ex = extract("Alice visited Paris with Oliver", registry)
    plan = build_plan(ex, 1.0, registry, np.random.default_rng(0),
                      PlanConfig(collapse_text_bucket=True))
    assert set(plan.buckets) == {TEXT_BUCKET}
    assert plan.buckets[TEXT_BUCKET].delta == registry.max_pool_size()


def test_count_scaled_mode_weights_by_floor_of_noisy_count(registry):
    ex = extract("Alice and Oliver", registry)
    plan = build_plan(ex, 1.0, registry, np.random.default_rng(0),
                      PlanConfig(weight_mode="count_scaled"), noisy_counts={"PERSON": 2.9})
    base = 0.25 * math.log(registry.delta(EntityKind.PERSON) + 1)
    assert plan.buckets["PERSON"].weight == pytest.approx(base * 3)
