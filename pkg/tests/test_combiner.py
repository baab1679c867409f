import itertools

import numpy as np

from conftest import random_small_trace
from predcache import policies
from predcache.predictors import lognormal_predictions
from predcache.trace import gen_blind_counterexample, gen_random_trace

PAIR_POOL = ["lru", "marker", "blind"]


def test_same_policy_never_switches():
    t = gen_random_trace(12, 400, seed=0)
    r = policies.combiner(t, 4, "lru", "lru")
    assert r.extra["switches"] == 0
    assert r.misses == r.extra["cost_a"] == policies.lru(t, 4).misses
    assert r.extra["reconcile_misses"] == 0


def test_costs_match_standalone_runs():
    t = gen_random_trace(15, 600, seed=1)
    h = lognormal_predictions(t, 1.0, 1)
    r = policies.combiner(t, 5, "blind", "lru", h)
    assert r.extra["cost_a"] == policies.blind_oracle(t, 5, h).misses
    assert r.extra["cost_b"] == policies.lru(t, 5).misses


def test_escapes_misleading_oracle():
    trace, h = gen_blind_counterexample(1000)
    r = policies.combiner(trace, 2, "blind", "marker", h)
    assert r.extra["cost_a"] == 1002
    assert r.misses <= 9 * min(r.extra["cost_a"], r.extra["cost_b"])
    assert r.extra["switches"] >= 1


def test_nine_times_the_better_policy():
    rng = np.random.default_rng(2)
    for j in range(150):
        t = random_small_trace(rng, 300, 25)
        if not len(t):
            continue
        k = int(rng.integers(1, 8))
        h = lognormal_predictions(t, float(rng.uniform(0, 5)), j)
        for a, b in itertools.product(PAIR_POOL, PAIR_POOL):
            r = policies.combiner(t, k, a, b, h, seed=j)
            assert r.misses <= 9 * min(r.extra["cost_a"], r.extra["cost_b"])
            assert r.misses == r.fills + len(r.evictions)


def test_real_cache_never_over_capacity():
    t = gen_random_trace(9, 300, seed=3)
    h = lognormal_predictions(t, 2.0, 3)
    r = policies.combiner(t, 3, "marker", "blind", h, seed=3)
    cache = set()
    ev = {int(p): int(e) for p, e, *_ in r.evictions.tolist()}
    for i, z in enumerate(t.requests.tolist(), 1):
        if z in cache:
            assert i not in ev
            continue
        if i in ev:
            assert ev[i] in cache
            cache.discard(ev[i])
        cache.add(z)
        assert len(cache) <= 3


def test_deterministic():
    t = gen_random_trace(9, 300, seed=4)
    h = lognormal_predictions(t, 2.0, 4)
    a = policies.combiner(t, 3, "marker", "blind", h, seed=8)
    b = policies.combiner(t, 3, "marker", "blind", h, seed=8)
    assert np.array_equal(a.evictions, b.evictions)
