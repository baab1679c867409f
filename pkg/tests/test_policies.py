import numpy as np
import pytest

from conftest import letters, random_small_trace
from predcache import policies
from predcache.analysis import harmonic
from predcache.bruteforce import brute_force_opt
from predcache.policies import _backend, _pure
from predcache.predictors import lognormal_predictions, perfect_predictions, recency_predictions
from predcache.trace import (Trace, gen_blind_counterexample, gen_fixed_blind_counterexample,
                             gen_random_trace)

ALL = ["belady", "lru", "fifo", "marker", "blind", "blind-fixed", "predictive-marker"]


def test_belady_examples(backend):
    assert policies.belady(letters("abcba"), 2).misses == 4
    assert brute_force_opt(letters("abcba"), 2) == 4
    assert policies.belady(letters("abab"), 1).misses == 4
    t = gen_random_trace(5, 50, seed=0)
    assert policies.belady(t, 5).misses == t.distinct()


def test_lru_example(backend):
    r = policies.lru(letters("abacab"), 2)
    assert r.misses == 4
    assert [(p, e) for p, e, *_ in r.evictions.tolist()] == [(4, 1), (6, 2)]


@pytest.mark.parametrize("fn", [policies.lru, policies.fifo])
def test_single_element_one_miss(backend, fn):
    assert fn(letters("aaaaa"), 3).misses == 1


def test_fifo_ignores_hits(backend):
    # FIFO evicts a (oldest insert) although it was just hit; LRU evicts b
    assert policies.fifo(letters("abac"), 2).evictions[0, 1] == 0
    assert policies.lru(letters("abac"), 2).evictions[0, 1] == 1


@pytest.mark.parametrize("name", ALL)
def test_rejects_zero_cache(backend, name):
    t = letters("abc")
    with pytest.raises(ValueError):
        policies.run_policy(name, t, 0, perfect_predictions(t))


def test_marker_loop_within_capacity(backend):
    t = Trace(list(range(5)) * 20)
    r = policies.marker(t, 5, seed=3)
    assert r.misses == 5 and r.n_evictions == 0
    assert r.clean_counts.tolist() == [5]


def test_blind_matches_belady_with_exact_predictions(backend):
    rng = np.random.default_rng(0)
    for _ in range(200):
        t = random_small_trace(rng, 60, 9)
        k = int(rng.integers(1, 6))
        a = policies.blind_oracle(t, k, perfect_predictions(t))
        b = policies.belady(t, k)
        assert np.array_equal(a.evictions, b.evictions)
        assert policies.blind_oracle_fixed(t, k, perfect_predictions(t)).misses == b.misses


def test_blind_fixed_all_zero_predictions_evicts_lowest_id(backend):
    t = letters("cbad")
    r = policies.blind_oracle_fixed(t, 3, np.zeros(4))
    assert r.evictions[0, 1] == 0


def test_blind_counterexample(backend):
    for T in (6, 50, 1000):
        trace, h = gen_blind_counterexample(T)
        assert policies.blind_oracle(trace, 2, h).misses - 2 == T
        assert policies.belady(trace, 2).misses - 2 == 1


def test_fixed_counterexample_misses(backend):
    for variant in ("horizon", "expired"):
        for T in (16, 100, 2 ** 12):
            trace, h = gen_fixed_blind_counterexample(T, variant)
            cd = int(np.isin(trace.requests[3:], [2, 3]).sum())
            assert policies.blind_oracle_fixed(trace, 3, h).misses - 3 == cd
            assert policies.belady(trace, 3).misses - 3 == 2


def test_predictive_marker_default_threshold():
    r = policies.predictive_marker(letters("abcabc"), 3, np.zeros(6))
    assert r.extra["threshold"] == pytest.approx(harmonic(3))


def _check_marking_structure(trace, k, res, with_chains=True):
    """Phase bookkeeping checked against an independent replay of the log."""
    req = trace.requests.tolist()
    ev = {p: (e, c, ph, ch) for p, e, c, ph, ch in res.evictions.tolist()}
    cache, marked, phase = set(), set(), 1
    chains: dict[int, list] = {}
    distinct_in_phase = set()
    for i, z in enumerate(req, 1):
        if z in cache:
            marked.add(z)
            distinct_in_phase.add(z)
            continue
        if len(cache) < k:
            cache.add(z)
            marked.add(z)
            distinct_in_phase.add(z)
            assert i not in ev
            continue
        e, cause, ph, ch = ev[i]
        if len(marked) == k:
            assert ph == phase + 1  # phase ends only with every resident marked
            phase += 1
            marked, chains, distinct_in_phase = set(), {}, set()
        assert ph == phase
        assert e in cache and e not in marked  # never evict a marked element
        if not with_chains:
            pass
        elif cause == _pure.CAUSE_CLEAN:
            assert ch == len(chains) + 1
            chains[ch] = [e]
        else:
            assert chains[ch][-1] == z  # stale arrival is the chain's representative
            chains[ch].append(e)
        # chains stay disjoint
        flat = [x for c in chains.values() for x in c]
        assert len(flat) == len(set(flat))
        cache.remove(e)
        cache.add(z)
        marked.add(z)
        distinct_in_phase.add(z)
        assert len(distinct_in_phase) <= k
    assert len(res.clean_counts) == phase
    assert res.misses == res.n_evictions + res.fills


def test_predictive_marker_structure(backend):
    rng = np.random.default_rng(1)
    for j in range(300):
        t = random_small_trace(rng, 120, 12)
        k = int(rng.integers(1, 7))
        h = lognormal_predictions(t, float(rng.uniform(0, 3)), j)
        for thr in (None, 0.0, 2.0, float(k)):
            res = policies.predictive_marker(t, k, h, seed=j, threshold=thr)
            _check_marking_structure(t, k, res)
            per_phase_chains = {}
            for _, _, cause, ph, ch in res.evictions.tolist():
                per_phase_chains.setdefault(ph, set()).add(ch)
            for ph, chs in per_phase_chains.items():
                assert len(chs) == res.clean_counts[ph - 1]
        _check_marking_structure(t, k, policies.marker(t, k, seed=j), with_chains=False)


def test_predictive_marker_chain_lengths_follow_threshold(backend):
    rng = np.random.default_rng(2)
    for j in range(200):
        t = random_small_trace(rng, 150, 10)
        k = int(rng.integers(2, 7))
        h = lognormal_predictions(t, 2.0, j)
        res = policies.predictive_marker(t, k, h, seed=j)
        thr = harmonic(k)
        lengths = {}
        for _, _, cause, ph, ch in res.evictions.tolist():
            lengths[(ph, ch)] = lengths.get((ph, ch), 0) + 1
            n = lengths[(ph, ch)]
            if cause == _pure.CAUSE_STALE_ORACLE:
                assert n <= thr
            elif cause == _pure.CAUSE_STALE_RANDOM:
                assert n > thr


def test_stale_without_chain_is_invariant_error():
    pm = _pure.PredictiveMarker(2, 0, 1.0)
    pm.request(1, 0, 5.0)
    pm.request(2, 1, 5.0)
    pm.stale = {0, 1, 7}
    pm.marked = {0}  # no phase change, so the forged stale set survives
    with pytest.raises(policies.InvariantError):
        pm.request(3, 7, 1.0)


def test_threshold_zero_is_marker(backend):
    rng = np.random.default_rng(3)
    for j in range(300):
        t = random_small_trace(rng, 100, 10)
        k = int(rng.integers(1, 6))
        h = lognormal_predictions(t, 1.0, j)
        a = policies.predictive_marker(t, k, h, seed=j, threshold=0)
        b = policies.marker(t, k, seed=j)
        assert a.misses == b.misses
        assert np.array_equal(a.evictions[:, :4], b.evictions[:, :4])
        assert np.array_equal(a.clean_counts, b.clean_counts)


def test_threshold_zero_is_marker_in_distribution():
    # independent seeds: compare mean misses over many seeds
    t = gen_random_trace(12, 400, seed=4)
    h = lognormal_predictions(t, 1.0, 4)
    a = [policies.predictive_marker(t, 6, h, seed=s, threshold=0).misses for s in range(300)]
    b = [policies.marker(t, 6, seed=10_000 + s).misses for s in range(300)]
    se = np.sqrt(np.var(a, ddof=1) / 300 + np.var(b, ddof=1) / 300)
    assert abs(np.mean(a) - np.mean(b)) < 4 * se


def test_recency_predictor_reproduces_lru(backend):
    rng = np.random.default_rng(5)
    for j in range(300):
        t = random_small_trace(rng, 150, 12)
        k = int(rng.integers(1, 8))
        a = policies.predictive_marker(t, k, recency_predictions(t), seed=j, threshold=k)
        b = policies.lru(t, k)
        assert a.misses == b.misses
        assert np.array_equal(a.evictions[:, :2], b.evictions[:, :2])


def test_perfect_predictions_two_competitive(backend):
    rng = np.random.default_rng(6)
    for j in range(300):
        t = random_small_trace(rng, 200, 15)
        if not len(t):
            continue
        k = int(rng.integers(1, 8))
        res = policies.predictive_marker(t, k, perfect_predictions(t), seed=j)
        opt = policies.belady(t, k).misses
        assert res.misses <= 2 * opt
        # a perfect oracle never loses a stale element: only clean arrivals miss
        assert res.misses == res.clean_total


def test_opt_at_least_half_clean_count(backend):
    rng = np.random.default_rng(7)
    for j in range(300):
        t = random_small_trace(rng, 200, 15)
        k = int(rng.integers(1, 8))
        res = policies.marker(t, k, seed=j)
        assert policies.belady(t, k).misses >= res.clean_total / 2


def test_clean_total_independent_of_choices(backend):
    t = gen_random_trace(15, 500, seed=8)
    h = lognormal_predictions(t, 1.0, 8)
    totals = {policies.marker(t, 5, seed=s).clean_total for s in range(20)}
    totals |= {policies.predictive_marker(t, 5, h, seed=s).clean_total for s in range(20)}
    assert len(totals) == 1


def test_determinism(backend):
    t = gen_random_trace(20, 500, seed=9)
    h = lognormal_predictions(t, 1.5, 9)
    for name in ALL:
        a = policies.run_policy(name, t, 4, h, seed=42)
        b = policies.run_policy(name, t, 4, h, seed=42)
        assert np.array_equal(a.evictions, b.evictions)


def test_backends_agree():
    if "compiled" not in _backend.available():
        pytest.skip("compiled kernels not built")
    rng = np.random.default_rng(10)
    prev = _backend.NAME
    try:
        for j in range(200):
            t = random_small_trace(rng, 300, 30)
            k = int(rng.integers(1, 10))
            h = lognormal_predictions(t, float(rng.uniform(0, 3)), j)
            out = {}
            for b in ("pure", "compiled"):
                _backend.use(b)
                out[b] = [policies.run_policy(n, t, k, h, seed=j) for n in ALL]
                out[b].append(policies.predictive_marker(t, k, h, seed=j, threshold=0.5))
            for x, y in zip(out["pure"], out["compiled"]):
                assert x.misses == y.misses and x.fills == y.fills
                assert np.array_equal(x.evictions, y.evictions)
                assert np.array_equal(x.clean_counts, y.clean_counts)
    finally:
        _backend.use(prev)


def test_literal_miss_counting():
    r = policies.lru(letters("abcabc"), 2)
    assert r.fills == 2
    assert r.misses_literal == r.misses - 2


def test_eviction_csv(tmp_path):
    r = policies.predictive_marker(letters("abcdabcd"), 2, np.arange(8.0), seed=0)
    p = tmp_path / "ev.csv"
    r.write_evictions(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "position,element,cause,phase,chain"
    assert len(lines) == 1 + r.n_evictions
    assert lines[1].split(",")[2] in {"clean", "stale-oracle", "stale-random"}


def test_prediction_length_checked():
    with pytest.raises(ValueError):
        policies.blind_oracle(letters("abc"), 2, [1.0, 2.0])
