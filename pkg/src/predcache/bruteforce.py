"""Exhaustive offline optimum for tiny instances (test oracle for Belady)."""
from __future__ import annotations

from itertools import product

MAX_N, MAX_UNIVERSE, MAX_K = 14, 7, 4


def _check(req, k, universe, max_n=MAX_N):
    if k < 1:
        raise ValueError("cache size k must be at least 1")
    if len(req) > max_n or universe > MAX_UNIVERSE or k > MAX_K:
        raise ValueError(
            f"instance too large for exhaustive search (n<={max_n}, universe<={MAX_UNIVERSE}, k<={MAX_K})")


def brute_force_opt(trace, k: int) -> int:
    """Minimum misses over every eviction choice, memoised on (position, cache)."""
    req = trace.requests.tolist()
    _check(req, k, trace.universe)
    states = {0: 0}  # cache bitmask -> fewest misses so far
    for z in req:
        bit = 1 << z
        nxt: dict[int, int] = {}
        for mask, cost in states.items():
            if mask & bit:
                cand = [(mask, cost)]
            elif mask.bit_count() < k:
                cand = [(mask | bit, cost + 1)]
            else:
                cand = []
                m = mask
                while m:
                    low = m & -m
                    cand.append(((mask ^ low) | bit, cost + 1))
                    m ^= low
            for s, c in cand:
                if c < nxt.get(s, 1 << 30):
                    nxt[s] = c
        states = nxt
    return min(states.values())


def enumerate_opt(trace, k: int) -> int:
    """Same answer by trying every sequence of eviction choices, no memo (n <= 8)."""
    req = trace.requests.tolist()
    _check(req, k, trace.universe, max_n=8)
    best = None
    for choices in product(range(k), repeat=len(req)):
        cache: list[int] = []
        misses = 0
        for z, c in zip(req, choices):
            if z in cache:
                continue
            misses += 1
            if len(cache) < k:
                cache.append(z)
            else:
                cache[c] = z
        best = misses if best is None else min(best, misses)
    return best if best is not None else 0
