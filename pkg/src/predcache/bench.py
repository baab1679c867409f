"""Time the compiled kernels against the pure-Python fallback."""
from __future__ import annotations

import time

import numpy as np

from predcache import policies
from predcache.policies import _backend
from predcache.predictors import lognormal_predictions
from predcache.trace import compute_next_arrivals, gen_random_trace


def _cases(trace, k, h):
    return {
        "next_arrivals": lambda: compute_next_arrivals(trace),
        "belady": lambda: policies.belady(trace, k),
        "lru": lambda: policies.lru(trace, k),
        "marker": lambda: policies.marker(trace, k, 1),
        "blind": lambda: policies.blind_oracle(trace, k, h),
        "predictive-marker": lambda: policies.predictive_marker(trace, k, h, seed=1),
    }


def run_bench(n: int = 25000, universe: int = 700, k: int = 100, repeat: int = 3, seed: int = 0):
    """Return rows ``(kernel, backend, best_seconds)`` plus speedups."""
    trace = gen_random_trace(universe, n, "zipf", 0.8, seed=seed)
    h = lognormal_predictions(trace, 1.0, seed)
    rows = []
    prev = _backend.NAME
    try:
        timings = {}
        for name in _backend.available():
            _backend.use(name)
            for kernel, fn in _cases(trace, k, h).items():
                best = np.inf
                for _ in range(repeat):
                    t0 = time.perf_counter()
                    fn()
                    best = min(best, time.perf_counter() - t0)
                timings[(kernel, name)] = best
                rows.append({"kernel": kernel, "backend": name, "seconds": best})
    finally:
        _backend.use(prev)
    for r in rows:
        base = timings[(r["kernel"], "pure")]
        r["speedup_vs_pure"] = base / r["seconds"] if r["seconds"] > 0 else float("inf")
    return rows
