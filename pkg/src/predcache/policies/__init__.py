"""Eviction policies.

Each ``run``-style function simulates one policy over a whole trace and
returns a :class:`RunResult`.  Fetches into a not-yet-full cache count as
misses for every policy; ``RunResult.misses_literal`` drops them.
"""
from __future__ import annotations

import csv
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from predcache.policies import _backend, _pure
from predcache.policies._pure import InvariantError

CAUSES = {
    _pure.CAUSE_CLEAN: "clean",
    _pure.CAUSE_STALE_ORACLE: "stale-oracle",
    _pure.CAUSE_STALE_RANDOM: "stale-random",
    _pure.CAUSE_POLICY: "policy",
}

__all__ = [
    "RunResult", "InvariantError", "belady", "lru", "fifo", "marker",
    "blind_oracle", "blind_oracle_fixed", "predictive_marker", "combiner",
    "run_policy", "derive_seed", "POLICIES",
]


@dataclass
class RunResult:
    policy: str
    misses: int
    fills: int
    evictions: np.ndarray  # (E, 5): position, evicted, cause, phase, chain
    clean_counts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    extra: dict = field(default_factory=dict)

    @property
    def clean_total(self) -> int:
        return int(self.clean_counts.sum())

    @property
    def misses_literal(self) -> int:
        """Misses excluding fetches into a not-yet-full cache."""
        return self.misses - self.fills

    @property
    def n_evictions(self) -> int:
        return int(self.evictions.shape[0])

    def eviction_rows(self):
        for pos, elem, cause, phase, chain in self.evictions.tolist():
            yield pos, elem, CAUSES[cause], phase, chain

    def write_evictions(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["position", "element", "cause", "phase", "chain"])
            w.writerows(self.eviction_rows())


def derive_seed(master: int, *tags) -> int:
    """64-bit seed from a master seed and any mix of int / str tags."""
    words = [int(master) & 0xFFFFFFFF, (int(master) >> 32) & 0xFFFFFFFF]
    for t in tags:
        words.append(zlib.crc32(t.encode()) if isinstance(t, str) else int(t) & 0xFFFFFFFF)
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])


def _req(trace) -> np.ndarray:
    return np.ascontiguousarray(trace.requests, dtype=np.int64)


def _preds(trace, predictions) -> np.ndarray:
    h = np.ascontiguousarray(predictions, dtype=np.float64)
    if h.shape != (len(trace),):
        raise ValueError(f"expected {len(trace)} predictions, got shape {h.shape}")
    return h


def _wrap(name, out, **extra) -> RunResult:
    misses, fills, log, clean = out
    return RunResult(name, int(misses), int(fills), log, clean, extra)


def _k(k):
    if k < 1:
        raise ValueError("cache size k must be at least 1")
    return int(k)


def belady(trace, k: int) -> RunResult:
    """Offline optimum: evict the resident requested furthest in the future."""
    y = trace.next_arrivals.astype(np.float64)
    out = _backend.kernels.run_blind(_req(trace), y, _k(k), trace.universe, False)
    return _wrap("belady", out)


def lru(trace, k: int) -> RunResult:
    return _wrap("lru", _backend.kernels.run_lru(_req(trace), _k(k), trace.universe))


def fifo(trace, k: int) -> RunResult:
    return _wrap("fifo", _backend.kernels.run_fifo(_req(trace), _k(k), trace.universe))


def marker(trace, k: int, seed: int = 0) -> RunResult:
    return _wrap("marker", _backend.kernels.run_marker(_req(trace), _k(k), trace.universe, seed))


def blind_oracle(trace, k: int, predictions) -> RunResult:
    out = _backend.kernels.run_blind(_req(trace), _preds(trace, predictions), _k(k), trace.universe, False)
    return _wrap("blind", out)


def blind_oracle_fixed(trace, k: int, predictions) -> RunResult:
    out = _backend.kernels.run_blind(_req(trace), _preds(trace, predictions), _k(k), trace.universe, True)
    return _wrap("blind-fixed", out)


def chain_threshold(k: int, gamma: float = 1.0) -> float:
    from predcache.analysis import harmonic

    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    return gamma * harmonic(k)


def predictive_marker(trace, k: int, predictions, gamma: float = 1.0, seed: int = 0,
                      threshold: float | None = None) -> RunResult:
    """Marking with prediction-guided evictions along clean chains.

    A chain may grow to ``threshold`` (default ``gamma * H_k``) evictions
    chosen by furthest prediction; beyond that evictions are uniformly random
    among unmarked residents.  ``threshold=k`` turns the policy into a pure
    prediction follower within phases, ``threshold=0`` into classic Marker.
    """
    k = _k(k)
    thr = chain_threshold(k, gamma) if threshold is None else float(threshold)
    out = _backend.kernels.run_predictive_marker(
        _req(trace), _preds(trace, predictions), k, trace.universe, thr, seed)
    return _wrap("predictive-marker", out, threshold=thr)


# --- combiner ---------------------------------------------------------------

STEPPERS: dict[str, Callable] = {
    "lru": lambda k, seed, **kw: _pure.LRU(k),
    "fifo": lambda k, seed, **kw: _pure.FIFO(k),
    "marker": lambda k, seed, **kw: _pure.Marker(k, seed),
    "blind": lambda k, seed, **kw: _pure.Blind(k),
    "blind-fixed": lambda k, seed, **kw: _pure.Blind(k, fixed=True),
    "predictive-marker": lambda k, seed, gamma=1.0, **kw: _pure.PredictiveMarker(
        k, seed, chain_threshold(k, gamma)),
}


def combiner(trace, k: int, policy_a: str, policy_b: str, predictions=None,
             seed: int = 0, gamma: float = 1.0) -> RunResult:
    """Follow ``policy_a`` until it costs twice ``policy_b``, then swap, and so on.

    Both policies are simulated on the full trace.  The real cache converges
    to the followed policy's cache lazily: on a miss it evicts an element the
    followed policy does not hold (preferring the one it just evicted), so a
    resident the followed policy has but the real cache lacks costs one extra
    miss when requested.
    """
    k = _k(k)
    h = np.zeros(len(trace)) if predictions is None else _preds(trace, predictions)
    sims = [STEPPERS[policy_a](k, derive_seed(seed, "combiner", 0, policy_a), gamma=gamma),
            STEPPERS[policy_b](k, derive_seed(seed, "combiner", 1, policy_b), gamma=gamma)]
    follow = 0
    real: set[int] = set()
    misses = fills = switches = reconcile = 0
    log = []
    for i, (z, p) in enumerate(zip(trace.requests.tolist(), h.tolist()), 1):
        before = [s.misses for s in sims]
        evicted = [s.request(i, z, p) for s in sims]
        if z not in real:
            misses += 1
            if len(real) < k:
                fills += 1
                real.add(z)
            else:
                lead = sims[follow]
                spare = real - lead.cache
                v = evicted[follow] if evicted[follow] in spare else min(spare)
                followed_missed = lead.misses > before[follow]
                if not followed_missed:
                    reconcile += 1
                real.remove(v)
                real.add(z)
                log.append((i, v, _pure.CAUSE_POLICY, follow, int(not followed_missed)))
        mine, other = sims[follow].misses, sims[1 - follow].misses
        if mine > 0 and mine >= 2 * other:
            follow = 1 - follow
            switches += 1
    return RunResult(
        f"combiner({policy_a},{policy_b})", misses, fills,
        np.array(log, dtype=np.int64).reshape(-1, 5),
        extra={"switches": switches, "reconcile_misses": reconcile,
               "cost_a": sims[0].misses, "cost_b": sims[1].misses})


# --- dispatch ---------------------------------------------------------------

POLICIES = ("belady", "lru", "fifo", "marker", "blind", "blind-fixed", "predictive-marker")


def run_policy(name: str, trace, k: int, predictions=None, seed: int = 0,
               gamma: float = 1.0, threshold: float | None = None) -> RunResult:
    if name == "belady":
        return belady(trace, k)
    if name == "lru":
        return lru(trace, k)
    if name == "fifo":
        return fifo(trace, k)
    if name == "marker":
        return marker(trace, k, seed)
    if name in ("blind", "blind-fixed", "predictive-marker") and predictions is None:
        raise ValueError(f"policy {name!r} needs predictions")
    if name == "blind":
        return blind_oracle(trace, k, predictions)
    if name == "blind-fixed":
        return blind_oracle_fixed(trace, k, predictions)
    if name == "predictive-marker":
        return predictive_marker(trace, k, predictions, gamma=gamma, seed=seed, threshold=threshold)
    raise ValueError(f"unknown policy {name!r}")
