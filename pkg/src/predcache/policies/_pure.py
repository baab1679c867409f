"""Pure-Python eviction kernels.

Every policy is an online stepper with ``request(pos, elem, pred)``; the
``run_*`` functions drive one over a whole trace and return the tuple
``(misses, fills, log, clean)`` shared with the compiled kernels:

* ``log`` is an ``(E, 5)`` int64 array of ``(position, evicted, cause, phase, chain)``
* ``clean`` holds the number of clean arrivals of every phase (marking policies
  only; phase 1 counts the compulsory fills).
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
INV53 = 1.0 / 9007199254740992.0

CAUSE_CLEAN = 0
CAUSE_STALE_ORACLE = 1
CAUSE_STALE_RANDOM = 2
CAUSE_POLICY = 3


class InvariantError(RuntimeError):
    """Raised when a marking policy's phase bookkeeping is inconsistent."""


class SplitMix64:
    """Small counter-based generator, bit-identical to the compiled kernels."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def index(self, m: int) -> int:
        return int(((self.next() >> 11) * INV53) * m)


def next_arrivals(req: np.ndarray) -> np.ndarray:
    n = len(req)
    out = np.empty(n, dtype=np.int64)
    last: dict[int, int] = {}
    for i in range(n - 1, -1, -1):
        z = int(req[i])
        out[i] = last.get(z, n + 1)
        last[z] = i + 1
    return out


class Stepper:
    """Common cache bookkeeping; subclasses implement ``victim``."""

    def __init__(self, k: int, seed: int = 0):
        if k < 1:
            raise ValueError("cache size k must be at least 1")
        self.k = k
        self.cache: set[int] = set()
        self.misses = 0
        self.fills = 0
        self.log: list[tuple[int, int, int, int, int]] = []
        self.clean: list[int] = []

    def request(self, pos: int, elem: int, pred: float = 0.0) -> int:
        """Serve one request; return the evicted element or -1."""
        self.observe(pos, elem, pred)
        if elem in self.cache:
            self.on_hit(pos, elem)
            return -1
        self.misses += 1
        if len(self.cache) < self.k:
            self.fills += 1
            self.cache.add(elem)
            self.on_fill(pos, elem)
            return -1
        victim, cause, phase, chain = self.victim(pos, elem)
        self.cache.remove(victim)
        self.cache.add(elem)
        self.log.append((pos, victim, cause, phase, chain))
        self.on_insert(pos, elem)
        return victim

    def observe(self, pos, elem, pred):
        pass

    def on_hit(self, pos, elem):
        pass

    def on_fill(self, pos, elem):
        self.on_insert(pos, elem)

    def on_insert(self, pos, elem):
        pass

    def victim(self, pos, elem):
        raise NotImplementedError

    def result(self):
        log = np.array(self.log, dtype=np.int64).reshape(-1, 5)
        return self.misses, self.fills, log, np.array(self.clean, dtype=np.int64)


def _argmax_pred(cands, pred):
    best, best_p = -1, 0.0
    for e in cands:
        p = pred[e]
        if best < 0 or p > best_p or (p == best_p and e < best):
            best, best_p = e, p
    return best


class LRU(Stepper):
    def __init__(self, k, seed=0):
        super().__init__(k)
        self.last: dict[int, int] = {}

    def on_hit(self, pos, elem):
        self.last[elem] = pos

    def on_insert(self, pos, elem):
        self.last[elem] = pos

    def victim(self, pos, elem):
        last = self.last
        return min(self.cache, key=last.__getitem__), CAUSE_POLICY, 0, 0


class FIFO(Stepper):
    def __init__(self, k, seed=0):
        super().__init__(k)
        self.inserted: dict[int, int] = {}

    def on_insert(self, pos, elem):
        self.inserted[elem] = pos

    def victim(self, pos, elem):
        ins = self.inserted
        return min(self.cache, key=ins.__getitem__), CAUSE_POLICY, 0, 0


class Blind(Stepper):
    """Evict the resident with the furthest stored prediction.

    With ``fixed=True`` residents whose stored prediction is already in the
    past (``< pos``) are evicted first, lowest id among them.
    """

    def __init__(self, k, seed=0, fixed=False):
        super().__init__(k)
        self.fixed = fixed
        self.pred: dict[int, float] = {}

    def observe(self, pos, elem, pred):
        self.pred[elem] = pred

    def victim(self, pos, elem):
        if self.fixed:
            expired = [e for e in self.cache if self.pred[e] < pos]
            if expired:
                return min(expired), CAUSE_POLICY, 0, 0
        return _argmax_pred(self.cache, self.pred), CAUSE_POLICY, 0, 0


class _Marking(Stepper):
    """Phase, mark and stale-set bookkeeping shared by the marking policies."""

    def __init__(self, k, seed=0):
        super().__init__(k)
        self.rng = SplitMix64(seed)
        self.phase = 1
        self.marked: set[int] = set()
        self.stale: set[int] = set()
        self.clean = [0]

    def on_hit(self, pos, elem):
        self.marked.add(elem)

    def on_fill(self, pos, elem):
        self.clean[-1] += 1
        self.marked.add(elem)

    def on_insert(self, pos, elem):
        self.marked.add(elem)

    def start_phase_if_needed(self):
        if len(self.marked) == self.k:
            self.phase += 1
            self.clean.append(0)
            self.stale = set(self.cache)
            self.marked = set()
            return True
        return False

    def random_unmarked(self):
        cands = sorted(self.cache - self.marked)
        return cands[self.rng.index(len(cands))]


class Marker(_Marking):
    def victim(self, pos, elem):
        self.start_phase_if_needed()
        if elem in self.stale:
            cause = CAUSE_STALE_RANDOM
        else:
            self.clean[-1] += 1
            cause = CAUSE_CLEAN
        return self.random_unmarked(), cause, self.phase, 0


class PredictiveMarker(_Marking):
    """Marking with clean-chain tie-breaking.

    Chains longer than ``threshold`` fall back to uniformly random unmarked
    evictions.  A clean arrival opens a chain of length 1 and uses the
    predictions as long as ``1 <= threshold``.
    """

    def __init__(self, k, seed=0, threshold=1.0):
        super().__init__(k, seed)
        self.threshold = threshold
        self.pred: dict[int, float] = {}
        self.chain_len: list[int] = [0]
        self.rep: dict[int, int] = {}

    def observe(self, pos, elem, pred):
        self.pred[elem] = pred

    def start_phase_if_needed(self):
        if super().start_phase_if_needed():
            self.chain_len = [0]
            self.rep = {}

    def victim(self, pos, elem):
        self.start_phase_if_needed()
        if elem in self.stale:
            chain = self.rep.pop(elem, None)
            if chain is None:
                raise InvariantError(
                    f"stale element {elem} missed at position {pos} without owning a chain")
            self.chain_len[chain] += 1
            oracle = self.chain_len[chain] <= self.threshold
            cause = CAUSE_STALE_ORACLE if oracle else CAUSE_STALE_RANDOM
        else:
            self.clean[-1] += 1
            self.chain_len.append(1)
            chain = len(self.chain_len) - 1
            oracle = 1 <= self.threshold
            cause = CAUSE_CLEAN
        if oracle:
            e = _argmax_pred(self.cache - self.marked, self.pred)
        else:
            e = self.random_unmarked()
        self.rep[e] = chain
        return e, cause, self.phase, chain


def _drive(stepper, req, preds=None):
    if preds is None:
        for i, z in enumerate(req.tolist(), 1):
            stepper.request(i, z)
    else:
        for i, (z, h) in enumerate(zip(req.tolist(), preds.tolist()), 1):
            stepper.request(i, z, h)
    return stepper.result()


def run_lru(req, k, universe):
    return _drive(LRU(k), req)


def run_fifo(req, k, universe):
    return _drive(FIFO(k), req)


def run_blind(req, preds, k, universe, fixed):
    return _drive(Blind(k, fixed=fixed), req, preds)


def run_marker(req, k, universe, seed):
    return _drive(Marker(k, seed), req)


def run_predictive_marker(req, preds, k, universe, threshold, seed):
    return _drive(PredictiveMarker(k, seed, threshold), req, preds)
