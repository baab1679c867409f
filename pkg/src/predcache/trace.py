"""Request traces, next-arrival labels and trace generators.

Positions reported to callers are 1-indexed: the label for request ``i`` is
the position of the next request of the same element, or ``n + 1`` when the
element never comes back.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from predcache.policies import _backend

A, B, C, D = 0, 1, 2, 3


@dataclass(frozen=True, init=False)
class Trace:
    """An immutable request sequence over dense element ids ``[0, universe)``."""

    requests: np.ndarray
    universe: int
    name: str = ""
    _next: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __init__(self, requests: Iterable[int], universe: int | None = None, name: str = ""):
        if not isinstance(requests, np.ndarray):
            requests = list(requests)
        arr = np.array(requests, dtype=np.int64)
        if arr.ndim != 1:
            raise ValueError("requests must be one-dimensional")
        if arr.size and arr.min() < 0:
            raise ValueError("element ids must be non-negative")
        top = int(arr.max()) + 1 if arr.size else 0
        if universe is None:
            universe = top
        if universe < top:
            raise ValueError(f"element id {top - 1} outside universe of size {universe}")
        arr.setflags(write=False)
        object.__setattr__(self, "requests", arr)
        object.__setattr__(self, "universe", int(universe))
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "_next", None)

    def __len__(self) -> int:
        return int(self.requests.size)

    @property
    def n(self) -> int:
        return len(self)

    def distinct(self) -> int:
        return int(np.unique(self.requests).size)

    @property
    def next_arrivals(self) -> np.ndarray:
        """Cached result of :func:`compute_next_arrivals`."""
        if self._next is None:
            object.__setattr__(self, "_next", compute_next_arrivals(self))
        return self._next

    def feature_view(self, i: int) -> "FeatureView":
        """Arrival history of the element requested at 1-indexed position ``i``."""
        elem = int(self.requests[i - 1])
        hist = np.flatnonzero(self.requests[:i] == elem) + 1
        return FeatureView(elem, i, tuple(int(h) for h in hist))


@dataclass(frozen=True)
class FeatureView:
    element: int
    position: int
    history: tuple[int, ...]

    def __post_init__(self):
        h = self.history
        if any(b <= a for a, b in zip(h, h[1:])) or (h and h[-1] > self.position):
            raise ValueError("history must be strictly increasing and not beyond position")


def compute_next_arrivals(trace: Trace | Sequence[int]) -> np.ndarray:
    """Return ``y`` with ``y[i-1] = min{t > i : z_t = z_i}`` or ``n + 1``."""
    req = trace.requests if isinstance(trace, Trace) else np.asarray(trace, dtype=np.int64)
    out = _backend.next_arrivals(np.ascontiguousarray(req, dtype=np.int64))
    out.setflags(write=False)
    return out


# --- generators -------------------------------------------------------------

def gen_random_trace(universe: int, n: int, distribution: str = "uniform",
                     s: float = 1.0, seed: int = 0) -> Trace:
    """Draw ``n`` i.i.d. requests; ``distribution`` is ``uniform`` or ``zipf``.

    Under ``zipf`` element ``r`` (0-based rank) has weight ``(r + 1) ** -s``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if universe <= 0:
        if n:
            raise ValueError("universe must be positive for a non-empty trace")
        return Trace([], universe=0)
    rng = np.random.default_rng(seed)
    if distribution == "uniform":
        reqs = rng.integers(0, universe, size=n)
    elif distribution == "zipf":
        if s <= 0:
            raise ValueError("zipf exponent must be positive")
        w = np.arange(1, universe + 1, dtype=float) ** -s
        reqs = rng.choice(universe, size=n, p=w / w.sum())
    else:
        raise ValueError(f"unknown distribution {distribution!r}")
    return Trace(reqs, universe=universe, name=f"{distribution}-u{universe}-n{n}-s{seed}")


def gen_repeat_consumption_trace(n: int, seed: int = 0, p_new: float = 0.15,
                                 alpha: float = 1.2, pool: int = 5000,
                                 zipf_s: float = 0.8) -> Trace:
    """Check-in style trace: revisits favour recently seen elements.

    With probability ``p_new`` the next request is drawn from a Zipf(``zipf_s``)
    pool of ``pool`` candidates; otherwise a previous request is copied, the
    request ``d`` steps back being chosen with weight ``d ** -alpha``.
    The result is re-labelled densely in order of first appearance.
    """
    rng = np.random.default_rng(seed)
    pop = np.arange(1, pool + 1, dtype=float) ** -zipf_s
    pop /= pop.sum()
    lag_w = np.arange(1, n + 1, dtype=float) ** -alpha
    out = np.empty(n, dtype=np.int64)
    fresh = rng.random(n) < p_new
    for i in range(n):
        if i == 0 or fresh[i]:
            out[i] = rng.choice(pool, p=pop)
        else:
            w = lag_w[:i]
            lag = rng.choice(i, p=w / w.sum()) + 1
            out[i] = out[i - lag]
    return remap_dense(out, name=f"repeat-n{n}-s{seed}")[0]


def remap_dense(raw: Iterable, name: str = "") -> tuple[Trace, dict]:
    """Map arbitrary hashable keys to ids ``0..m-1`` by first appearance."""
    ids: dict = {}
    seq = [ids.setdefault(key, len(ids)) for key in raw]
    return Trace(np.asarray(seq, dtype=np.int64), universe=len(ids), name=name), ids


def gen_blind_counterexample(T: int) -> tuple[Trace, np.ndarray]:
    """Trace that defeats the plain follow-the-predictions policy (k = 2).

    Warm-up ``a, b`` loads the cache, then ``c`` arrives followed by
    ``b c b c ...`` for a suffix of length ``T``.  Every prediction is exact
    except ``a``'s, which claims ``a`` returns immediately.
    Returns the trace and the prediction array (one per request).
    """
    if T < 4:
        raise ValueError("T must be at least 4")
    suffix = [C if j % 2 == 0 else B for j in range(T)]
    trace = Trace([A, B] + suffix, universe=3, name=f"blind-T{T}")
    preds = trace.next_arrivals.astype(float)
    preds[0] = 2.0
    return trace, preds


def fixed_blind_suffix(T: int) -> list[int]:
    out = []
    for t in range(1, T + 1):
        x = t - 1
        if t == T:
            out.append(B)
        elif x > 0 and x & (x - 1) == 0:
            r = x.bit_length() - 1
            out.append(C if r % 2 else D)
        else:
            out.append(A)
    return out


def gen_fixed_blind_counterexample(T: int, stale_prediction: str = "horizon") -> tuple[Trace, np.ndarray]:
    """Trace that defeats the expired-prediction variant of blind following (k = 3).

    Warm-up ``a, b, c``; then, for suffix times ``t = 1..T``: ``b`` at ``T``,
    ``c`` at ``2**r + 1`` for odd ``r``, ``d`` at ``2**r + 1`` for even ``r``,
    ``a`` elsewhere.  Predictions for ``a`` and ``b`` are exact.

    ``stale_prediction`` picks what ``c`` and ``d`` are told:

    ``"horizon"``
        always ``T + 1`` in suffix time (past the end of the trace).  The
        average absolute loss then grows like ``log2(T) - 2``.
    ``"expired"``
        the current request's own position, so the prediction has already
        passed by the next time the policy looks at it.  Same miss pattern,
        average absolute loss stays near 2.
    """
    if T < 16:
        raise ValueError("T must be at least 16")
    warm = [A, B, C]
    trace = Trace(warm + fixed_blind_suffix(T), universe=4, name=f"fixed-T{T}")
    preds = trace.next_arrivals.astype(float)
    cd = np.isin(trace.requests, [C, D])
    if stale_prediction == "horizon":
        preds[cd] = len(warm) + T + 1
    elif stale_prediction == "expired":
        preds[cd] = np.flatnonzero(cd) + 1.0
    else:
        raise ValueError(f"unknown stale_prediction {stale_prediction!r}")
    return trace, preds


# --- text format ------------------------------------------------------------

def write_trace(trace: Trace, path: str | Path, header: Sequence[str] = ()) -> None:
    lines = [f"# {h}" for h in header]
    lines.append(f"# universe={trace.universe}")
    lines.extend(str(int(x)) for x in trace.requests)
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace(path: str | Path) -> Trace:
    """Read one id per line; ``#`` lines are comments (``# universe=m`` is honoured)."""
    universe = None
    vals = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("universe="):
                universe = int(body.split("=", 1)[1])
            continue
        vals.append(int(line))
    return Trace(np.asarray(vals, dtype=np.int64), universe=universe, name=Path(path).stem)
