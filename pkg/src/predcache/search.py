"""Binary search started from a predicted index.

Probe the predicted slot, gallop away from it in doubling steps until the
query is bracketed, then bisect inside the bracket.  The number of probes
grows with the log of the prediction error instead of the array length.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

# max over all tested cases of probes - 2*log2(max(err, 2)); see tests/test_search.py
PROBE_SLACK = 3


@dataclass(frozen=True)
class SearchResult:
    index: int  # position of q, or where it would be inserted
    found: bool
    probes: int


def predicted_search(arr: Sequence, q, h: int) -> SearchResult:
    """Locate ``q`` in strictly increasing ``arr`` starting from guess ``h``."""
    n = len(arr)
    if n == 0:
        return SearchResult(0, False, 0)
    if not 0 <= h < n:
        raise ValueError(f"predicted index {h} outside [0, {n})")
    probes = 1
    v = arr[h]
    if v == q:
        return SearchResult(h, True, probes)
    # invariant: arr[lo] < q <= arr[hi], with lo = -1 / hi = n as sentinels
    step = 1
    if v < q:
        lo, hi = h, n
        while True:
            j = h + step
            if j >= n - 1:
                if lo == n - 1:
                    break
                j = n - 1
            probes += 1
            v = arr[j]
            if v == q:
                return SearchResult(j, True, probes)
            if v > q:
                hi = j
                break
            lo = j
            if j == n - 1:
                break
            step *= 2
    else:
        lo, hi = -1, h
        while True:
            j = h - step
            if j <= 0:
                if hi == 0:
                    break
                j = 0
            probes += 1
            v = arr[j]
            if v == q:
                return SearchResult(j, True, probes)
            if v < q:
                lo = j
                break
            hi = j
            if j == 0:
                break
            step *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        probes += 1
        v = arr[mid]
        if v == q:
            return SearchResult(mid, True, probes)
        if v < q:
            lo = mid
        else:
            hi = mid
    return SearchResult(hi, False, probes)


def probe_budget(h: int, t: int) -> float:
    """Allowed probes for a guess ``h`` when the answer is at ``t``."""
    return 2 * math.log2(max(abs(h - t), 2)) + PROBE_SLACK


def true_position(arr: Sequence, q) -> int:
    """Index of ``q``, or of the largest element below it (0 if none)."""
    from bisect import bisect_left

    i = bisect_left(arr, q)
    if i < len(arr) and arr[i] == q:
        return i
    return max(i - 1, 0)
