"""Spread functions, competitive-ratio bounds and ratio aggregation."""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

LOSSES = ("l1", "l2")


@lru_cache(maxsize=None)
def harmonic_exact(k: int) -> Fraction:
    if k < 1:
        raise ValueError("k must be at least 1")
    return sum((Fraction(1, j) for j in range(1, k + 1)), Fraction(0))


def harmonic(k: int) -> float:
    """k-th harmonic number, summed exactly and rounded once."""
    return float(harmonic_exact(k))


def spread_l1(m: float) -> float:
    """Closed-form upper bound on the absolute-loss spread: ``sqrt(4m + 1)``."""
    if m < 0:
        raise ValueError("m must be non-negative")
    return math.sqrt(4 * m + 1)


def spread_l2(m: float) -> float:
    """Closed-form upper bound on the squared-loss spread: ``cbrt(14m)``."""
    if m < 0:
        raise ValueError("m must be non-negative")
    return (14 * m) ** (1.0 / 3.0)


def spread(kind: str, m: float, zero_convention: bool = True) -> float:
    """Closed-form spread for bound reporting.

    With ``zero_convention`` a zero loss gives spread 0 (no stale misses for a
    perfect predictor) rather than the closed form's value at 0.
    """
    if zero_convention and m == 0:
        return 0.0
    if kind == "l1":
        return spread_l1(m)
    if kind == "l2":
        return spread_l2(m)
    raise ValueError(f"unknown loss kind {kind!r}")


# --- brute-force spread ------------------------------------------------------

def min_chain_losses(kind: str, t_max: int, span: int | None = None) -> np.ndarray:
    """Smallest loss between an increasing and a non-increasing sequence.

    Entry ``T`` is the minimum over strictly increasing integer ``a_1..a_T``
    and non-increasing integer ``b_1..b_T`` (all values in ``[0, span)``) of
    ``sum |a_i - b_i|`` (``l1``) or ``sum (a_i - b_i)**2`` (``l2``).  Solved by
    dynamic programming over ``(a_i, b_i)`` so no extremal structure is assumed.
    """
    if kind not in LOSSES:
        raise ValueError(f"unknown loss kind {kind!r}")
    span = span or t_max + 4
    vals = np.arange(span, dtype=float)
    diff = vals[:, None] - vals[None, :]  # [a, b]
    cost = np.abs(diff) if kind == "l1" else diff * diff
    out = np.full(t_max + 1, np.inf)
    out[0] = 0.0
    if t_max == 0:
        return out
    dp = cost.copy()
    out[1] = dp.min()
    for T in range(2, t_max + 1):
        # best over a < a', b >= b': running min over a ascending, b descending
        best = np.minimum.accumulate(dp, axis=0)
        best = np.minimum.accumulate(best[:, ::-1], axis=1)[:, ::-1]
        prev = np.full_like(dp, np.inf)
        prev[1:, :] = best[:-1, :]
        dp = prev + cost
        out[T] = dp.min()
    return out


def spread_oracle(kind: str, m: float, t_max: int = 256, table: np.ndarray | None = None) -> int:
    """Longest chain length ``T`` whose forced loss stays within ``m``.

    ``T = 1`` always qualifies (a single pair has zero loss).  Raises if every
    length up to ``t_max`` qualifies, since the answer may then lie beyond.
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    losses = table if table is not None else min_chain_losses(kind, t_max)
    ok = np.flatnonzero(losses[1:] <= m) + 1
    best = int(ok.max())
    if best >= len(losses) - 1:
        raise ValueError(f"t_max={len(losses) - 1} too small for m={m}")
    return best


def spread_oracle_first_reach(kind: str, m: float, t_max: int = 256,
                              table: np.ndarray | None = None) -> int:
    """Smallest ``T >= 1`` whose forced loss is at least ``m``."""
    losses = table if table is not None else min_chain_losses(kind, t_max)
    hit = np.flatnonzero(losses[1:] >= m)
    if not hit.size:
        raise ValueError(f"t_max={len(losses) - 1} too small for m={m}")
    return int(hit[0]) + 1


# --- bounds -----------------------------------------------------------------

def _check(eta, opt, k, gamma=1.0):
    if eta < 0 or opt < 1 or k < 1 or gamma <= 0:
        raise ValueError("need eta >= 0, opt >= 1, k >= 1, gamma > 0")


def chain_bound(eta: float, opt: float, k: int, gamma: float = 1.0,
                loss: str = "l1", form: str = "split") -> float:
    """Competitive-ratio bound for Predictive Marker with chain threshold ``gamma * H_k``.

    ``form="factored"``: ``2 * min(1 + (1+g)/g * S, (1+g) * H_k)``.
    ``form="split"``: ``min(2 + (1+g)/g * S, 2 * (1+g) * H_k)``, the tighter
    version quoted for absolute and squared loss at ``g = 1``.
    ``S`` is the closed-form spread of ``eta / opt`` (0 at zero loss).
    """
    _check(eta, opt, k, gamma)
    s = spread(loss, eta / opt)
    hk = harmonic(k)
    w = (1 + gamma) / gamma
    if form == "factored":
        return 2 * min(1 + w * s, (1 + gamma) * hk)
    if form == "split":
        return min(2 + w * s, 2 * (1 + gamma) * hk)
    raise ValueError(f"unknown form {form!r}")


def edit_distance_bound(eta_ed: float, opt: float, k: int) -> float:
    _check(eta_ed, opt, k)
    return min(3 + 2 * eta_ed / opt, 4 * harmonic(k))


def absolute_loss_bound(eta1: float, opt: float, k: int) -> float:
    """``min(2 + 2 sqrt(4 eta1/opt + 1), 4 H_k)`` evaluated literally."""
    _check(eta1, opt, k)
    return min(2 + 2 * math.sqrt(4 * eta1 / opt + 1), 4 * harmonic(k))


def competitive_ratio(misses: Sequence[float], opts: Sequence[float],
                      mode: str = "mean-of-ratios") -> float:
    m = np.asarray(misses, dtype=float)
    o = np.asarray(opts, dtype=float)
    if m.shape != o.shape or not m.size:
        raise ValueError("misses and opts must be equal-length and non-empty")
    if (o < 1).any():
        raise ValueError("every OPT count must be at least 1")
    if mode == "mean-of-ratios":
        return float(np.mean(m / o))
    if mode == "ratio-of-sums":
        return float(m.sum() / o.sum())
    raise ValueError(f"unknown aggregation mode {mode!r}")


def mean_and_se(values: Sequence[float]) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return float(v.mean()) if v.size else math.nan, 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))
