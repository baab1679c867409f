"""Next-arrival predictors and prediction-loss metrics.

A predictor turns a trace into one prediction per request.  Predictions for
request ``i`` only use the request sequence up to ``i`` (or, for the noisy
oracles, the true label of ``i`` itself plus noise).
"""
from __future__ import annotations

import json
import math
from bisect import bisect_left
from dataclasses import dataclass, asdict
from importlib import resources
from pathlib import Path

import numpy as np


def perfect_predictions(trace) -> np.ndarray:
    return trace.next_arrivals.astype(np.float64)


def lognormal_predictions(trace, sigma: float, seed: int = 0) -> np.ndarray:
    """True label plus i.i.d. LogNormal(0, sigma) noise; ``sigma = 0`` adds exactly 1."""
    if not math.isfinite(sigma) or sigma < 0:
        raise ValueError("sigma must be finite and non-negative")
    rng = np.random.default_rng(seed)
    eps = rng.lognormal(0.0, sigma, size=len(trace))
    return trace.next_arrivals + eps


def recency_predictions(trace) -> np.ndarray:
    """``-i`` for a request at position ``i``: older elements look further away."""
    return -np.arange(1, len(trace) + 1, dtype=np.float64)


@dataclass(frozen=True)
class PlecoParams:
    """Recency-weighted reappearance model.

    Each earlier arrival of the element, ``d`` steps ago, contributes
    ``scale * d**-alpha * exp(-d / tau)`` to ``p``.  ``p`` is clipped to
    ``[floor, 1]``; an element with no earlier arrival gets ``prior``.
    Only the latest ``max_history`` arrivals are summed.
    """

    alpha: float = 1.0
    scale: float = 0.5
    tau: float = 500.0
    prior: float = 0.002
    floor: float = 1e-6
    max_history: int = 256

    def __post_init__(self):
        for name in ("alpha", "scale", "tau", "prior", "floor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"PLECO parameter {name} must be positive")
        if self.max_history < 1:
            raise ValueError("max_history must be at least 1")

    @classmethod
    def load(cls, path: str | Path | None = None) -> "PlecoParams":
        if path is None:
            text = resources.files("predcache.data").joinpath("pleco_default.json").read_text()
        else:
            text = Path(path).read_text()
        raw = json.loads(text)
        return cls(**{k: v for k, v in raw.items() if not k.startswith("_")})

    def to_dict(self) -> dict:
        return asdict(self)


def pleco_probability(params: PlecoParams, position: int, history) -> float:
    """Reappearance probability from earlier arrival positions (all ``< position``)."""
    past = [t for t in history if t < position][-params.max_history:]
    if not past:
        return params.prior
    d = position - np.asarray(past, dtype=float)
    s = params.scale * float(np.sum(d ** -params.alpha * np.exp(-d / params.tau)))
    return min(1.0, max(params.floor, s))


def pleco_predict(params: PlecoParams, view) -> float:
    """Prediction ``position + 1/p`` for a :class:`~predcache.trace.FeatureView`."""
    p = pleco_probability(params, view.position, view.history)
    return view.position + 1.0 / p


def pleco_predictions(trace, params: PlecoParams | None = None) -> np.ndarray:
    params = params or PlecoParams.load()
    seen: dict[int, list[int]] = {}
    out = np.empty(len(trace), dtype=np.float64)
    for i, z in enumerate(trace.requests.tolist(), 1):
        hist = seen.setdefault(z, [])
        out[i - 1] = i + 1.0 / pleco_probability(params, i, hist)
        hist.append(i)
    return out


PREDICTORS = ("perfect", "lognormal", "pleco", "recency")


def make_predictions(kind: str, trace, sigma: float = 0.0, seed: int = 0,
                     pleco: PlecoParams | None = None) -> np.ndarray:
    if kind == "perfect":
        return perfect_predictions(trace)
    if kind == "lognormal":
        return lognormal_predictions(trace, sigma, seed)
    if kind == "pleco":
        return pleco_predictions(trace, pleco)
    if kind == "recency":
        return recency_predictions(trace)
    raise ValueError(f"unknown predictor {kind!r}")


# --- losses -----------------------------------------------------------------

@dataclass(frozen=True)
class LossReport:
    eta_c: int
    eta_1: float
    eta_2: float
    eta_ed: int
    n: int


def lis_length(seq) -> int:
    """Length of the longest strictly increasing subsequence (patience sorting)."""
    tails: list = []
    for x in seq:
        j = bisect_left(tails, x)
        if j == len(tails):
            tails.append(x)
        else:
            tails[j] = x
    return len(tails)


def arrival_orders(requests, predictions, labels):
    """Pairs ``(element, occurrence)`` in true and in predicted arrival order.

    The prediction made at a request refers to the element's next arrival,
    i.e. occurrence ``j + 1`` if the request is occurrence ``j``.  Requests
    whose element never returns contribute no pair.  Ties in predicted time
    are broken by element id.
    """
    n = len(requests)
    occ: dict[int, int] = {}
    pairs = []
    for i in range(n):
        z = int(requests[i])
        occ[z] = occ.get(z, 0) + 1
        if labels[i] <= n:
            pairs.append((float(predictions[i]), z, int(labels[i]), occ[z] + 1))
    true_order = [(z, o) for _, z, _, o in sorted(pairs, key=lambda t: t[2])]
    pred_order = [(z, o) for _, z, _, o in sorted(pairs, key=lambda t: (t[0], t[1], t[2]))]
    return true_order, pred_order


def edit_distance_loss(requests, predictions, labels) -> int:
    """Insert/delete edit distance between true and predicted arrival orders.

    Both orders permute the same pairs, so this is ``2 * (T - LIS)`` with the
    predicted order written as ranks in the true order.
    """
    true_order, pred_order = arrival_orders(requests, predictions, labels)
    rank = {pair: r for r, pair in enumerate(true_order)}
    return 2 * (len(true_order) - lis_length(rank[p] for p in pred_order))


def losses(predictions, labels, requests=None) -> LossReport:
    """All loss metrics; ``eta_ed`` needs ``requests`` and is 0 without them."""
    h = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if h.shape != y.shape:
        raise ValueError(f"length mismatch: {h.shape} predictions vs {y.shape} labels")
    d = y - h
    eta_c = int(np.count_nonzero(np.floor(h + 0.5) != y))
    eta_ed = edit_distance_loss(requests, h, y) if requests is not None else 0
    return LossReport(eta_c, float(np.abs(d).sum()), float((d * d).sum()), eta_ed, int(h.size))


def trace_losses(trace, predictions) -> LossReport:
    return losses(predictions, trace.next_arrivals, trace.requests)
