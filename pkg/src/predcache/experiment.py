"""Experiment orchestration and CSV reports."""
from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from predcache import analysis
from predcache.policies import POLICIES, belady, blind_oracle, blind_oracle_fixed, derive_seed, run_policy
from predcache.predictors import PREDICTORS, PlecoParams, make_predictions, trace_losses
from predcache.trace import (Trace, gen_blind_counterexample, gen_fixed_blind_counterexample,
                             gen_random_trace, gen_repeat_consumption_trace, read_trace)

SCHEMA = "predcache-report v1"

RUN_COLUMNS = [
    "row_type", "trace", "policy", "predictor", "sigma", "seed", "k", "gamma", "n", "universe",
    "misses", "opt", "ratio", "ratio_se", "runs", "clean", "eta_c", "eta_1", "eta_2", "eta_ed",
    "eta_1_per_request", "bound_t2", "bound_t4", "bound_t5",
]


@dataclass
class ExperimentConfig:
    traces: list = field(default_factory=list)  # trace file paths
    synthetic: dict | None = None  # generator settings, see load_traces
    k: int = 10
    policies: list = field(default_factory=lambda: ["lru", "marker", "blind", "predictive-marker"])
    predictor: str = "lognormal"
    sigmas: list = field(default_factory=lambda: [0.0])
    gamma: float = 1.0
    seeds: int = 1
    seed: int = 0
    agg: str = "mean-of-ratios"
    pleco: str | None = None
    literal_misses: bool = False

    def __post_init__(self):
        if self.seeds < 1:
            raise ValueError("seeds must be at least 1")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if any(s < 0 for s in self.sigmas):
            raise ValueError("sigma values must be non-negative")
        if self.predictor not in PREDICTORS:
            raise ValueError(f"unknown predictor {self.predictor!r}")
        for p in self.policies:
            if p not in POLICIES:
                raise ValueError(f"unknown policy {p!r}")
        if self.agg not in ("mean-of-ratios", "ratio-of-sums"):
            raise ValueError(f"unknown aggregation mode {self.agg!r}")
        if not self.traces and not self.synthetic:
            raise ValueError("config names no traces")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls(**json.loads(Path(path).read_text()))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def load_traces(cfg: ExperimentConfig) -> list[Trace]:
    """Trace files first, then generated ones.

    ``synthetic`` keys: ``kind`` (``repeat``, ``uniform``, ``zipf``), ``count``,
    ``n``, ``universe`` (uniform/zipf), ``s`` (zipf), ``seed``.
    """
    out = []
    for p in cfg.traces:
        try:
            out.append(read_trace(p))
        except (OSError, ValueError) as exc:
            raise ValueError(f"cannot read trace {p}: {exc}") from exc
    gen = cfg.synthetic
    if gen:
        kind = gen.get("kind", "repeat")
        base = int(gen.get("seed", cfg.seed))
        for j in range(int(gen.get("count", 1))):
            s = derive_seed(base, "trace", j)
            if kind == "repeat":
                out.append(gen_repeat_consumption_trace(int(gen.get("n", 2000)), seed=s))
            elif kind in ("uniform", "zipf"):
                out.append(gen_random_trace(int(gen["universe"]), int(gen.get("n", 2000)), kind,
                                            float(gen.get("s", 1.0)), seed=s))
            else:
                raise ValueError(f"unknown synthetic kind {kind!r}")
            out[-1] = Trace(out[-1].requests, out[-1].universe, name=f"{kind}-{j}")
    return out


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return f"{x:.10g}"
    return str(x)


def simulate_runs(cfg: ExperimentConfig, traces: list[Trace], jobs: int = 1):
    """Yield one dict per (trace, sigma, seed, policy) in a fixed order.

    With ``jobs > 1`` traces are simulated in worker processes; results are
    consumed in trace order, so the output does not depend on ``jobs``.
    """
    if jobs > 1 and len(traces) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for rows in pool.map(_trace_rows, [cfg] * len(traces), range(len(traces)), traces):
                yield from rows
        return
    for ti, trace in enumerate(traces):
        yield from _trace_rows(cfg, ti, trace)


def _trace_rows(cfg: ExperimentConfig, ti: int, trace: Trace) -> list[dict]:
    pleco = PlecoParams.load(cfg.pleco) if cfg.predictor == "pleco" else None
    sigmas = cfg.sigmas if cfg.predictor == "lognormal" else [0.0]
    out = []
    if len(trace) == 0:
        raise ValueError(f"trace {trace.name or ti} is empty")
    opt_run = belady(trace, cfg.k)
    opt = opt_run.misses_literal if cfg.literal_misses else opt_run.misses
    opt = max(opt, 1)
    for si, sigma in enumerate(sigmas):
        for r in range(cfg.seeds):
            h = make_predictions(cfg.predictor, trace, sigma,
                                 seed=derive_seed(cfg.seed, "predictor", ti, si, r), pleco=pleco)
            loss = trace_losses(trace, h)
            bounds = {
                "bound_t2": analysis.chain_bound(loss.eta_1, opt, cfg.k, 1.0, "l1"),
                "bound_t4": analysis.chain_bound(loss.eta_1, opt, cfg.k, cfg.gamma, "l1"),
                "bound_t5": analysis.edit_distance_bound(loss.eta_ed, opt, cfg.k),
            }
            for pol in cfg.policies:
                res = run_policy(pol, trace, cfg.k, h, seed=derive_seed(cfg.seed, pol, ti, si, r),
                                 gamma=cfg.gamma)
                misses = res.misses_literal if cfg.literal_misses else res.misses
                out.append({
                    "row_type": "run", "trace": trace.name or str(ti), "policy": pol,
                    "predictor": cfg.predictor, "sigma": float(sigma), "seed": r, "k": cfg.k,
                    "gamma": float(cfg.gamma), "n": len(trace), "universe": trace.universe,
                    "misses": misses, "opt": opt, "ratio": misses / opt, "ratio_se": "",
                    "runs": 1, "clean": res.clean_total if len(res.clean_counts) else "",
                    "eta_c": loss.eta_c, "eta_1": loss.eta_1, "eta_2": loss.eta_2,
                    "eta_ed": loss.eta_ed, "eta_1_per_request": loss.eta_1 / len(trace),
                    **bounds,
                })
    return out


def aggregate(rows, mode: str = "mean-of-ratios") -> list[dict]:
    groups = defaultdict(list)
    for row in rows:
        groups[(row["policy"], row["predictor"], float(row["sigma"]))].append(row)
    out = []
    for (pol, pred, sigma), rs in groups.items():
        ratios = [float(r["misses"]) / float(r["opt"]) for r in rs]
        value = analysis.competitive_ratio([float(r["misses"]) for r in rs],
                                           [float(r["opt"]) for r in rs], mode)
        _, se = analysis.mean_and_se(ratios)
        first = rs[0]
        out.append({
            "row_type": "agg", "trace": "*", "policy": pol, "predictor": pred, "sigma": sigma,
            "seed": "*", "k": first["k"], "gamma": float(first["gamma"]), "n": "", "universe": "",
            "misses": float(np.mean([float(r["misses"]) for r in rs])),
            "opt": float(np.mean([float(r["opt"]) for r in rs])),
            "ratio": value, "ratio_se": se, "runs": len(rs), "clean": "",
            "eta_c": "", "eta_1": "", "eta_2": "", "eta_ed": "",
            "eta_1_per_request": float(np.mean([float(r["eta_1_per_request"]) for r in rs])),
            "bound_t2": float(np.mean([float(r["bound_t2"]) for r in rs])),
            "bound_t4": float(np.mean([float(r["bound_t4"]) for r in rs])),
            "bound_t5": float(np.mean([float(r["bound_t5"]) for r in rs])),
        })
    return out


def write_report(rows, agg_rows, fh, cfg: ExperimentConfig | None = None) -> None:
    fh.write(f"# {SCHEMA}\n")
    if cfg is not None:
        fh.write(f"# agg={cfg.agg}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(RUN_COLUMNS)
    for row in list(rows) + list(agg_rows):
        w.writerow([_fmt(row[c]) for c in RUN_COLUMNS])


def run_experiment(cfg: ExperimentConfig, out=None, jobs: int = 1) -> str:
    """Simulate everything in ``cfg``; write the CSV to ``out`` (path) and return it."""
    traces = load_traces(cfg)
    rows = list(simulate_runs(cfg, traces, jobs))
    buf = io.StringIO()
    write_report(rows, aggregate(rows, cfg.agg), buf, cfg)
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text


def read_report(path_or_text) -> tuple[dict, list[dict]]:
    text = Path(path_or_text).read_text() if not str(path_or_text).startswith("#") else path_or_text
    meta = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            item = line[1:].strip()
            if "=" in item:
                k, v = item.split("=", 1)
                meta[k.strip()] = v.strip()
            else:
                meta["schema"] = item
        else:
            body.append(line)
    return meta, list(csv.DictReader(body))


def verify_report(path_or_text, tol: float = 1e-8) -> list[str]:
    """Recompute the aggregate block from the run rows; return mismatch messages."""
    meta, rows = read_report(path_or_text)
    if meta.get("schema") != SCHEMA:
        return [f"unexpected schema {meta.get('schema')!r}"]
    runs = [r for r in rows if r["row_type"] == "run"]
    written = {(r["policy"], r["predictor"], float(r["sigma"])): r for r in rows if r["row_type"] == "agg"}
    problems = []
    for agg in aggregate(runs, meta.get("agg", "mean-of-ratios")):
        key = (agg["policy"], agg["predictor"], agg["sigma"])
        got = written.pop(key, None)
        if got is None:
            problems.append(f"missing aggregate row for {key}")
            continue
        for col in ("ratio", "ratio_se", "misses", "opt", "runs"):
            a, b = float(agg[col]), float(got[col])
            if abs(a - b) > tol * max(1.0, abs(a)):
                problems.append(f"{key} {col}: recomputed {a!r}, report has {b!r}")
    for key in written:
        problems.append(f"aggregate row {key} has no run rows")
    return problems


# --- adversarial constructions ------------------------------------------------

ADV_COLUMNS = ["construction", "variant", "T", "alg_misses", "opt_misses", "ratio",
               "eta_1_per_T", "check", "ok"]


def adversarial_report(blind_T=(16, 64, 256, 1000, 4096), fixed_T=tuple(2 ** e for e in range(8, 17))):
    """Run both constructions; misses and OPT are counted after the warm-up prefix.

    Returns ``(rows, failures)``.
    """
    rows, failures = [], []

    def add(row):
        rows.append(row)
        if not row["ok"]:
            failures.append(f"{row['construction']}/{row['variant']} T={row['T']}: {row['check']}")

    for T in blind_T:
        trace, h = gen_blind_counterexample(T)
        alg = blind_oracle(trace, 2, h).misses - 2
        opt = belady(trace, 2).misses - 2
        eta = trace_losses(trace, h).eta_1 / T
        add({"construction": "blind", "variant": "exact", "T": T, "alg_misses": alg,
             "opt_misses": opt, "ratio": alg / opt, "eta_1_per_T": eta,
             "check": "alg == T and opt == 1", "ok": alg == T and opt == 1})
    for variant in ("expired", "horizon"):
        for T in fixed_T:
            trace, h = gen_fixed_blind_counterexample(T, variant)
            alg = blind_oracle_fixed(trace, 3, h).misses - 3
            opt = belady(trace, 3).misses - 3
            eta = trace_losses(trace, h).eta_1 / T
            ok = opt == 2 and alg <= 2 * math.log2(T) + 4 and alg >= math.log2(T) - 1
            check = "opt == 2 and log2(T)-1 <= alg <= 2 log2(T) + 4"
            if variant == "expired":
                ok = ok and eta <= 4
                check += " and eta_1/T <= 4"
            add({"construction": "fixed", "variant": variant, "T": T, "alg_misses": alg,
                 "opt_misses": opt, "ratio": alg / opt, "eta_1_per_T": eta, "check": check, "ok": ok})
    return rows, failures


def write_rows(rows, columns, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
