"""Command-line front end: ``predcache <subcommand> ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from predcache.policies import POLICIES, _backend, derive_seed, run_policy
from predcache.predictors import PREDICTORS, PlecoParams, make_predictions


def _add_run_flags(p):
    p.add_argument("--config", help="JSON experiment config; flags below override it")
    p.add_argument("--trace", action="append", default=None, help="trace file (repeatable)")
    p.add_argument("--synthetic", choices=["repeat", "uniform", "zipf"], help="generate traces")
    p.add_argument("--count", type=int, default=10, help="number of synthetic traces")
    p.add_argument("--length", type=int, default=2000, help="synthetic trace length")
    p.add_argument("--universe", type=int, default=100, help="universe for uniform/zipf traces")
    p.add_argument("--k", type=int)
    p.add_argument("--policy", action="append", choices=POLICIES)
    p.add_argument("--predictor", choices=PREDICTORS)
    p.add_argument("--sigma", action="append", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--seeds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--agg", choices=["mean-of-ratios", "ratio-of-sums"])
    p.add_argument("--pleco", help="JSON file with PLECO parameters")
    p.add_argument("--literal-misses", action="store_true",
                   help="do not count fetches into a not-yet-full cache")
    p.add_argument("--evictions", help="directory for per-policy eviction logs (first sigma, seed 0)")
    p.add_argument("--out", help="output CSV (default: stdout)")
    p.add_argument("--format", choices=["csv"], default="csv")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (output is identical)")


def _config(args):
    from predcache.experiment import ExperimentConfig

    base = {}
    if args.config:
        import json

        base = json.loads(Path(args.config).read_text())
    over = {
        "k": args.k, "policies": args.policy, "predictor": args.predictor, "sigmas": args.sigma,
        "gamma": args.gamma, "seeds": args.seeds, "seed": args.seed, "agg": args.agg,
        "pleco": args.pleco, "traces": args.trace,
    }
    base.update({k: v for k, v in over.items() if v is not None})
    if args.literal_misses:
        base["literal_misses"] = True
    if args.synthetic:
        base["synthetic"] = {"kind": args.synthetic, "count": args.count, "n": args.length,
                             "universe": args.universe}
    return ExperimentConfig(**base)


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args):
    from predcache.experiment import load_traces, run_experiment

    cfg = _config(args)
    _emit(run_experiment(cfg, jobs=args.jobs), args.out)
    if args.evictions:
        d = Path(args.evictions)
        d.mkdir(parents=True, exist_ok=True)
        pleco = PlecoParams.load(cfg.pleco) if cfg.predictor == "pleco" else None
        for ti, trace in enumerate(load_traces(cfg)):
            h = make_predictions(cfg.predictor, trace, cfg.sigmas[0],
                                 seed=derive_seed(cfg.seed, "predictor", ti, 0, 0), pleco=pleco)
            for pol in cfg.policies:
                res = run_policy(pol, trace, cfg.k, h, seed=derive_seed(cfg.seed, pol, ti, 0, 0),
                                 gamma=cfg.gamma)
                res.write_evictions(d / f"{trace.name or ti}.{pol}.csv")
    return 0


def cmd_bench(args):
    from predcache.bench import run_bench

    rows = run_bench(args.n, args.universe, args.k, args.repeat)
    lines = ["kernel,backend,seconds,speedup_vs_pure"]
    lines += [f"{r['kernel']},{r['backend']},{r['seconds']:.6f},{r['speedup_vs_pure']:.2f}" for r in rows]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_ingest(args):
    from predcache.ingest import ingest_brightkite, ingest_citibike, write_dataset

    if args.source == "brightkite":
        traces = ingest_brightkite(args.path, k=args.k, top_n=args.top_n, min_opt=args.min_opt)
    else:
        traces = ingest_citibike(args.path, max_events=args.max_events)
    manifest = write_dataset(traces, args.out, args.k)
    lengths = [len(t) for t in traces]
    uniq = [t.universe for t in traces]
    print(f"{len(traces)} traces, mean length {np.mean(lengths):.1f}, "
          f"unique elements {min(uniq)}-{max(uniq)}; manifest {manifest}")
    return 0


def cmd_adversarial(args):
    from predcache.experiment import ADV_COLUMNS, adversarial_report, write_rows
    import io

    kw = {}
    if args.T:
        kw = {"blind_T": tuple(t for t in args.T if t >= 4), "fixed_T": tuple(t for t in args.T if t >= 16)}
    rows, failures = adversarial_report(**kw)
    buf = io.StringIO()
    write_rows(rows, ADV_COLUMNS, buf)
    _emit(buf.getvalue(), args.out)
    for f in failures:
        print(f"FAIL {f}", file=sys.stderr)
    return 1 if failures else 0


def cmd_search_demo(args):
    from predcache.search import predicted_search, probe_budget

    rng = np.random.default_rng(args.seed)
    n = args.n
    arr = np.sort(rng.choice(10 * n, size=n, replace=False)).tolist()
    lines = ["error,queries,mean_probes,max_probes,budget"]
    e = 0
    while e < n:
        probes = []
        for _ in range(args.queries):
            t = int(rng.integers(0, n))
            h = int(np.clip(t + (e if rng.random() < 0.5 else -e), 0, n - 1))
            probes.append(predicted_search(arr, arr[t], h).probes)
        lines.append(f"{e},{args.queries},{np.mean(probes):.3f},{max(probes)},{probe_budget(0, e):.3f}")
        e = 1 if e == 0 else e * 2
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_verify(args):
    from predcache.experiment import verify_report

    problems = verify_report(args.report)
    for p in problems:
        print(p, file=sys.stderr)
    print("ok" if not problems else f"{len(problems)} problem(s)")
    return 1 if problems else 0


def build_parser():
    ap = argparse.ArgumentParser(prog="predcache", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--backend", choices=["pure", "compiled"], help="force a kernel backend")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("simulate", help="run policies over traces and write a CSV report")
    _add_run_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="time compiled vs pure-Python kernels")
    p.add_argument("--n", type=int, default=25000)
    p.add_argument("--universe", type=int, default=700)
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("ingest", help="convert BrightKite / CitiBike dumps to trace files")
    p.add_argument("source", choices=["brightkite", "citibike"])
    p.add_argument("path", help="check-in file (brightkite) or directory of trip CSVs (citibike)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--top-n", type=int, default=100)
    p.add_argument("--min-opt", type=int, default=50)
    p.add_argument("--max-events", type=int, default=25000)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("adversarial", help="run the blind-oracle counterexamples")
    p.add_argument("--T", type=int, action="append", help="suffix length (repeatable)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_adversarial)

    p = sub.add_parser("search-demo", help="probe counts of prediction-started binary search")
    p.add_argument("--n", type=int, default=1 << 16)
    p.add_argument("--queries", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_search_demo)

    p = sub.add_parser("verify-report", help="recompute a report's aggregate rows")
    p.add_argument("report")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.backend:
        _backend.use(args.backend)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
