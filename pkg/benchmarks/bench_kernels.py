"""Compiled vs pure-Python kernel timings.

    python benchmarks/bench_kernels.py [--n 25000 --k 100]
"""
import argparse

from predcache.bench import run_bench


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=25000)
    ap.add_argument("--universe", type=int, default=700)
    ap.add_argument("--k", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rows = run_bench(args.n, args.universe, args.k, args.repeat)
    print(f"{'kernel':<20}{'backend':<10}{'seconds':>12}{'speedup':>10}")
    for r in rows:
        print(f"{r['kernel']:<20}{r['backend']:<10}{r['seconds']:>12.5f}{r['speedup_vs_pure']:>10.1f}")


if __name__ == "__main__":
    main()
