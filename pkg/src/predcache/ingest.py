"""Turn public check-in and bike-trip dumps into traces.

BrightKite: tab-separated ``user, timestamp, latitude, longitude, location``.
One trace per user, ordered by timestamp, kept if the offline optimum with a
cache of ``k`` misses at least ``min_opt`` times; the ``top_n`` longest
survivors are returned.

CitiBike: one trace per monthly trip CSV, the start-station ids in start-time
order, cut to the first ``max_events`` trips.
"""
from __future__ import annotations

import csv
import gzip
import io
import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

from predcache.policies import belady
from predcache.trace import Trace, remap_dense, write_trace

log = logging.getLogger(__name__)


class IngestError(RuntimeError):
    pass


@dataclass
class DatasetSpec:
    source: str
    path: Path
    k: int = 10
    top_n: int = 100
    min_opt: int = 50
    max_events: int = 25000

    def __post_init__(self):
        self.path = Path(self.path)
        if self.source not in ("brightkite", "citibike"):
            raise ValueError(f"unknown source {self.source!r}")
        if not self.path.exists():
            raise FileNotFoundError(self.path)
        if min(self.k, self.top_n, self.min_opt, self.max_events) < 1:
            raise ValueError("filters must be positive")


def _open_text(path: Path):
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8", errors="replace")
    return open(path, encoding="utf-8", errors="replace", newline="")


def ingest_brightkite(path, k: int = 10, top_n: int = 100, min_opt: int = 50) -> list[Trace]:
    per_user: dict[str, list[tuple[str, int, str]]] = defaultdict(list)
    skipped = 0
    with _open_text(Path(path)) as fh:
        for lineno, line in enumerate(fh):
            parts = line.rstrip("\r\n").split("\t")
            if len(parts) != 5 or not parts[0] or not parts[1] or not parts[4]:
                skipped += 1
                continue
            user, ts, _lat, _lon, loc = parts
            per_user[user].append((ts, lineno, loc))
    if skipped:
        log.warning("skipped %d malformed BrightKite lines", skipped)

    kept = []
    for user, rows in per_user.items():
        rows.sort()  # ISO-8601 timestamps sort lexicographically; ties keep file order
        trace, _ = remap_dense((loc for _, _, loc in rows), name=f"bk-{user}")
        if len(trace) and belady(trace, k).misses >= min_opt:
            kept.append(trace)
    if not kept:
        raise IngestError(f"no BrightKite user reaches {min_opt} optimal misses at k={k}")
    kept.sort(key=lambda t: (-len(t), t.name))
    return kept[:top_n]


START_ID = ("start station id", "start_station_id", "startstationid", "from_station_id")
START_TIME = ("start time", "starttime", "started_at", "start_time")


def _norm(col: str) -> str:
    return col.strip().strip('"').lower()


def read_citibike_file(path, max_events: int = 25000) -> Trace:
    with _open_text(Path(path)) as fh:
        reader = csv.reader(fh)
        header = [_norm(c) for c in next(reader, [])]
        sid = next((header.index(c) for c in START_ID if c in header), None)
        if sid is None:
            raise IngestError(f"{path}: no start-station id column")
        stime = next((header.index(c) for c in START_TIME if c in header), None)
        rows = []
        for j, row in enumerate(reader):
            if len(row) <= sid or not row[sid].strip():
                continue
            key = row[stime] if stime is not None and len(row) > stime else ""
            rows.append((key, j, row[sid].strip()))
    rows.sort()  # stable by (start time, file order)
    trace, _ = remap_dense((s for _, _, s in rows[:max_events]), name=f"citi-{Path(path).stem}")
    return trace


def ingest_citibike(directory, max_events: int = 25000) -> list[Trace]:
    d = Path(directory)
    files = sorted(p for p in d.iterdir() if p.name.endswith((".csv", ".csv.gz")))
    traces = []
    for p in files:
        try:
            traces.append(read_citibike_file(p, max_events))
        except IngestError as exc:
            log.warning("skipping %s", exc)
    if not traces:
        raise IngestError(f"no usable trip files in {d}")
    return traces


def write_dataset(traces: list[Trace], out_dir, k: int) -> Path:
    """Write one trace file per sequence plus ``manifest.csv``; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = out / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trace_id", "length", "universe", "opt_misses"])
        for t in traces:
            write_trace(t, out / f"{t.name}.trace", header=[t.name])
            w.writerow([t.name, len(t), t.universe, belady(t, k).misses])
    return manifest
