import csv
import gzip
import logging
from pathlib import Path

import numpy as np
import pytest

from predcache import policies
from predcache.ingest import (DatasetSpec, IngestError, ingest_brightkite, ingest_citibike,
                              read_citibike_file, write_dataset)
from predcache.trace import read_trace

DATA = Path(__file__).parent / "data"
BK = DATA / "brightkite_sample.txt"
CITI = DATA / "citibike_sample.csv"


def test_brightkite_filter_keeps_one_user():
    traces = ingest_brightkite(BK, k=2, min_opt=5)
    assert [t.name for t in traces] == ["bk-101"]
    assert len(traces[0]) == 40
    assert policies.belady(traces[0], 2).misses >= 5


def test_brightkite_sorted_by_timestamp():
    rows = [line.split("\t") for line in BK.read_text().splitlines() if line.startswith("202\t")]
    rows.sort(key=lambda r: r[1])
    expected = [r[4] for r in rows]
    t = ingest_brightkite(BK, k=1, min_opt=1, top_n=3)
    bk202 = next(x for x in t if x.name == "bk-202")
    first = {}
    for loc in expected:
        first.setdefault(loc, len(first))
    assert bk202.requests.tolist() == [first[loc] for loc in expected]


def test_brightkite_top_n_by_length():
    t = ingest_brightkite(BK, k=1, min_opt=1, top_n=2)
    assert [x.name for x in t] == ["bk-101", "bk-202"]


def test_brightkite_nothing_survives():
    with pytest.raises(IngestError):
        ingest_brightkite(BK, k=2, min_opt=10_000)


def test_brightkite_gzip(tmp_path):
    p = tmp_path / "bk.txt.gz"
    with gzip.open(p, "wb") as fh:
        fh.write(BK.read_bytes())
    assert len(ingest_brightkite(p, k=2, min_opt=5)) == 1


def test_citibike_three_trips():
    t = read_citibike_file(CITI)
    assert len(t) == 3
    # sorted by start time: 3092 first, then 72 twice
    assert t.requests.tolist() == [0, 1, 1]


def test_citibike_truncation(tmp_path):
    p = tmp_path / "201702-citibike-tripdata.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["starttime", "start station id"])
        for j in range(30_000):
            w.writerow([f"2017-02-01 {j // 3600:02d}:{j // 60 % 60:02d}:{j % 60:02d}", 100 + j % 650])
    t = read_citibike_file(p)
    assert len(t) == 25_000
    assert len(read_citibike_file(p, max_events=10)) == 10


def test_citibike_missing_column_skipped(tmp_path, caplog):
    (tmp_path / "a.csv").write_text(CITI.read_text())
    (tmp_path / "b.csv").write_text("starttime,end station id\n2017-01-01,5\n")
    (tmp_path / "notes.txt").write_text("ignored")
    with caplog.at_level(logging.WARNING):
        traces = ingest_citibike(tmp_path)
    assert len(traces) == 1
    assert "no start-station id column" in caplog.text


def test_citibike_empty_directory(tmp_path):
    with pytest.raises(IngestError):
        ingest_citibike(tmp_path)


def test_citibike_newer_column_names(tmp_path):
    p = tmp_path / "202001.csv"
    p.write_text("ride_id,started_at,start_station_id\nx,2020-01-01 00:02,B\ny,2020-01-01 00:01,A\n")
    assert read_citibike_file(p).requests.tolist() == [0, 1]


def test_deterministic_and_manifest(tmp_path):
    a = ingest_brightkite(BK, k=1, min_opt=1)
    b = ingest_brightkite(BK, k=1, min_opt=1)
    assert all(np.array_equal(x.requests, y.requests) for x, y in zip(a, b))
    manifest = write_dataset(a, tmp_path / "out", k=1)
    rows = list(csv.DictReader(open(manifest)))
    assert [r["trace_id"] for r in rows] == [t.name for t in a]
    back = read_trace(tmp_path / "out" / "bk-101.trace")
    assert np.array_equal(back.requests, a[0].requests)
    assert int(rows[0]["opt_misses"]) == policies.belady(a[0], 1).misses


def test_dataset_spec_validation(tmp_path):
    with pytest.raises(ValueError):
        DatasetSpec("netflix", BK)
    with pytest.raises(FileNotFoundError):
        DatasetSpec("citibike", tmp_path / "missing")
    assert DatasetSpec("brightkite", str(BK)).path == BK
