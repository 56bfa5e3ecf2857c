#!/usr/bin/env python3
"""Measure ingest throughput and point-read latency of one node.

Appends a configurable number of values to a single entry (each value
distinct, so nothing is deduplicated), then times current-value reads
and a full-window history read. With ``--data DIR`` the node journals
every write, which is the realistic persistent configuration; without
it the store is memory-only.
"""

from __future__ import annotations

import argparse
import statistics
import time
from datetime import datetime, timedelta, timezone
from pathlib import Path

from nimkit.node import NimNode
from nimkit.store import StoreConfig

BASE = datetime(2026, 1, 1, tzinfo=timezone.utc)

MODEL = """\
Sample {
  String reading;
}
"""


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--appends", type=int, default=100_000,
                        help="values to append to one entry (default: 100000)")
    parser.add_argument("--reads", type=int, default=1_000,
                        help="current-value reads to time (default: 1000)")
    parser.add_argument("--data", type=Path, default=None,
                        help="journal directory (enables persistence)")
    args = parser.parse_args()

    now = BASE
    node = NimNode(
        StoreConfig(node_location="local", data_dir=args.data, clock=lambda: now)
    )
    node.register_model(MODEL)
    iid = node.ingest("Sample", {"reading": "v"})
    now = BASE + timedelta(seconds=args.appends + 1)

    t0 = time.perf_counter()
    for i in range(args.appends):
        result = node.append_value(
            "Sample", iid, "reading", f"v{i}",
            timestamp=BASE + timedelta(seconds=i),
        )
        if not result.stored:
            raise SystemExit(f"append {i} unexpectedly {result.status}")
    append_s = time.perf_counter() - t0

    samples = []
    for _ in range(args.reads):
        t0 = time.perf_counter()
        tv = node.current_value("Sample", iid, "reading")
        samples.append(time.perf_counter() - t0)
    assert tv is not None and tv.value == f"v{args.appends - 1}"

    t0 = time.perf_counter()
    window = node.history("Sample", iid, "reading",
                          BASE, BASE + timedelta(seconds=args.appends))
    history_s = time.perf_counter() - t0

    mode = f"journaled to {args.data}" if args.data else "memory-only"
    print(f"store: {mode}")
    print(f"appends: {args.appends} in {append_s:.2f}s "
          f"({args.appends / append_s:,.0f} ops/s)")
    print(f"current-value reads: {args.reads}, "
          f"mean {statistics.mean(samples) * 1e6:.1f}us, "
          f"p99 {statistics.quantiles(samples, n=100)[98] * 1e6:.1f}us, "
          f"max {max(samples) * 1e6:.1f}us")
    print(f"history: {len(window)} values materialised in {history_s * 1e3:.1f}ms")
    node.close()


if __name__ == "__main__":
    main()
