"""Ingest + aggregate throughput on a synthetic stream.

    python3 benchmarks/bench_ingest.py [--tweets 1000000] [--floor 60]

The input file is written first and not timed.  Exits 1 if ingestion takes
longer than ``--floor`` seconds.
"""
import argparse
import json
import sys
import tempfile
import time
from pathlib import Path

from seminar import corpus, synth


def run(n_tweets: int = 1_000_000, n_users: int = 10_000, workdir=None) -> dict:
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        path = Path(tmp) / "bulk.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            fh.writelines(synth.bulk_lines(n_tweets, n_users))
        t0 = time.perf_counter()
        res = corpus.ingest_files([path], corpus.sample_lexicon("sentiment"),
                                  corpus.sample_lexicon("vulgar"), threads=1)
        elapsed = time.perf_counter() - t0
    return {"tweets": res.lines, "users": len(res.aggregates), "filtered": res.filtered,
            "malformed": res.malformed, "seconds": round(elapsed, 2),
            "tweets_per_second": round(res.lines / elapsed)}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tweets", type=int, default=1_000_000)
    ap.add_argument("--users", type=int, default=10_000)
    ap.add_argument("--floor", type=float, default=60.0, help="seconds allowed")
    args = ap.parse_args(argv)
    out = run(args.tweets, args.users)
    out["floor_seconds"] = args.floor
    out["pass"] = out["seconds"] < args.floor
    print(json.dumps(out))
    return 0 if out["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
