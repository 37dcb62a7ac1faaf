"""Verify that every rational periodic point of (y, x + y^2 + b) has period in
{1, 2, 3, 4, 6, 8} for all b with H(b) <= T.

    python scripts/batch_proposition.py --max-height 100 --workers 4 --out runs/t100
"""

import argparse
import json
import logging
import os
import time
from pathlib import Path

from henon.search import batch_verify, write_report


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-height", type=int, default=100)
    ap.add_argument("--workers", type=int, default=int(os.environ.get("HENON_WORKERS", os.cpu_count() or 1)))
    ap.add_argument("--out", type=Path, default=Path("runs/batch"))
    ap.add_argument("--resume", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    args.out.mkdir(parents=True, exist_ok=True)
    ck = args.out / f"checkpoint_T{args.max_height}.tsv"
    t0 = time.perf_counter()
    report = batch_verify(args.max_height, checkpoint=ck, resume=args.resume, workers=args.workers,
                          progress=lambda n: logging.info("%d parameters done", n))
    elapsed = time.perf_counter() - t0
    write_report(report, args.out / f"report_T{args.max_height}.json")
    summary = report.to_dict()
    print(json.dumps({"elapsed_s": round(elapsed, 1), **summary}, indent=2))


if __name__ == "__main__":
    main()
