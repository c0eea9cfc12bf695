"""Run every CLI experiment with its default config and print a summary.

Usage: python3 scripts/run_experiments.py [--out DIR] [--seed S] [--only NAME ...]

Reports land in DIR/<experiment>/report.json. The sums experiment takes a
few minutes on one core; the rest finish in well under a minute each.
"""

import argparse
import time
from pathlib import Path

from clusterlab.cli import EXPERIMENTS, load_config, run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="clusterlab-out")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--only", nargs="*", default=None)
    args = ap.parse_args()
    names = args.only or list(EXPERIMENTS)
    failed = []
    for name in names:
        cfg = load_config(name, seed=args.seed)
        t0 = time.perf_counter()
        rep = run(cfg, args.threads, Path(args.out) / name)
        dt = time.perf_counter() - t0
        print(f"{name:16s} {'PASS' if rep['passed'] else 'FAIL'}  {dt:7.1f}s  {rep['out']}")
        if not rep["passed"]:
            failed.append(name)
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
