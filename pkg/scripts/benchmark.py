#!/usr/bin/env python3
"""Iterations-to-tolerance tables for the three benchmark problems.

Example::

    python scripts/benchmark.py --problems poisson eit --out results
"""
import argparse
import sys
import time
from pathlib import Path

from shapencg import cli

METHODS = "gd,lbfgs1,lbfgs3,lbfgs5,ncg-fr,ncg-pr,ncg-hs,ncg-dy,ncg-hz"


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--problems", nargs="+", default=["poisson", "eit", "stokes"], choices=cli.PROBLEMS)
    p.add_argument("--methods", default=METHODS)
    p.add_argument("--out", default="results")
    args = p.parse_args(argv)
    status = 0
    for problem in args.problems:
        start = time.perf_counter()
        out = Path(args.out) / problem
        rc = cli.main(["compare", "--problem", problem, "--methods", args.methods, "--out", str(out)])
        print(f"{problem}: {time.perf_counter() - start:.0f}s, tables in {out}", flush=True)
        status |= rc
    return status


if __name__ == "__main__":
    sys.exit(main())
