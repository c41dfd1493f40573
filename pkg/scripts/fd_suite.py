#!/usr/bin/env python3
"""Finite-difference check of the assembled shape derivative for every problem."""
import argparse
import sys
import time
from pathlib import Path

from shapencg import cli


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--fields", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results/fd")
    args = p.parse_args(argv)
    failed = []
    for problem in cli.PROBLEMS:
        start = time.perf_counter()
        cfg = cli.resolve_config({}, {"problem": problem, "fd_fields": args.fields, "seed": args.seed,
                                      "out": str(Path(args.out) / problem)})
        text, ok = cli.derivative_report(cfg)
        cli.atomic_write_text(Path(cfg.out) / "fd_report.txt", text)
        print(f"{problem}: {'PASS' if ok else 'FAIL'} ({time.perf_counter() - start:.0f}s)", flush=True)
        if not ok:
            failed.append(problem)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
