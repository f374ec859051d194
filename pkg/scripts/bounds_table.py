#!/usr/bin/env python3
"""Print the seed-length comparison table for a few (n, k) pairs."""

import argparse

from nmx.harness import comparison_table
from nmx.harness.report import to_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c1", type=float, default=10)
    args = ap.parse_args()
    rows = []
    for n, k in ((256, 160), (1024, 600), (4096, 2100)):
        rows.extend(comparison_table(n, k, c1=args.c1))
    print(to_csv(rows), end="")


if __name__ == "__main__":
    main()
