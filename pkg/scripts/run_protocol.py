#!/usr/bin/env python3
"""Strategy-library sweep at one preset; at micro also the exact extraction table."""

import argparse

from nmx.harness import ProtocolSuiteConfig, run_protocol_suite
from nmx.harness.report import write_csv, write_json


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="small")
    ap.add_argument("--trials", type=int, default=10**4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/protocol")
    args = ap.parse_args()
    micro = args.preset == "micro"
    cfg = ProtocolSuiteConfig(args.preset, trials=args.trials, seed=args.seed,
                              micro_ks=(6, 8, 10, 12) if micro else (),
                              exhaustive_k=8 if micro else None)
    report = run_protocol_suite(cfg)
    write_json(report, f"{args.out}_{args.preset}.json")
    write_csv(report["strategies"], f"{args.out}_{args.preset}.csv")
    for row in report["strategies"]:
        print(f"{row['strategy']:<15} accept|tampered={row['alice_accept_tampered']:>6} "
              f"violations={row['robustness_violations']:>3} correct={row['correctness_rate']:.3f}")
    if micro:
        for r in report["extraction"]["rows"]:
            print(f"k={r['k']:>2} tv={r['tv']} ({r['tv_float']:.4f})")
    print("ok" if report["ok"] else "VIOLATION")


if __name__ == "__main__":
    main()
