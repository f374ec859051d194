#!/usr/bin/env python3
"""Exhaustive preimage audits at ell = 3 and p in {5, 7}, plus the sampled ell = 5 run."""

import argparse

from nmx.harness import AuditConfig, run_preimage_audits
from nmx.harness.report import write_json


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=10**6)
    ap.add_argument("--out", default="results/audits.json")
    args = ap.parse_args()
    runs = [
        AuditConfig(claims=("independence",), ell=ell) for ell in (3, 4, 5, 6)
    ] + [
        AuditConfig(claims=("sum", "linear"), ell=3, embed="top"),
        AuditConfig(claims=("sum", "linear"), ell=3, embed="identity"),
        AuditConfig(claims=("linear-sampled",), ell=5, embed="identity", samples=args.samples),
        AuditConfig(claims=("fp",), p=5),
        AuditConfig(claims=("fp",), p=7),
    ]
    reports = []
    for cfg in runs:
        rep = run_preimage_audits(cfg)
        reports.append(rep)
        for a in rep["audits"]:
            print(f"{a['claim']:<26} {a['params']}  checked={a['functions_checked']} "
                  f"max={a['max_preimages']} ok={a['ok']} ({a['seconds']}s)")
    write_json({"runs": reports, "ok": all(r["ok"] for r in reports)}, args.out)


if __name__ == "__main__":
    main()
