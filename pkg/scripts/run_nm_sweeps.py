#!/usr/bin/env python3
"""Run every sweep config in a directory and write JSON + CSV reports."""

import argparse
from pathlib import Path

from nmx.harness import ExperimentConfig, run_nm_sweep
from nmx.harness.report import write_csv, write_json


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", default="configs")
    ap.add_argument("--out", default="results/sweeps")
    args = ap.parse_args()
    out = Path(args.out)
    for path in sorted(Path(args.configs).glob("*.json")):
        report = run_nm_sweep(ExperimentConfig.load(path))
        write_json(report, out / f"{path.stem}.json")
        write_csv(report["cells"], out / f"{path.stem}.csv")
        value = report.get("max_error", report.get("max_estimate"))
        print(f"{path.stem}: {report['header']['label']} {value}")


if __name__ == "__main__":
    main()
