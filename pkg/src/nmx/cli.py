"""Command-line entry point: ``nmx sweep|audit|protocol|bounds``.

Exit status is 0 when every asserted bound holds, 1 when a violation is
found and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import NmxError
from .harness.audits import CLAIMS, AuditConfig, run_preimage_audits
from .harness.bounds import comparison_table, existence_bound_check
from .harness.config import ExperimentConfig
from .harness.protocol_suite import ProtocolSuiteConfig, run_protocol_suite
from .harness.report import dumps, to_csv, write_json
from .harness.sweeps import run_nm_sweep
from .protocol import PRESETS

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(report: dict, out: str | None):
    if out:
        write_json(report, out)
    sys.stdout.write(dumps(report))


def cmd_sweep(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    report = run_nm_sweep(cfg)
    _emit(report, args.out or cfg.output)
    if args.max_error is not None and report.get("max_error_float", report.get("max_estimate")) > args.max_error:
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_audit(args) -> int:
    cfg = AuditConfig(claims=(args.claim,), ell=args.ell, embed=args.embed, w=args.w, p=args.p,
                      samples=args.samples, seed=args.seed)
    report = run_preimage_audits(cfg)
    _emit(report, args.out)
    return EXIT_OK if report["ok"] else EXIT_VIOLATION


def cmd_protocol(args) -> int:
    out = open(args.transcript, "w") if args.transcript else None
    try:
        cfg = ProtocolSuiteConfig(
            preset=args.preset,
            strategies=tuple(args.eve) if args.eve else None,
            trials=args.trials,
            seed=args.seed,
            micro_ks=tuple(args.micro_k or ()),
            exhaustive_k=args.exhaustive_k,
            transcript=out,
        )
        report = run_protocol_suite(cfg)
    finally:
        if out:
            out.close()
    if args.csv:
        sys.stdout.write(to_csv(report["strategies"]))
        if args.out:
            write_json(report, args.out)
    else:
        _emit(report, args.out)
    return EXIT_OK if report["ok"] else EXIT_VIOLATION


def cmd_bounds(args) -> int:
    chk = existence_bound_check(args.n, args.k, args.d, args.m, args.eps, args.r, args.c1, args.c2)
    report = {"check": chk.to_json(), "comparison": comparison_table(args.n, args.k, c1=args.c1)}
    _emit(report, args.out)
    return EXIT_OK if chk.feasible else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nmx", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sweep", help="non-malleability error sweep from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--max-error", type=float, help="fail (exit 1) if the maximum exceeds this")
    s.set_defaults(func=cmd_sweep)

    a = sub.add_parser("audit", help="preimage / independence audit of a seed encoding")
    a.add_argument("--claim", required=True, choices=CLAIMS)
    a.add_argument("--ell", type=int, default=3)
    a.add_argument("--embed", choices=("top", "identity"), default="top")
    a.add_argument("--w", type=int, default=4, help="subset size for the independence audit")
    a.add_argument("--p", type=int, default=7, help="prime for the fp audit")
    a.add_argument("--samples", type=int, default=10**6)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out")
    a.set_defaults(func=cmd_audit)

    r = sub.add_parser("protocol", help="run protocol sessions against tampering strategies")
    r.add_argument("--preset", choices=sorted(PRESETS), default="small")
    r.add_argument("--eve", action="append", help="strategy name (repeatable; default: all)")
    r.add_argument("--trials", type=int, default=1000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--micro-k", type=int, action="append", help="exact extraction at this k (micro)")
    r.add_argument("--exhaustive-k", type=int, help="exhaustive passive run over a flat k-bit source")
    r.add_argument("--transcript", help="write one JSON line per session")
    r.add_argument("--csv", action="store_true", help="print the strategy table as CSV")
    r.add_argument("--out")
    r.set_defaults(func=cmd_protocol)

    b = sub.add_parser("bounds", help="check the seed-length and entropy inequalities")
    for name in ("n", "k", "d", "m"):
        b.add_argument(f"--{name}", type=int, required=True)
    b.add_argument("--eps", type=float, required=True)
    b.add_argument("--r", type=int, default=1)
    b.add_argument("--c1", type=float, default=10)
    b.add_argument("--c2", type=float, default=10)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bounds)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, json.JSONDecodeError, NmxError) as e:
        print(f"nmx: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
