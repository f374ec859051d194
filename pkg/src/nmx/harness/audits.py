"""Preimage and independence audits of the seed encodings."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from ..codes import (
    SeedEncoding,
    audit_linear_independence,
    sample_preimages_linear,
    sweep_preimages_fp,
    sweep_preimages_linear,
    sweep_preimages_sum,
)

CLAIMS = ("independence", "sum", "linear", "linear-sampled", "fp")


@dataclass
class AuditConfig:
    claims: tuple = ("sum", "linear", "fp")
    ell: int = 3
    embed: str = "top"
    w: int = 4
    p: int = 7
    samples: int = 10**6
    seed: int = 0

    def __post_init__(self):
        bad = [c for c in self.claims if c not in CLAIMS]
        if bad:
            raise ValueError(f"unknown claims {bad}; choose from {CLAIMS}")


def run_one_audit(claim: str, cfg: AuditConfig):
    if claim == "independence":
        # the independence claim is about the whole column set
        return audit_linear_independence(SeedEncoding.make(cfg.ell, 1, "identity"), cfg.w)
    if claim == "fp":
        return sweep_preimages_fp(cfg.p)
    enc = SeedEncoding.make(cfg.ell, 1, cfg.embed)
    if claim == "sum":
        return sweep_preimages_sum(enc)
    if claim == "linear":
        return sweep_preimages_linear(enc)
    return sample_preimages_linear(enc, cfg.samples, cfg.seed)


def run_preimage_audits(cfg: AuditConfig) -> dict:
    """Run each requested audit; the report is ok only if every audit is."""
    results = []
    for claim in cfg.claims:
        t0 = time.perf_counter()
        rep = run_one_audit(claim, cfg)
        out = rep.to_json()
        out["seconds"] = round(time.perf_counter() - t0, 3)
        results.append(out)
    return {"audits": results, "ok": all(r["ok"] for r in results)}
