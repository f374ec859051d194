"""Protocol experiments: strategy library sweeps and micro-scale exact analysis."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import IO

from ..protocol import (
    Protocol,
    SubcubeSource,
    default_source,
    eve_library,
    exact_extraction,
    exhaustive_passive_micro,
    preset,
    run_session,
)


@dataclass
class ProtocolSuiteConfig:
    preset: str = "small"
    strategies: tuple | None = None  # None runs the whole library
    trials: int = 1000
    seed: int = 0
    micro_ks: tuple = ()  # exact extraction at these min-entropies (micro preset only)
    exhaustive_k: int | None = None  # exhaustive passive run over a flat k-bit source
    transcript: IO | None = field(default=None, repr=False)


def run_protocol_suite(cfg: ProtocolSuiteConfig) -> dict:
    """Correctness, robustness and (at micro scale) extraction tables."""
    params = preset(cfg.preset)
    lib = eve_library(params)
    names = list(cfg.strategies) if cfg.strategies else list(lib)
    unknown = [n for n in names if n not in lib]
    if unknown:
        raise ValueError(f"unknown strategies {unknown}; choose from {sorted(lib)}")
    proto = Protocol(params)
    source = default_source(params)
    rows = []
    for name in names:
        t0 = time.perf_counter()
        st = run_session(source, lib[name], params, cfg.trials, cfg.seed, proto, cfg.transcript)
        row = st.to_json()
        row["seconds"] = round(time.perf_counter() - t0, 2)
        row["robustness_ok"] = st.robustness_rate <= params.eps_bound
        if name == "passive":
            row["correct"] = st.keys_match == st.trials
        rows.append(row)
    report = {
        "params": params.to_json(),
        "target_eps": params.target_eps,
        "eps_bound": params.eps_bound,
        "strategies": rows,
    }
    ok = all(r["robustness_ok"] for r in rows) and all(r.get("correct", True) for r in rows)
    if cfg.micro_ks:
        ext_rows = [exact_extraction(params, k).to_json() for k in cfg.micro_ks]
        tvs = [r["tv_float"] for r in ext_rows]
        decreasing = all(b < a for a, b in zip(tvs, tvs[1:]))
        report["extraction"] = {"rows": ext_rows, "strictly_decreasing": decreasing}
        ok = ok and decreasing
    if cfg.exhaustive_k is not None:
        src = SubcubeSource(params.n, cfg.exhaustive_k)
        st = exhaustive_passive_micro(params, src.support())
        report["exhaustive_passive"] = st.to_json()
        ok = ok and st.keys_match == st.trials
    report["ok"] = ok
    return report
