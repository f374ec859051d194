"""Aggregation and MAC checks driven by exhaustive per-seed computations."""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from ..dist import ExplicitDist, FlatSource, nm_error_exact, nm_joint, render
from ..protocol import _tag_table, mac_bound, mac_forgery_advantage
from .adversaries import AdversaryFamily, gen_adversaries
from .config import Construction, SourceFamily
from .sweeps import per_seed_errors


@dataclass
class WeakSeedReport:
    construction: dict
    samples: int = 0
    violations: int = 0
    cross_checked: int = 0
    worst_ratio: Fraction = Fraction(0)
    rows: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_json(self) -> dict:
        return {
            "construction": self.construction,
            "samples": self.samples,
            "violations": self.violations,
            "cross_checked": self.cross_checked,
            "worst_ratio": render(self.worst_ratio),
            "ok": self.ok,
            "rows": self.rows,
        }


def weak_seed_check(
    construction: Construction,
    k: int,
    samples: int = 1000,
    seed: int = 0,
    cross_check_every: int = 50,
) -> WeakSeedReport:
    """Error under a flat seed on S versus 2^(d - log|S|) times the uniform-seed error.

    Each sample draws a flat source of min-entropy k, a random tampering
    function and a random nonempty seed set S. The per-seed errors come
    from one exhaustive pass; the error under the weak seed is their
    average over S. Every ``cross_check_every``-th sample is recomputed
    from the joint law with Y flat on S.
    """
    ext = construction.build()
    rng = random.Random(seed)
    D = len(ext.seeds)
    d = math.log2(D)
    rep = WeakSeedReport(construction.to_json())
    for i in range(samples):
        src_seed = rng.getrandbits(32)
        _, xs = SourceFamily("flat_random", k=k, count=1, seed=src_seed).generate(ext.n, ext.source_domain)[0]
        adv = next(gen_adversaries(AdversaryFamily("random_sample", 1, rng.getrandbits(32)), ext.seed_bits, ext.seeds))
        size = rng.randint(1, D)
        S = sorted(rng.sample(ext.seeds, size))
        errs = per_seed_errors(ext, xs, adv)
        eps = sum(errs.values(), Fraction(0)) / D
        eps_weak = sum((errs[y] for y in S), Fraction(0)) / size
        bound = Fraction(D, size) * eps  # 2^(d - k') eps with k' = log2|S|
        if eps_weak > bound:
            rep.violations += 1
        if bound:
            rep.worst_ratio = max(rep.worst_ratio, eps_weak / bound)
        if i % cross_check_every == 0:
            j = nm_joint(ext.fn, FlatSource(ext.n, xs), ExplicitDist.flat(ext.seed_bits, S), [adv], ext.out_bits)
            if nm_error_exact(j) != eps_weak:
                raise AssertionError(f"per-seed aggregate disagrees with the joint law at sample {i}")
            rep.cross_checked += 1
        rep.samples += 1
        if len(rep.rows) < 20:
            rep.rows.append({"k_seed": round(math.log2(size), 4), "d": d, "eps": render(eps),
                             "eps_weak": render(eps_weak), "bound": render(bound)})
    return rep


@dataclass
class MacReport:
    v: int
    rows: list = field(default_factory=list)
    violations: int = 0

    @property
    def ok(self) -> bool:
        return self.violations == 0

    @property
    def patterns(self) -> int:
        return sum(1 for r in self.rows if r["leaked"])

    def to_json(self) -> dict:
        return {"v": self.v, "violations": self.violations, "leak_patterns": self.patterns,
                "ok": self.ok, "rows": self.rows}


def leak_patterns(v: int, max_bits: int | None = None):
    """Every set of at most half of the 2v key positions."""
    max_bits = v if max_bits is None else max_bits
    for size in range(max_bits + 1):
        yield from itertools.combinations(range(2 * v), size)


def mac_check(v: int = 4, ds=(4, 8), max_leak: int | None = None) -> MacReport:
    """Exact forgery advantage against ceil(d/v) 2^(L - v) for every leak pattern of L <= v bits.

    A uniform key with L bits revealed has average min-entropy 2v - L, so
    the bound is ceil(d/v) 2^(v - (2v - L)).
    """
    rep = MacReport(v)
    for d in ds:
        table = _tag_table(v, d)
        for pat in leak_patterns(v, max_leak):
            adv = mac_forgery_advantage(v, d, pat, table=table)
            bound = mac_bound(v, d, len(pat))
            ok = adv <= bound
            rep.violations += not ok
            rep.rows.append({"d": d, "leaked": list(pat), "advantage": render(adv),
                             "bound": render(bound), "ok": ok})
    return rep
