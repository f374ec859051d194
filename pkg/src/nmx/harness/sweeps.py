"""Non-malleability error sweeps over (source, adversary) families."""

from __future__ import annotations

import random
from collections import Counter
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from ..dist import ExplicitDist, FlatSource, nm_error_counts, nm_error_exact, nm_joint, render
from ..protocol import wilson_interval
from .adversaries import ALL_FUNCTIONS_MAX_DOMAIN, AdversaryFn, gen_adversaries
from .config import ExperimentConfig, ExtractorUnderTest

FAMILY_NOTE = (
    "worst case over all tampering functions is enumerated only for seed spaces of at most "
    f"{ALL_FUNCTIONS_MAX_DOMAIN} values; larger spaces report the maximum over the configured family"
)


def cell_error(ext: ExtractorUnderTest, xs: Sequence[int], advs: Sequence[Callable]) -> Fraction:
    """Exact nm error for X flat on xs, Y uniform on the extractor's seeds."""
    m = ext.out_bits
    if ext.batch is not None and m * (len(advs) + 1) <= 24:
        return nm_error_counts(ext.batch, xs, ext.seeds, advs, m)[0]
    X = FlatSource(ext.n, xs)
    Y = ExplicitDist.flat(ext.seed_bits, ext.seeds)
    return nm_error_exact(nm_joint(ext.fn, X, Y, advs, m))


class OutputMatrix:
    """ext(x, y) for every seed y (rows) and every x in a source (columns)."""

    def __init__(self, ext: ExtractorUnderTest, xs: Sequence[int]):
        self.seeds = list(ext.seeds)
        self.pos = {y: i for i, y in enumerate(self.seeds)}
        self.m = ext.out_bits
        xarr = np.asarray(xs, dtype=np.int64)
        if ext.batch is not None:
            rows = [np.asarray(ext.batch(xarr, y), dtype=np.int64) for y in self.seeds]
        else:
            rows = [np.array([ext.fn(x, y) for x in xs], dtype=np.int64) for y in self.seeds]
        self.out = np.stack(rows)
        self.size = len(xarr)

    def error(self, adv: Callable) -> Fraction:
        """Exact error against one tampering function, all seeds at once."""
        S, scale = len(self.seeds), 1 << self.m
        idx = np.array([self.pos[adv(y)] for y in self.seeds])
        code = (self.out[idx] << self.m) | self.out
        code += (np.arange(S, dtype=np.int64) * scale * scale)[:, None]
        joint = np.bincount(code.ravel(), minlength=S * scale * scale).reshape(S * scale, scale)
        marg = joint.sum(axis=1, keepdims=True)
        num = int(np.abs(scale * joint - marg).sum())
        return Fraction(num, 2 * scale * self.size * S)


def per_seed_errors(ext: ExtractorUnderTest, xs: Sequence[int], adv: Callable | None) -> dict:
    advs = [adv] if adv is not None else []
    if ext.batch is not None and ext.out_bits * (len(advs) + 1) <= 24:
        return nm_error_counts(ext.batch, xs, ext.seeds, advs, ext.out_bits)[1]
    out = {}
    X = FlatSource(ext.n, xs)
    for y in ext.seeds:
        j = nm_joint(ext.fn, X, ExplicitDist.point(ext.seed_bits, y), advs, ext.out_bits)
        out[y] = nm_error_exact(j)
    return out


def pair_errors(ext: ExtractorUnderTest, xs: Sequence[int]) -> dict:
    """Error conditioned on Y = y when the tampered seed is y', for every y != y'.

    With one tampered seed, the error of a function A is the average over y of
    the entry (y, A(y)), so this table determines the error of every A.
    """
    seeds = list(ext.seeds)
    m = ext.out_bits
    scale = 1 << m
    if ext.batch is not None:
        xarr = np.asarray(xs, dtype=np.int64)
        outs = {y: np.asarray(ext.batch(xarr, y), dtype=np.int64) for y in seeds}
    else:
        outs = {y: np.array([ext.fn(x, y) for x in xs], dtype=np.int64) for y in seeds}
    table = {}
    for y in seeds:
        for t in seeds:
            if t == y:
                continue
            joint = np.bincount((outs[t] << m) | outs[y], minlength=scale * scale).reshape(-1, scale)
            marg = joint.sum(axis=1, keepdims=True)
            table[y, t] = Fraction(int(np.abs(scale * joint - marg).sum()), 2 * scale * len(xs))
    return table


def worst_case_single(ext: ExtractorUnderTest, xs: Sequence[int]) -> tuple[Fraction, AdversaryFn]:
    """Exact maximum error over every fixed-point-free function, with a maximiser."""
    table = pair_errors(ext, xs)
    best = {}
    total = Fraction(0)
    for y in ext.seeds:
        t, e = max(((t, e) for (a, t), e in table.items() if a == y), key=lambda te: te[1])
        best[y] = t
        total += e
    return total / len(ext.seeds), AdversaryFn("pairwise-argmax", best)


def _mc_estimate(ext, xs, adv, trials: int, rng: random.Random) -> tuple[int, int]:
    # Y ~ uniform, then a coin with bias equal to the exact conditional error:
    # the success probability is exactly the nm error
    errs = per_seed_errors(ext, xs, adv)
    seeds = ext.seeds
    hits = 0
    for _ in range(trials):
        if rng.random() < errs[rng.choice(seeds)]:
            hits += 1
    return hits, trials


def run_nm_sweep(cfg: ExperimentConfig) -> dict:
    """Max error over the (source, adversary) product, with witnesses and a histogram."""
    ext = cfg.construction.build()
    sources = []
    for fam in cfg.sources:
        sources.extend(fam.generate(ext.n, ext.source_domain))
    cfg.check_budget(ext, len(sources), max(len(s) for _, s in sources))
    D = len(ext.seeds)
    fam = cfg.adversaries
    complete = fam is not None and fam.is_complete(D)
    if fam is None:
        label = "no-tampering"
    else:
        label = "worst-case" if complete else "family-max"
    if fam is not None and fam.kind == "all_functions" and not complete:
        # generating the family raises the budget error with the right message
        next(gen_adversaries(fam, ext.seed_bits, ext.seeds))

    cells = []
    hist: Counter = Counter()
    best = None
    for s_label, xs in sources:
        if fam is None:
            advs_list = [("none", [])]
        elif fam.kind == "all_functions":
            advs_list = None
        else:
            advs_list = [(a.name, [a]) for a in gen_adversaries(fam, ext.seed_bits, ext.seeds)]

        if cfg.mode == "exhaustive":
            if advs_list is None:
                err, adv = worst_case_single(ext, xs)
                entries = [(f"max over {(D - 1) ** D} functions", err, adv.as_tuple(ext.seeds))]
            elif fam is not None and ext.out_bits <= 8:
                mat = OutputMatrix(ext, xs)
                entries = [(name, mat.error(advs[0]), None) for name, advs in advs_list]
            else:
                entries = [(name, cell_error(ext, xs, advs), None) for name, advs in advs_list]
            for a_label, err, detail in entries:
                cell = {"source": s_label, "adversary": a_label, "error": render(err), "error_float": float(err)}
                if detail is not None:
                    cell["maximiser"] = list(detail)
                cells.append(cell)
                hist[render(err)] += 1
                if best is None or err > best[0]:
                    best = (err, cell)
        else:
            if advs_list is None:
                raise ValueError("all_functions is exhaustive-only; use random_sample for Monte Carlo")
            for a_label, advs in advs_list:
                rng = random.Random(f"{cfg.seed}:{s_label}:{a_label}")
                hits, n = _mc_estimate(ext, xs, advs[0] if advs else None, cfg.trials, rng)
                est = hits / n
                lo, hi = wilson_interval(hits, n)
                cell = {"source": s_label, "adversary": a_label, "estimate": est, "hits": hits,
                        "trials": n, "wilson": [lo, hi]}
                cells.append(cell)
                if best is None or est > best[0]:
                    best = (est, cell)

    report = {
        "header": {
            "construction": cfg.construction.to_json(),
            "mode": cfg.mode,
            "label": label,
            "seed_space": D,
            "note": FAMILY_NOTE,
        },
        "config": cfg.to_json(),
        "cells": cells,
        "witness": best[1] if best else None,
    }
    if cfg.mode == "exhaustive":
        report["max_error"] = render(best[0])
        report["max_error_float"] = float(best[0])
        report["histogram"] = dict(sorted(hist.items(), key=lambda kv: Fraction(kv[0])))
    else:
        report["max_estimate"] = best[0]
    return report
