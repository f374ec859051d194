"""Experiment configuration: what to extract from, which sources, which tampering."""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

from ..errors import BudgetExceeded
from ..extractors import raw_ip
from ..nmext import CLI_NAMES, NmExtConfig, build
from .adversaries import AdversaryFamily, family_size

SOURCE_KINDS = ("cube", "flat_random", "block", "counterexample")
MODES = ("exhaustive", "monte_carlo")
DEFAULT_CELL_BUDGET = 1 << 32


@dataclass(frozen=True)
class Construction:
    """An extractor under test: raw_ip or one of the nm constructions."""

    name: str
    params: dict = field(default_factory=dict)

    def build(self) -> ExtractorUnderTest:
        if self.name == "raw_ip":
            n = self.params["n"]
            return ExtractorUnderTest("raw_ip", raw_ip, n, n, list(range(1 << n)), list(range(1 << n)), 1)
        variant = CLI_NAMES.get(self.name, self.name)
        nm = build(NmExtConfig(variant=variant, **self.params))
        fn = nm.ext()
        return ExtractorUnderTest(variant, fn, nm.cfg.n, nm.seed_bits, nm.sources(), nm.seeds(), nm.out_bits)

    def to_json(self) -> dict:
        return {"name": self.name, **self.params}


@dataclass
class ExtractorUnderTest:
    name: str
    fn: Callable[[int, int], int]
    n: int
    seed_bits: int
    source_domain: list
    seeds: list
    out_bits: int

    @property
    def batch(self):
        return getattr(self.fn, "batch", None)


@dataclass(frozen=True)
class SourceFamily:
    kind: str = "cube"
    k: int | None = None
    count: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source family {self.kind!r}; choose from {SOURCE_KINDS}")
        if self.kind in ("flat_random", "block") and self.k is None:
            raise ValueError(f"{self.kind} sources need k")

    def generate(self, n: int, domain: list | None = None) -> list[tuple[str, list]]:
        """(label, support) pairs; supports are intersected with ``domain``."""
        allowed = None if domain is None or len(domain) == 1 << n else set(domain)
        out = []
        if self.kind == "cube":
            out.append(("cube", list(range(1 << n))))
        elif self.kind == "counterexample":
            # top bit fixed to 0
            out.append(("top-bit-zero", list(range(1 << (n - 1)))))
        elif self.kind == "block":
            k = self.k
            for prefix in range(1 << (n - k)):
                base = prefix << k
                out.append((f"block:{prefix}", list(range(base, base + (1 << k)))))
        else:
            rng = random.Random(self.seed)
            for i in range(self.count):
                out.append((f"flat:{self.seed}:{i}", sorted(rng.sample(range(1 << n), 1 << self.k))))
        if allowed is not None:
            out = [(lab, [x for x in sup if x in allowed]) for lab, sup in out]
        return [(lab, sup) for lab, sup in out if sup]

    def to_json(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass(frozen=True)
class ExperimentConfig:
    construction: Construction
    sources: tuple = (SourceFamily(),)
    adversaries: AdversaryFamily | None = None
    mode: str = "exhaustive"
    trials: int = 0
    seed: int = 0
    budget: int = DEFAULT_CELL_BUDGET
    output: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.mode == "monte_carlo" and self.trials < 1:
            raise ValueError("monte_carlo mode needs trials >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        d = dict(d)
        con = d.pop("construction")
        name = con.pop("name") if "name" in con else con.pop("variant")
        params = dict(con.pop("params", {}), **con)
        srcs = d.pop("sources", [{"kind": "cube"}])
        if isinstance(srcs, dict):
            srcs = [srcs]
        adv = d.pop("adversaries", None)
        return cls(
            construction=Construction(name, params),
            sources=tuple(SourceFamily(**s) for s in srcs),
            adversaries=AdversaryFamily.from_dict(adv) if adv else None,
            **d,
        )

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_json(self) -> dict:
        return {
            "construction": self.construction.to_json(),
            "sources": [s.to_json() for s in self.sources],
            "adversaries": self.adversaries.to_json() if self.adversaries else None,
            "mode": self.mode,
            "trials": self.trials,
            "seed": self.seed,
            "budget": self.budget,
        }

    def check_budget(self, ext: ExtractorUnderTest, n_sources: int, source_size: int):
        """Exhaustive mode refuses configs whose evaluation count exceeds the budget."""
        if self.mode != "exhaustive":
            return
        fam = family_size(self.adversaries, len(ext.seeds)) if self.adversaries else 1
        if self.adversaries and self.adversaries.kind == "all_functions":
            # handled pairwise: one evaluation per (seed, tampered seed) pair
            fam = len(ext.seeds)
        work = n_sources * fam * source_size * len(ext.seeds) * 2
        if work > self.budget:
            raise BudgetExceeded(f"exhaustive sweep needs ~{work} evaluations, budget {self.budget}")
