"""Parameter calculator for the existence bounds on seed length and min-entropy."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class BoundCheck:
    feasible: bool
    seed_margin: float
    entropy_margin: float
    seed_needed: float
    entropy_needed: float

    def to_json(self) -> dict:
        return asdict(self)


def seed_requirement(n: int, k: int, eps: float, c1: float = 10) -> float:
    # log of the entropy gap; a full-entropy source has gap 0, read as log 1
    return 1.5 * math.log2(max(n - k, 1)) + 3 * math.log2(1 / eps) + c1


def entropy_requirement(d: int, m: int, eps: float, r: int = 1, c2: float = 10) -> float:
    return (r + 1) * m + d / 3 + 2 * math.log2(1 / eps) + math.log2(d) + c2


def existence_bound_check(
    n: int, k: int, d: int, m: int, eps: float, r: int = 1, c1: float = 10, c2: float = 10
) -> BoundCheck:
    """Evaluate both inequalities; a margin is the slack (positive means satisfied)."""
    for name, val in (("n", n), ("k", k), ("d", d), ("m", m), ("eps", eps), ("r", r)):
        if val <= 0:
            raise ValueError(f"{name} must be positive")
    if eps >= 1:
        raise ValueError("eps must be below 1")
    sd = seed_requirement(n, k, eps, c1)
    sk = entropy_requirement(d, m, eps, r, c2)
    return BoundCheck(d - sd > 0 and k - sk > 0, d - sd, k - sk, sd, sk)


def single_tamper_seed_bound(n: int, k: int, eps: float) -> float:
    """Earlier seed-length bound for one tampered seed: log(n-k+1) + 2 log(1/eps) + 7."""
    return math.log2(n - k + 1) + 2 * math.log2(1 / eps) + 7


def comparison_table(n: int, k: int, epss=(2**-4, 2**-8, 2**-16, 2**-32), c1: float = 10) -> list[dict]:
    """Seed length needed at r = 1 by both bounds, per error level."""
    rows = []
    for eps in epss:
        ours = seed_requirement(n, k, eps, c1)
        prior = single_tamper_seed_bound(n, k, eps)
        rows.append({"n": n, "k": k, "eps": eps, "seed_bound": ours,
                     "single_tamper_bound": prior, "ratio": ours / prior})
    return rows
