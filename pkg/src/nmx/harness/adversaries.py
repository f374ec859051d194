"""Tampering-function families for the non-malleability sweeps.

Every function generated here is fixed-point free on its domain. Functions
are table-backed callables so they can be printed in reports and compared.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from ..errors import BudgetExceeded, FixedPointAdversary
from ..fields import gf2, gf_inv, gf_mul

KINDS = ("all_functions", "affine_patched", "offset", "random_sample", "flip_first_bit")

# exhaustive quantification over all functions only on tiny domains
ALL_FUNCTIONS_MAX_DOMAIN = 8
MAX_SEED_SPACE_BITS = 20


@dataclass(frozen=True)
class AdversaryFn:
    """y -> table[y] on a finite domain, with a short label."""

    name: str
    table: dict = field(hash=False, compare=False)

    def __call__(self, y: int) -> int:
        return self.table[y]

    def as_tuple(self, domain: Sequence[int]) -> tuple:
        return tuple(self.table[y] for y in domain)


def make_adversary(name: str, table: dict) -> AdversaryFn:
    for y, a in table.items():
        if a == y:
            raise FixedPointAdversary(f"{name} fixes {y}")
    return AdversaryFn(name, dict(table))


@dataclass(frozen=True)
class AdversaryFamily:
    kind: str
    count: int = 0  # random_sample only
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown adversary family {self.kind!r}; choose from {KINDS}")
        if self.kind == "random_sample" and self.count < 1:
            raise ValueError("random_sample needs a positive count")

    @classmethod
    def from_dict(cls, d: dict) -> AdversaryFamily:
        return cls(**d)

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "random_sample":
            out.update(count=self.count, seed=self.seed)
        return out

    def is_complete(self, domain_size: int) -> bool:
        """True when the family is every fixed-point-free function."""
        return self.kind == "all_functions" and domain_size <= ALL_FUNCTIONS_MAX_DOMAIN


def family_size(family: AdversaryFamily, domain_size: int) -> int:
    D = domain_size
    if family.kind == "all_functions":
        return (D - 1) ** D
    if family.kind == "affine_patched":
        return D * D - 1
    if family.kind == "offset":
        return D - 1
    if family.kind == "random_sample":
        return family.count
    return 1


def gen_adversaries(
    family: AdversaryFamily,
    seed_space_bits: int,
    domain: Sequence[int] | None = None,
) -> Iterator[AdversaryFn]:
    """Yield the members of ``family`` over the seed space.

    The domain defaults to all ``seed_space_bits``-bit values; an explicit
    domain (for example a 3-value test space) is accepted by the
    all_functions and random_sample kinds.
    """
    if seed_space_bits > MAX_SEED_SPACE_BITS:
        raise BudgetExceeded(f"seed space of {seed_space_bits} bits exceeds 2^{MAX_SEED_SPACE_BITS}")
    dom = list(domain) if domain is not None else list(range(1 << seed_space_bits))
    kind = family.kind
    if kind == "all_functions":
        yield from _all_functions(dom)
    elif kind == "affine_patched":
        if domain is not None and dom != list(range(1 << seed_space_bits)):
            raise ValueError("affine_patched acts on the full field")
        yield from _affine_patched(seed_space_bits)
    elif kind == "offset":
        members = set(dom)
        for c in range(1, 1 << seed_space_bits):
            # on a partial domain keep only the offsets that stay inside it
            if all(y ^ c in members for y in dom):
                yield AdversaryFn(f"offset:{c}", {y: y ^ c for y in dom})
    elif kind == "random_sample":
        rng = random.Random(family.seed)
        for i in range(family.count):
            table = {}
            for y in dom:
                a = rng.choice(dom)
                while a == y:
                    a = rng.choice(dom)
                table[y] = a
            yield AdversaryFn(f"random:{family.seed}:{i}", table)
    else:
        # flip the first (most significant) bit of the seed
        top = 1 << (seed_space_bits - 1)
        yield AdversaryFn("flip-first-bit", {y: y ^ top for y in dom})


def _all_functions(dom: list) -> Iterator[AdversaryFn]:
    D = len(dom)
    if D > ALL_FUNCTIONS_MAX_DOMAIN:
        raise BudgetExceeded(f"all_functions is limited to {ALL_FUNCTIONS_MAX_DOMAIN} seed values, got {D}")
    choices = [[a for a in dom if a != y] for y in dom]
    for i, img in enumerate(itertools.product(*choices)):
        yield AdversaryFn(f"fn:{i}", dict(zip(dom, img)))


def _affine_patched(ell: int) -> Iterator[AdversaryFn]:
    ctx = gf2(ell)
    q = 1 << ell
    for a in range(q):
        for b in range(q):
            if a == 1 and b == 0:
                continue  # the identity has no fixed-point-free patch
            table = {z: gf_mul(a, z, ctx) ^ b for z in range(q)}
            if a != 1:
                # unique fixed point z0 = b / (1 + a); send it to z0 + 1
                z0 = gf_mul(b, gf_inv(a ^ 1, ctx), ctx)
                table[z0] = z0 ^ 1
            yield AdversaryFn(f"affine:{a}:{b}", table)
