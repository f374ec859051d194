"""Building-block extractors.

Inner product over F_2, the inner-product two-source extractor (with a
multi-bit variant), a universal-hash strong seeded extractor, the block
somewhere-condenser and output-range reduction. Each scalar function that
is hot in the exhaustive sweeps also has a numpy ``batch`` form taking an
array of sources and one seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, IndivisibleBlocks, OutputTooWide
from .fields import (
    MAX_GENERATOR_WIDTH,
    dense_element,
    gf2,
    gf_find_generator,
    gf_mul,
    unpack_components,
)


def parity(v: int) -> int:
    return v.bit_count() & 1


def parity_np(a: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(a) & 1).astype(np.int64)


def ip_f2(u: int, v: int, width_u: int | None = None, width_v: int | None = None) -> int:
    """Parity of u AND v. Widths, when given, must agree."""
    if width_u is not None and width_v is not None and width_u != width_v:
        raise DimensionMismatch(f"inner product of {width_u}-bit and {width_v}-bit vectors")
    return parity(u & v)


def ip_bits(u: Sequence[int], v: Sequence[int]) -> int:
    if len(u) != len(v):
        raise DimensionMismatch(f"lengths {len(u)} and {len(v)}")
    return sum(a & b for a, b in zip(u, v)) & 1


def batched(batch: Callable[[np.ndarray, int], np.ndarray]):
    """Attach a vectorised form to a scalar extractor ``f(x, y)``."""

    def wrap(f):
        f.batch = batch
        return f

    return wrap


# ---------------------------------------------------------------------------
# two-source inner product


def sigma_multiplier(width: int) -> int:
    """Multiplier for the linear map used to spread the second argument.

    The smallest generator of GF(2^width)* where it can be found; above the
    generator-search cap, a fixed dense element (multiplying by a sparse one
    such as x would only shift the input).
    """
    if width <= MAX_GENERATOR_WIDTH:
        return gf_find_generator(gf2(width))
    return dense_element(width)


def two_source_ip(x: int, y: int, n: int, m: int = 1, pad: bool = False) -> int:
    """m-bit inner-product two-source extractor on n-bit inputs.

    Bit i is <x, sigma^i(y)> where sigma is multiplication by a fixed
    generator of GF(2^n). With ``pad`` set, shorter inputs are accepted
    and read as zero-extended to n bits; otherwise both must fit n bits.
    """
    if not pad and (x >> n or y >> n):
        raise DimensionMismatch(f"inputs must be {n}-bit")
    if m > n:
        raise OutputTooWide(f"{m} output bits from {n}-bit inputs")
    if m == 1:
        return parity(x & y)
    out = 0
    if y >> min(n, _TABLE_INPUT_BITS) == 0:
        # short y: products with the fixed powers come from byte tables
        for i, tabs in enumerate(_sigma_tables(n, m)):
            out |= parity(x & apply_tables(tabs, y)) << i
        return out
    ctx = gf2(n)
    for i, c in enumerate(_sigma_powers(n, m)):
        out |= parity(x & gf_mul(y, c, ctx)) << i
    return out


_TABLE_INPUT_BITS = 64


@lru_cache(maxsize=None)
def _sigma_tables(n: int, m: int) -> tuple:
    return tuple(mul_tables(n, c, min(n, _TABLE_INPUT_BITS)) for c in _sigma_powers(n, m))


@lru_cache(maxsize=None)
def _sigma_powers(n: int, m: int) -> tuple:
    ctx = gf2(n)
    g = sigma_multiplier(n)
    out, v = [], 1
    for _ in range(m):
        out.append(v)
        v = gf_mul(v, g, ctx)
    return tuple(out)


# ---------------------------------------------------------------------------
# strong seeded extractor: low bits of a field product


def strong_seeded_ext(x: int, seed: int, m: int, n: int, d: int | None = None) -> int:
    """Low m bits of x * seed in GF(2^N), N = max(n, d).

    The family {x -> x * s} is universal, so by the leftover hash lemma
    the output is sqrt(2^(m-k))-close to uniform given the seed.
    """
    if m > n:
        raise OutputTooWide(f"{m} output bits from a {n}-bit source")
    width = max(n, d or n)
    return gf_mul(x, seed, gf2(width)) & ((1 << m) - 1)


def short_seed_ext(x: int, seed: int, m: int, n: int, d: int) -> int:
    """Seeded extractor for seeds shorter than the source or the output.

    Low m bits of x * (rho + seed) in GF(2^N), N = max(n, d, m), where rho
    is a fixed dense element and the seed occupies the low d bits. For a
    fixed seed the map is injective in x, so with m >= n no entropy is
    lost; for x != x' the collision event is a linear condition on the
    seed. When m exceeds n the output still carries at most n bits of
    entropy.
    """
    width = max(n, d, m)
    ctx = gf2(width)
    # x * (rho + seed) = x * rho + x * seed; the first term is a fixed linear
    # map read from byte tables, the second is cheap because the seed is short
    return _times_dense(x, width, m) ^ (gf_mul(x, seed, ctx) & ((1 << m) - 1))


def _times_dense(x: int, width: int, m: int) -> int:
    return apply_tables(_dense_tables(width, m), x)


@lru_cache(maxsize=None)
def _dense_tables(width: int, m: int) -> tuple:
    return mul_tables(width, dense_element(width), width, m)


# ---------------------------------------------------------------------------
# multiplication by a fixed element as a table-driven linear map


def mul_tables(width: int, c: int, n_in: int, m: int | None = None) -> tuple:
    """Byte tables for x -> x * c in GF(2^width), x below 2^n_in.

    Entry [j][b] is (b << 8j) * c, truncated to its low m bits when m is
    given. apply_tables XORs one entry per input byte.
    """
    ctx = gf2(width)
    mask = -1 if m is None else (1 << m) - 1
    basis, v = [], c
    for _ in range(n_in):
        basis.append(v & mask)
        v <<= 1
        if v >> width:
            v ^= ctx.modulus
    tables = []
    for j in range(0, n_in, 8):
        tab = [0] * 256
        for b in range(1, 256):
            low = b & -b
            k = j + low.bit_length() - 1
            tab[b] = tab[b ^ low] ^ (basis[k] if k < n_in else 0)
        tables.append(tuple(tab))
    return tuple(tables)


def apply_tables(tables: tuple, x: int) -> int:
    acc = 0
    for tab, b in zip(tables, x.to_bytes(len(tables), "little")):
        acc ^= tab[b]
    return acc


def strong_seeded_batch(n: int, m: int):
    """Vectorised strong_seeded_ext for d = n <= 10 via the product table."""
    from .fields import gf_mul_table

    table = gf_mul_table(gf2(n))
    mask = (1 << m) - 1

    def batch(xs: np.ndarray, seed: int) -> np.ndarray:
        return table[xs, seed] & mask

    return batch


# ---------------------------------------------------------------------------
# somewhere condenser (block promise)


@dataclass(frozen=True)
class CondenserOutput:
    rows: tuple
    row_width: int
    promised_rate: float = 1.0

    def __post_init__(self):
        if any(r >> self.row_width for r in self.rows):
            raise DimensionMismatch("row wider than row_width")


@dataclass(frozen=True)
class CondenserPlan:
    rows: int
    promised_rate: float = 0.9


def somewhere_condense(x: int, n: int, plan: CondenserPlan | int) -> CondenserOutput:
    """Split x into C contiguous blocks, first block from the high bits."""
    if isinstance(plan, int):
        plan = CondenserPlan(plan)
    c = plan.rows
    if c < 1 or n % c:
        raise IndivisibleBlocks(f"{c} rows do not divide {n} bits")
    w = n // c
    return CondenserOutput(tuple(unpack_components(x, c, w)), w, plan.promised_rate)


# ---------------------------------------------------------------------------


def reduce_mod(z: int, M: int) -> int:
    if M < 1:
        raise ValueError("modulus must be positive")
    return z % M


@dataclass(frozen=True)
class ExtractorSpec:
    """Shape and claimed guarantees of an extractor; claims are checked, not trusted."""

    name: str
    n: int
    d: int
    m: int
    claims: tuple = field(default_factory=tuple)  # ((k, eps), ...)

    def __post_init__(self):
        if self.m > self.n:
            raise OutputTooWide(f"{self.m} > {self.n}")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "d": self.d,
            "m": self.m,
            "claims": [[k, eps] for k, eps in self.claims],
        }


@batched(lambda xs, y: parity_np(xs & y))
def raw_ip(x: int, y: int) -> int:
    """Plain one-bit inner product with no seed encoding."""
    return parity(x & y)
