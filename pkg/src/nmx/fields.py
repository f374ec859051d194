"""Arithmetic in GF(2^ell) and F_p.

Field elements are plain Python ints. A GF(2^ell) element is an ell-bit
value read as a polynomial over F_2 (bit i is the coefficient of x^i); an
F_p element is an int in [0, p). Contexts carry the modulus and are frozen,
so everything here is a pure function of its inputs.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
import sympy

from .errors import DivisionByZero, GeneratorSearchInfeasible, NoPrimeInRange

# Lowest-weight irreducible moduli: the trinomial x^ell + x^k + 1 with the
# smallest k if one exists, else the numerically smallest irreducible
# pentanomial. ell = 1 uses x + 1. Generated by _search_modulus and frozen
# here so outputs are bit-exact across runs.
IRREDUCIBLE_MODULI = {
    1: 0x3,
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x83,
    8: 0x11B,
    9: 0x203,
    10: 0x409,
    11: 0x805,
    12: 0x1009,
    13: 0x201B,
    14: 0x4021,
    15: 0x8003,
    16: 0x1002B,
    17: 0x20009,
    18: 0x40009,
    19: 0x80027,
    20: 0x100009,
    21: 0x200005,
    22: 0x400003,
    23: 0x800021,
    24: 0x100001B,
    25: 0x2000009,
    26: 0x400001B,
    27: 0x8000027,
    28: 0x10000003,
    29: 0x20000005,
    30: 0x40000003,
    31: 0x80000009,
    32: 0x10000008D,
    33: 0x200000401,
    34: 0x400000081,
    35: 0x800000005,
    36: 0x1000000201,
    37: 0x2000000053,
    38: 0x4000000063,
    39: 0x8000000011,
    40: 0x10000000039,
    41: 0x20000000009,
    42: 0x40000000081,
    43: 0x80000000059,
    44: 0x100000000021,
    45: 0x20000000001B,
    46: 0x400000000003,
    47: 0x800000000021,
    48: 0x100000000002D,
    49: 0x2000000000201,
    50: 0x400000000001D,
    51: 0x800000000004B,
    52: 0x10000000000009,
    53: 0x20000000000047,
    54: 0x40000000000201,
    55: 0x80000000000081,
    56: 0x100000000000095,
    57: 0x200000000000011,
    58: 0x400000000080001,
    59: 0x800000000000095,
    60: 0x1000000000000003,
    61: 0x2000000000000027,
    62: 0x4000000020000001,
    63: 0x8000000000000003,
    64: 0x1000000000000001B,
}

MAX_TABLE_WIDTH = 64
# Generator search needs the factorization of 2^ell - 1.
MAX_GENERATOR_WIDTH = 64


# ---------------------------------------------------------------------------
# raw GF(2)[x] polynomial arithmetic on ints


def clmul(a: int, b: int) -> int:
    """Carry-less product of two bit-polynomials."""
    if a.bit_length() < b.bit_length():
        a, b = b, a
    if b.bit_length() > 24:
        return _clmul_window(a, b)
    r = 0
    while b:
        low = b & -b
        r ^= a << (low.bit_length() - 1)
        b ^= low
    return r


def _clmul_window(a: int, b: int) -> int:
    # 4-bit windows over b with a 16-entry table of multiples of a
    a2 = a << 1
    a4 = a << 2
    a8 = a << 3
    t = [0, a, a2, a2 ^ a, a4, a4 ^ a, a4 ^ a2, a4 ^ a2 ^ a,
         a8, a8 ^ a, a8 ^ a2, a8 ^ a2 ^ a, a8 ^ a4, a8 ^ a4 ^ a, a8 ^ a4 ^ a2, a8 ^ a4 ^ a2 ^ a]
    r = 0
    shift = 0
    while b:
        nib = b & 15
        if nib:
            r ^= t[nib] << shift
        b >>= 4
        shift += 4
    return r


def poly_square(a: int) -> int:
    # squaring over F_2 interleaves zeros between the coefficient bits
    if a == 0:
        return 0
    return int("0".join(bin(a)[2:]), 2)


def poly_mod(a: int, f: int) -> int:
    df = f.bit_length() - 1
    while a.bit_length() - 1 >= df:
        a ^= f << (a.bit_length() - 1 - df)
    return a


def poly_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, poly_mod(a, b)
    return a


def is_irreducible(f: int) -> bool:
    """Rabin's irreducibility test for a polynomial over F_2."""
    deg = f.bit_length() - 1
    if deg < 1:
        return False
    if deg == 1:
        return True
    x = 0b10

    def frob(h: int, times: int) -> int:
        for _ in range(times):
            h = poly_mod(poly_square(h), f)
        return h

    if frob(x, deg) != x:
        return False
    for q in sympy.primefactors(deg):
        h = frob(x, deg // q)
        if poly_gcd(f, h ^ x) != 1:
            return False
    return True


def is_irreducible_bruteforce(f: int) -> bool:
    """Trial division by every polynomial of degree 1..deg/2 (small degrees only)."""
    deg = f.bit_length() - 1
    if deg < 1:
        return False
    for g in range(2, 1 << (deg // 2 + 1)):
        if poly_mod(f, g) == 0:
            return False
    return True


def _search_modulus(ell: int) -> int:
    if ell == 1:
        return 0b11
    top = (1 << ell) | 1
    for k in range(1, ell):
        f = top | (1 << k)
        if is_irreducible(f):
            return f
    cands = sorted(
        top | (1 << a) | (1 << b) | (1 << c)
        for a in range(3, ell)
        for b in range(2, a)
        for c in range(1, b)
    )
    for f in cands:
        if is_irreducible(f):
            return f
    raise ValueError(f"no trinomial or pentanomial modulus for ell={ell}")


@lru_cache(maxsize=None)
def default_modulus(ell: int) -> int:
    if ell < 1:
        raise ValueError("field width must be >= 1")
    if ell in IRREDUCIBLE_MODULI:
        return IRREDUCIBLE_MODULI[ell]
    return _search_modulus(ell)


# ---------------------------------------------------------------------------
# GF(2^ell)


@dataclass(frozen=True)
class GF2Ctx:
    ell: int
    modulus: int

    def __post_init__(self):
        if self.ell < 1:
            raise ValueError("ell must be >= 1")
        if self.modulus.bit_length() - 1 != self.ell:
            raise ValueError("modulus degree must equal ell")

    @property
    def order(self) -> int:
        return 1 << self.ell

    @property
    def mask(self) -> int:
        return (1 << self.ell) - 1

    def contains(self, a: int) -> bool:
        return 0 <= a < (1 << self.ell)

    def check_modulus(self) -> bool:
        if self.ell <= 16:
            return is_irreducible_bruteforce(self.modulus)
        return is_irreducible(self.modulus)


@lru_cache(maxsize=None)
def gf2(ell: int) -> GF2Ctx:
    """Context for GF(2^ell) with the frozen default modulus."""
    return GF2Ctx(ell, default_modulus(ell))


def gf_reduce(a: int, ctx: GF2Ctx) -> int:
    ell = ctx.ell
    if a.bit_length() <= ell:
        return a
    tail = ctx.modulus ^ (1 << ell)
    mask = ctx.mask
    while a.bit_length() > ell:
        a = (a & mask) ^ clmul(a >> ell, tail)
    return a


def gf_mul(a: int, b: int, ctx: GF2Ctx) -> int:
    return gf_reduce(clmul(a, b), ctx)


def gf_square(a: int, ctx: GF2Ctx) -> int:
    return gf_reduce(poly_square(a), ctx)


def gf_pow(a: int, e: int, ctx: GF2Ctx) -> int:
    if e < 0:
        raise ValueError("exponent must be non-negative")
    result = 1
    base = a
    while e:
        if e & 1:
            result = gf_mul(result, base, ctx)
        e >>= 1
        if e:
            base = gf_square(base, ctx)
    return result


def gf_inv(a: int, ctx: GF2Ctx) -> int:
    if a == 0:
        raise DivisionByZero("0 has no inverse in GF(2^ell)")
    return gf_pow(a, ctx.order - 2, ctx)


def gf_mul_x(a: int, ctx: GF2Ctx) -> int:
    """Multiply by the monomial x (one shift and a conditional reduction)."""
    a <<= 1
    if a >> ctx.ell:
        a ^= ctx.modulus
    return a


@lru_cache(maxsize=None)
def _group_order_factors(ell: int) -> tuple[int, ...]:
    return tuple(sympy.primefactors((1 << ell) - 1))


def gf_order(a: int, ctx: GF2Ctx) -> int:
    """Multiplicative order of a nonzero element."""
    if a == 0:
        raise DivisionByZero("0 has no multiplicative order")
    order = ctx.order - 1
    for q in _group_order_factors(ctx.ell):
        while order % q == 0 and gf_pow(a, order // q, ctx) == 1:
            order //= q
    return order


@lru_cache(maxsize=None)
def gf_find_generator(ctx: GF2Ctx) -> int:
    """Smallest-valued generator of the multiplicative group GF(2^ell)*."""
    if ctx.ell > MAX_GENERATOR_WIDTH:
        raise GeneratorSearchInfeasible(
            f"generator search needs 2^{ctx.ell}-1 factored; cap is {MAX_GENERATOR_WIDTH}"
        )
    group = ctx.order - 1
    factors = _group_order_factors(ctx.ell)
    for g in range(1, ctx.order):
        if all(gf_pow(g, group // q, ctx) != 1 for q in factors):
            return g
    raise GeneratorSearchInfeasible("no generator found")  # unreachable for a field


@lru_cache(maxsize=None)
def dense_element(ell: int) -> int:
    """A fixed public element of GF(2^ell) with roughly half its bits set.

    Expanded from the width with SHAKE-256, so it is reproducible and has no
    structure relative to the modulus. The lowest and highest bits are forced
    on so the element is nonzero and of full degree.
    """
    raw = hashlib.shake_256(f"nmx-dense-element-{ell}".encode()).digest((ell + 7) // 8)
    v = int.from_bytes(raw, "big") & ((1 << ell) - 1)
    return v | 1 | (1 << (ell - 1))


def gf_basis(ctx: GF2Ctx) -> list[int]:
    return [1 << i for i in range(ctx.ell)]


# Lookup tables for the vectorised audits. Only for small widths.


@lru_cache(maxsize=None)
def gf_mul_table(ctx: GF2Ctx) -> np.ndarray:
    if ctx.ell > 10:
        raise ValueError("multiplication table only for ell <= 10")
    q = ctx.order
    table = np.zeros((q, q), dtype=np.int64)
    for a in range(q):
        for b in range(a, q):
            table[a, b] = table[b, a] = gf_mul(a, b, ctx)
    table.setflags(write=False)
    return table


@lru_cache(maxsize=None)
def gf_pow_table(ctx: GF2Ctx, e: int) -> np.ndarray:
    if ctx.ell > 16:
        raise ValueError("power table only for ell <= 16")
    t = np.array([gf_pow(a, e, ctx) for a in range(ctx.order)], dtype=np.int64)
    t.setflags(write=False)
    return t


# ---------------------------------------------------------------------------
# F_p


@dataclass(frozen=True)
class FpCtx:
    p: int

    def __post_init__(self):
        if not sympy.isprime(self.p):
            raise ValueError(f"{self.p} is not prime")

    def contains(self, a: int) -> bool:
        return 0 <= a < self.p


def is_prime(n: int) -> bool:
    return bool(sympy.isprime(n))


def fp_find_prime(lo: int, hi: int) -> int:
    """Smallest prime in the open interval (lo, hi)."""
    if lo >= hi:
        raise ValueError("need lo < hi")
    p = int(sympy.nextprime(lo))
    if p >= hi:
        raise NoPrimeInRange(f"no prime in ({lo}, {hi})")
    return p


FP_OPS = ("add", "sub", "mul", "inv", "pow")


def fp_arith(a: int, b: int | None, op: str, ctx: FpCtx, e: int | None = None) -> int:
    """Modular arithmetic in F_p. ``op`` is one of add, sub, mul, inv, pow.

    For ``inv`` the second operand is ignored; for ``pow`` the exponent is
    ``e`` (or ``b`` when ``e`` is not given).
    """
    p = ctx.p
    if op == "add":
        return (a + b) % p
    if op == "sub":
        return (a - b) % p
    if op == "mul":
        return (a * b) % p
    if op == "inv":
        if a % p == 0:
            raise DivisionByZero("0 has no inverse mod p")
        return pow(a, -1, p)
    if op == "pow":
        exp = e if e is not None else b
        if exp is None:
            raise ValueError("pow needs an exponent")
        if exp < 0:
            return pow(fp_arith(a, None, "inv", ctx), -exp, p)
        return pow(a, exp, p)
    raise ValueError(f"unknown op {op!r}")


def bits_of(v: int, width: int) -> list[int]:
    """Little-endian bit list of ``v`` (bit 0 first)."""
    return [(v >> i) & 1 for i in range(width)]


def pack_components(parts: Sequence[int], width: int) -> int:
    """Concatenate fixed-width values, first component in the high bits."""
    out = 0
    for part in parts:
        out = (out << width) | part
    return out


def unpack_components(v: int, count: int, width: int) -> list[int]:
    mask = (1 << width) - 1
    return [(v >> (width * (count - 1 - i))) & mask for i in range(count)]
