"""Non-malleable extractor constructions and the two-source reduction.

Every construction is the F_2 inner product of an encoded source with a
BCH-encoded seed. ``build(cfg)`` returns an ``NmExtractor`` exposing the
scalar map, a numpy ``batch`` form for sweeps, and its shape.

Multi-bit outputs use the scalars b_i = x^i of GF(2^ell) (the monomial
basis for i < ell, continuing with higher powers of x past ell). Bit i of
the output is <Enc(x), (b_i z, b_i z^3)>. Because t -> <(a, b), (t z, t z^3)>
is F_2-linear in t, it equals <f, t> for a single vector f depending on
(x, z); we compute f once and read off every bit as parity(f & b_i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .codes import SeedEncoding, enc_bch, enc_source_exp
from .errors import OutputTooWide, SeedWidthMismatch, ZeroSource
from .extractors import CondenserPlan, parity, parity_np, somewhere_condense
from .fields import (
    FpCtx,
    GF2Ctx,
    fp_find_prime,
    gf2,
    gf_find_generator,
    gf_mul,
    gf_mul_x,
    gf_pow,
    is_prime,
    pack_components,
    unpack_components,
)

VARIANTS = ("half", "below_half", "fp_quadratic", "multibit", "reduced_seed", "generic_r")
CLI_NAMES = {
    "half": "half",
    "below-half": "below_half",
    "fp-quad": "fp_quadratic",
    "multibit": "multibit",
    "reduced-seed": "reduced_seed",
    "generic-r": "generic_r",
}

# numpy fast paths are built only when the encoded width fits a machine word
_BATCH_WIDTH = 62


@dataclass(frozen=True)
class NmExtConfig:
    """Parameters for one construction.

    n: source bits. ell: seed-field width (derived when omitted). r: number
    of tampered seeds the encoding is built for. t: distance parameter of
    the reduced-seed encoding. M: output modulus for fp_quadratic (a power
    of two). m: output bits for multibit. base: source encoding used by
    multibit ("half" or "below_half"). delta: free entropy-rate parameter,
    carried for reports only.
    """

    variant: str
    n: int
    ell: int | None = None
    r: int = 1
    t: int = 1
    M: int = 2
    m: int = 1
    p: int | None = None
    base: str = "half"
    embed: str = "top"
    delta: float = 0.1

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.variant in ("half", "multibit") and self.base == "half" and self.n % 2:
            raise ValueError("the half construction needs n even")
        if self.variant == "fp_quadratic":
            if self.M < 1 or self.M & (self.M - 1):
                raise ValueError("M must be a power of two")

    @classmethod
    def from_dict(cls, d: dict) -> NmExtConfig:
        d = dict(d)
        d["variant"] = CLI_NAMES.get(d["variant"], d["variant"])
        return cls(**d)


def below_half_prime(n: int) -> int:
    """Smallest prime p with n < p < n + ceil(n^0.525) + 1."""
    return fp_find_prime(n, n + math.ceil(n**0.525) + 1)


# ---------------------------------------------------------------------------
# scalar constructions


def nm_half(x: int, y: int, cfg: NmExtConfig) -> int:
    """<x, (z, z^3)> with z = embed(y) in GF(2^(n/2))."""
    enc = _seed_encoding(cfg.n // 2, 1, cfg.embed)
    return parity(x & enc_bch(y, enc))


def nm_below(x: int, y: int, cfg: NmExtConfig) -> int:
    """<(x, g^x), (z, z^3)> over GF(2^p), p the prime just above n."""
    if x == 0:
        raise ZeroSource("the source must be nonzero")
    p = cfg.p or below_half_prime(cfg.n)
    ctx = gf2(p)
    g = gf_find_generator(ctx)
    return parity(enc_source_exp(x, ctx, g) & enc_bch(y, _seed_encoding(p, 1, cfg.embed)))


def nm_fp(x: int, y: int, cfg: NmExtConfig) -> int:
    """<(x, x^2), (y, y^2)> over F_p, reduced mod M."""
    p = cfg.p
    if p is None or not is_prime(p):
        raise ValueError("fp_quadratic needs a prime p")
    if cfg.M > p:
        raise OutputTooWide(f"M = {cfg.M} exceeds p = {p}")
    return ((x * y + x * x * y * y) % p) % cfg.M


def nm_generic_r(x: int, y: int, f: Callable[[int], int], r: int, cfg: NmExtConfig) -> int:
    """<f(x), (z, z^3, ..., z^(2r+1))>."""
    ell = cfg.ell or cfg.n // (r + 1)
    return parity(f(x) & enc_bch(y, _seed_encoding(ell, r, cfg.embed)))


def reduced_seed_encoding(y: int, t: int, ell: int, p: int, embed: str = "top") -> int:
    """(z, z^3, ..., z^(4t-1)) over GF(2^ell), zero-padded on the right to 2p bits."""
    width = 2 * t * ell
    if width > 2 * p:
        raise SeedWidthMismatch(f"2t*ell = {width} exceeds 2p = {2 * p}")
    col = enc_bch(y, _seed_encoding(ell, 2 * t - 1, embed))
    return col << (2 * p - width)


def nm_reduced_seed(x: int, y: int, cfg: NmExtConfig) -> int:
    """<(x, g^x), padded (z, z^3, ..., z^(4t-1))> with a short seed."""
    if x == 0:
        raise ZeroSource("the source must be nonzero")
    p = cfg.p or below_half_prime(cfg.n)
    ell = cfg.ell or p
    ctx = gf2(p)
    g = gf_find_generator(ctx)
    return parity(enc_source_exp(x, ctx, g) & reduced_seed_encoding(y, cfg.t, ell, p, cfg.embed))


def multibit_scalars(ctx: GF2Ctx, m: int) -> list[int]:
    out, b = [], 1
    for _ in range(m):
        out.append(b)
        b = gf_mul_x(b, ctx)
    return out


def transpose_functional(a: int, z: int, ctx: GF2Ctx) -> int:
    """The vector f with <a, t*z> = <f, t> for all t in GF(2^ell)."""
    f = 0
    v = z
    for j in range(ctx.ell):
        f |= parity(a & v) << j
        v = gf_mul_x(v, ctx)
    return f


def nm_multibit(x: int, y: int, cfg: NmExtConfig) -> int:
    """m output bits; bit i is <Enc(x), (b_i z, b_i z^3)> with b_i = x^i."""
    return _multibit_from_parts(*_multibit_parts(x, y, cfg), cfg.m)


def _multibit_parts(x: int, y: int, cfg: NmExtConfig) -> tuple:
    if cfg.base == "half":
        ell = cfg.n // 2
        ctx = gf2(ell)
        src = x
    else:
        if x == 0:
            raise ZeroSource("the source must be nonzero")
        ell = cfg.p or below_half_prime(cfg.n)
        ctx = gf2(ell)
        src = enc_source_exp(x, ctx, gf_find_generator(ctx))
    enc = _seed_encoding(ell, 1, cfg.embed)
    z = enc.to_field(y)
    z3 = gf_pow(z, 3, ctx)
    hi, lo = unpack_components(src, 2, ell)
    f = transpose_functional(hi, z, ctx) ^ transpose_functional(lo, z3, ctx)
    return f, ctx


def _multibit_from_parts(f: int, ctx: GF2Ctx, m: int) -> int:
    # f -> (<f, b_i>)_i is linear; apply it a byte of f at a time
    out = 0
    for tab in _readout_tables(ctx, m):
        out ^= tab[f & 0xFF]
        f >>= 8
    return out


_READOUT_CACHE: dict = {}


def _readout_tables(ctx: GF2Ctx, m: int) -> list:
    key = (ctx, m)
    if key not in _READOUT_CACHE:
        scalars = _scalars(ctx, m)
        cols = [sum(((b >> j) & 1) << i for i, b in enumerate(scalars)) for j in range(ctx.ell)]
        tables = []
        for start in range(0, ctx.ell, 8):
            chunk = cols[start : start + 8]
            tab = [0] * 256
            for byte in range(1, 256):
                low = byte & -byte
                j = low.bit_length() - 1
                tab[byte] = tab[byte ^ low] ^ (chunk[j] if j < len(chunk) else 0)
            tables.append(tab)
        _READOUT_CACHE[key] = tables
    return _READOUT_CACHE[key]


_SCALAR_CACHE: dict = {}


def _scalars(ctx: GF2Ctx, m: int) -> list[int]:
    key = (ctx, m)
    if key not in _SCALAR_CACHE:
        _SCALAR_CACHE[key] = multibit_scalars(ctx, m)
    return _SCALAR_CACHE[key]


_ENC_CACHE: dict = {}


def _seed_encoding(ell: int, r: int, embed: str) -> SeedEncoding:
    key = (ell, r, embed)
    if key not in _ENC_CACHE:
        _ENC_CACHE[key] = SeedEncoding(gf2(ell), r, embed)
    return _ENC_CACHE[key]


# ---------------------------------------------------------------------------
# uniform wrapper


@dataclass
class NmExtractor:
    """A configured construction with shape information and a batch form."""

    cfg: NmExtConfig
    f: Callable[[int], int] | None = None
    _seed_cols: dict = field(default_factory=dict, repr=False)

    @property
    def name(self) -> str:
        return self.cfg.variant

    @cached_property
    def ell(self) -> int:
        v = self.cfg.variant
        if v == "half" or (v == "multibit" and self.cfg.base == "half"):
            return self.cfg.n // 2
        if v in ("below_half", "multibit"):
            return self.cfg.p or below_half_prime(self.cfg.n)
        if v == "reduced_seed":
            return self.cfg.ell or self.cfg.p or below_half_prime(self.cfg.n)
        if v == "generic_r":
            return self.cfg.ell or self.cfg.n // (self.cfg.r + 1)
        return 0

    @property
    def seed_bits(self) -> int:
        if self.cfg.variant == "fp_quadratic":
            return self.cfg.p.bit_length()
        return self.ell - 1 if self.cfg.embed == "top" else self.ell

    @property
    def out_bits(self) -> int:
        v = self.cfg.variant
        if v == "multibit":
            return self.cfg.m
        if v == "fp_quadratic":
            return self.cfg.M.bit_length() - 1
        return 1

    def seeds(self) -> list[int]:
        if self.cfg.variant == "fp_quadratic":
            return list(range(self.cfg.p))
        if self.cfg.embed == "top":
            return list(range(1 << (self.ell - 1)))
        return list(range(1, 1 << self.ell))

    def sources(self) -> list[int]:
        v = self.cfg.variant
        if v == "fp_quadratic":
            return list(range(self.cfg.p))
        lo = 1 if v in ("below_half", "reduced_seed") or (v == "multibit" and self.cfg.base != "half") else 0
        return list(range(lo, 1 << self.cfg.n))

    def __call__(self, x: int, y: int) -> int:
        v = self.cfg.variant
        if v == "half":
            return nm_half(x, y, self.cfg)
        if v == "below_half":
            return nm_below(x, y, self.cfg)
        if v == "fp_quadratic":
            return nm_fp(x, y, self.cfg)
        if v == "multibit":
            return nm_multibit(x, y, self.cfg)
        if v == "reduced_seed":
            return nm_reduced_seed(x, y, self.cfg)
        return nm_generic_r(x, y, self.f or (lambda u: u), self.cfg.r, self.cfg)

    # -- batch form ------------------------------------------------------

    def seed_vector(self, y: int) -> int:
        """Encoded seed, for the single-bit IP constructions."""
        if y not in self._seed_cols:
            v, cfg = self.cfg.variant, self.cfg
            if v == "half":
                col = enc_bch(y, _seed_encoding(self.ell, 1, cfg.embed))
            elif v == "below_half":
                col = enc_bch(y, _seed_encoding(self.ell, 1, cfg.embed))
            elif v == "reduced_seed":
                p = cfg.p or below_half_prime(cfg.n)
                col = reduced_seed_encoding(y, cfg.t, self.ell, p, cfg.embed)
            elif v == "generic_r":
                col = enc_bch(y, _seed_encoding(self.ell, cfg.r, cfg.embed))
            else:
                raise TypeError(f"{v} has no single seed vector")
            self._seed_cols[y] = col
        return self._seed_cols[y]

    @cached_property
    def _source_table(self) -> np.ndarray | None:
        # encoded source for every x, when that fits
        v = self.cfg.variant
        n = self.cfg.n
        if n > 16:
            return None
        if v in ("half",) or (v == "multibit" and self.cfg.base == "half"):
            return np.arange(1 << n, dtype=np.int64)
        if v == "generic_r":
            f = self.f or (lambda u: u)
            return np.array([f(x) for x in range(1 << n)], dtype=object if (self.cfg.r + 1) * self.ell > _BATCH_WIDTH else np.int64)
        if v in ("below_half", "reduced_seed", "multibit"):
            p = self.cfg.p or below_half_prime(n)
            if 2 * p > _BATCH_WIDTH:
                return None
            ctx = gf2(p)
            g = gf_find_generator(ctx)
            tab = np.zeros(1 << n, dtype=np.int64)
            for x in range(1, 1 << n):
                tab[x] = enc_source_exp(x, ctx, g)
            return tab
        return None

    @property
    def has_batch(self) -> bool:
        v = self.cfg.variant
        if v == "fp_quadratic":
            return True
        if v == "multibit":
            return self._source_table is not None and self.ell <= 16
        return self._source_table is not None and self._source_table.dtype == np.int64

    def batch(self, xs: np.ndarray, y: int) -> np.ndarray:
        v = self.cfg.variant
        if v == "fp_quadratic":
            p, M = self.cfg.p, self.cfg.M
            return ((xs * y + (xs * xs % p) * (y * y % p)) % p) % M
        tab = self._source_table
        if v in ("below_half", "reduced_seed") and (xs == 0).any():
            raise ZeroSource("the source must be nonzero")
        src = tab[xs]
        if v == "multibit":
            return self._multibit_batch(src, y)
        return parity_np(src & self.seed_vector(y))

    def _multibit_batch(self, src: np.ndarray, y: int) -> np.ndarray:
        ell = self.ell
        ctx = gf2(ell)
        z = _seed_encoding(ell, 1, self.cfg.embed).to_field(y)
        z3 = gf_pow(z, 3, ctx)
        hi, lo = src >> ell, src & ctx.mask
        # column j of the transpose functional: <hi, x^j z> xor <lo, x^j z^3>
        f = np.zeros(len(src), dtype=np.int64)
        u, w = z, z3
        for j in range(ell):
            f |= (parity_np(hi & u) ^ parity_np(lo & w)) << j
            u, w = gf_mul_x(u, ctx), gf_mul_x(w, ctx)
        out = np.zeros(len(src), dtype=np.int64)
        for i, b in enumerate(_scalars(ctx, self.cfg.m)):
            out |= parity_np(f & b) << i
        return out

    def ext(self):
        """A plain (x, y) -> output callable, carrying ``batch`` when available."""

        def fn(x, y):
            return self(x, y)

        if self.has_batch:
            fn.batch = self.batch
        return fn


def build(cfg: NmExtConfig, f: Callable[[int], int] | None = None) -> NmExtractor:
    return NmExtractor(cfg, f)


def by_name(name: str, **params) -> NmExtractor:
    variant = CLI_NAMES.get(name, name)
    return build(NmExtConfig(variant=variant, **params))


# ---------------------------------------------------------------------------
# two-source extractor from a non-malleable one


def tag_bits(rows: int) -> int:
    return max(1, math.ceil(math.log2(rows))) if rows > 1 else 1


def two_source_seeds(y: int, n: int, plan: CondenserPlan | int) -> list[int]:
    """Condensed rows of y, each with its row index appended as a tag."""
    out = somewhere_condense(y, n, plan)
    tb = tag_bits(len(out.rows))
    return [(row << tb) | j for j, row in enumerate(out.rows)]


def nm_to_two_source(
    x: int,
    y: int,
    nm: Callable[[int, int], int],
    n_y: int,
    plan: CondenserPlan | int,
    seed_bits: int | None = None,
) -> int:
    """XOR over rows j of nm(x, row_j . tag_j)."""
    if isinstance(plan, int):
        plan = CondenserPlan(plan)
    if n_y % plan.rows:
        from .errors import IndivisibleBlocks

        raise IndivisibleBlocks(f"{plan.rows} rows do not divide {n_y} bits")
    width = n_y // plan.rows + tag_bits(plan.rows)
    if seed_bits is None:
        seed_bits = getattr(nm, "seed_bits", width)
    if width != seed_bits:
        raise SeedWidthMismatch(f"row + tag = {width} bits but the seed takes {seed_bits}")
    out = 0
    for s in two_source_seeds(y, n_y, plan):
        out ^= nm(x, s)
    return out
