"""Seed and source encodings, and exhaustive audits of their counting facts.

A seed y is mapped to a nonzero field element z = embed(y) and encoded as
the parity-check column (z, z^3, ..., z^(2r+1)) of a binary BCH code. The
audits check the combinatorial facts the constructions rely on: small sets
of columns are linearly independent, and tampered encodings have few
preimages.

Packed values put the first component in the high bits.
"""

from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    EnumerationBudgetExceeded,
    FixedPointAdversary,
    ZeroCoefficient,
    ZeroSource,
)
from .fields import (
    FpCtx,
    GF2Ctx,
    gf2,
    gf_mul,
    gf_mul_table,
    gf_pow,
    gf_pow_table,
    pack_components,
    unpack_components,
)

DEFAULT_AUDIT_CAP = 1 << 27

AdversaryFn = Callable[[int], int]


@dataclass(frozen=True)
class SeedEncoding:
    """BCH column encoding of seeds.

    ``embed="top"`` maps an (ell-1)-bit seed y to z = y + 2^(ell-1);
    ``embed="identity"`` takes seeds in [1, 2^ell) and uses z = y, which
    covers the full column set.
    """

    ctx: GF2Ctx
    r: int = 1
    embed: str = "top"

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("r must be >= 0")
        if self.embed not in ("top", "identity"):
            raise ValueError(f"unknown embedding {self.embed!r}")
        if self.embed == "top" and self.ctx.ell < 1:
            raise ValueError("top-bit embedding needs ell >= 1")

    @property
    def ell(self) -> int:
        return self.ctx.ell

    @property
    def seed_bits(self) -> int:
        return self.ell - 1 if self.embed == "top" else self.ell

    @property
    def width(self) -> int:
        return (self.r + 1) * self.ell

    @property
    def exponents(self) -> tuple:
        return tuple(2 * i + 1 for i in range(self.r + 1))

    def domain(self) -> list[int]:
        if self.embed == "top":
            return list(range(1 << (self.ell - 1)))
        return list(range(1, 1 << self.ell))

    def to_field(self, y: int) -> int:
        if self.embed == "top":
            if not 0 <= y < (1 << (self.ell - 1)):
                raise ValueError(f"seed {y} outside {self.ell - 1}-bit space")
            return y | (1 << (self.ell - 1))
        if not 0 < y < (1 << self.ell):
            raise ValueError(f"seed {y} outside GF(2^{self.ell})*")
        return y

    def column(self, z: int) -> int:
        return pack_components([gf_pow(z, e, self.ctx) for e in self.exponents], self.ell)

    @classmethod
    def make(cls, ell: int, r: int = 1, embed: str = "top") -> SeedEncoding:
        return cls(gf2(ell), r, embed)


def enc_bch(y: int, enc: SeedEncoding) -> int:
    """(z, z^3, ..., z^(2r+1)) packed into (r+1)*ell bits, z = embed(y)."""
    return enc.column(enc.to_field(y))


def enc_source_exp(x: int, ctx: GF2Ctx, g: int) -> int:
    """(x, g^x) packed into 2*ell bits; the bit pattern of x is the exponent."""
    if x == 0:
        raise ZeroSource("source value 0 is outside the multiplicative group")
    if not ctx.contains(x):
        raise ValueError(f"{x} does not fit {ctx.ell} bits")
    return pack_components([x, gf_pow(g, x, ctx)], ctx.ell)


def enc_source_quad(x: int, ctx: FpCtx) -> tuple[int, int]:
    return (x % ctx.p, x * x % ctx.p)


def column_table(enc: SeedEncoding) -> np.ndarray:
    """Encoded column for every element of GF(2^ell), indexed by z (row 0 unused)."""
    tab = np.zeros(enc.ctx.order, dtype=np.int64)
    for z in range(1, enc.ctx.order):
        tab[z] = enc.column(z)
    return tab


# ---------------------------------------------------------------------------
# reports


@dataclass
class AuditReport:
    claim: str
    params: dict
    functions_checked: int = 0
    max_preimages: int = 0
    bound: int | None = None
    violations: int = 0
    histogram: dict = field(default_factory=dict)
    witness: object = None

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_json(self) -> dict:
        out = asdict(self)
        out["ok"] = self.ok
        out["histogram"] = {str(k): v for k, v in sorted(self.histogram.items())}
        if self.witness is None:
            out.pop("witness")
        return out

    def merge_counts(self, maxes: np.ndarray):
        vals, counts = np.unique(maxes, return_counts=True)
        for v, c in zip(vals.tolist(), counts.tolist()):
            self.histogram[v] = self.histogram.get(v, 0) + c
        self.functions_checked += int(maxes.size)
        if maxes.size:
            self.max_preimages = max(self.max_preimages, int(maxes.max()))
        if self.bound is not None:
            self.violations += int((maxes > self.bound).sum())


# ---------------------------------------------------------------------------
# linear independence


def _rank_f2(vectors: Iterable[int]) -> int:
    basis: list[int] = []
    for v in vectors:
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
    return len(basis)


def audit_linear_independence(
    enc: SeedEncoding, w: int, cap: int = DEFAULT_AUDIT_CAP, chunk: int = 1 << 18
) -> AuditReport:
    """Check that every w-subset of the full column set is F_2-independent.

    w may exceed 2(r+1); the audit then simply reports whether independence
    happens to hold. The witness, if any, lists the field elements z.
    """
    cols = column_table(enc)[1:]
    zs = np.arange(1, enc.ctx.order)
    total = math.comb(len(cols), w)
    report = AuditReport(
        "linear_independence",
        {"ell": enc.ell, "r": enc.r, "w": w, "columns": len(cols)},
        bound=0,
    )
    if total > cap:
        raise EnumerationBudgetExceeded(f"C({len(cols)}, {w}) = {total} exceeds cap {cap}")
    if w > len(cols):
        return report
    masks = range(1, 1 << w)
    it = combinations(range(len(cols)), w)
    while True:
        flat = np.fromiter((i for combo in _take(it, chunk) for i in combo), dtype=np.int64)
        if flat.size == 0:
            break
        idx = flat.reshape(-1, w)
        vals = cols[idx]
        dependent = np.zeros(len(idx), dtype=bool)
        for mask in masks:
            acc = np.zeros(len(idx), dtype=np.int64)
            for b in range(w):
                if mask >> b & 1:
                    acc ^= vals[:, b]
            dependent |= acc == 0
        report.functions_checked += len(idx)
        bad = int(dependent.sum())
        if bad and report.witness is None:
            first = idx[np.argmax(dependent)]
            report.witness = [int(zs[i]) for i in first]
            assert _rank_f2(int(cols[i]) for i in first) < w
        report.violations += bad
    return report


def _take(it: Iterator, k: int) -> Iterator:
    for _ in range(k):
        try:
            yield next(it)
        except StopIteration:
            return


# ---------------------------------------------------------------------------
# single-function preimage audits


def _check_adversary(A: AdversaryFn, domain: Sequence[int]) -> list[int]:
    out = []
    for y in domain:
        a = A(y)
        if a == y:
            raise FixedPointAdversary(f"adversary fixes seed {y}")
        out.append(a)
    return out


def _max_multiplicity(values: Iterable) -> int:
    counts: dict = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return max(counts.values())


def audit_preimages_sum(enc: SeedEncoding, A: AdversaryFn) -> int:
    """max_v |{y : enc(y) xor enc(A(y)) = v}|."""
    dom = enc.domain()
    images = _check_adversary(A, dom)
    return _max_multiplicity(enc_bch(y, enc) ^ enc_bch(a, enc) for y, a in zip(dom, images))


def audit_preimages_linear(enc: SeedEncoding, A: AdversaryFn, t1: int, t2: int) -> int:
    """max_v |{y : t1*(z, z^3) + t2*(z', z'^3) = v}|, z' the encoding of A(y)."""
    if enc.r != 1:
        raise ValueError("the linear audit is defined for r = 1")
    if t1 == 0:
        raise ZeroCoefficient("t1 must be nonzero")
    ctx = enc.ctx
    dom = enc.domain()
    images = _check_adversary(A, dom)

    def combo(y, a):
        z, z3 = unpack_components(enc_bch(y, enc), 2, enc.ell)
        u, u3 = unpack_components(enc_bch(a, enc), 2, enc.ell)
        return (gf_mul(t1, z, ctx) ^ gf_mul(t2, u, ctx), gf_mul(t1, z3, ctx) ^ gf_mul(t2, u3, ctx))

    return _max_multiplicity(combo(y, a) for y, a in zip(dom, images))


def audit_preimages_fp(p: int, A: AdversaryFn, r_coef: int) -> int:
    """max_v |{y : (y, y^2) + r*(A(y), A(y)^2) = v}| over F_p."""
    FpCtx(p)
    if r_coef % p == 0:
        raise ZeroCoefficient("r must be nonzero mod p")
    dom = list(range(p))
    images = [a % p for a in _check_adversary(A, dom)]
    return _max_multiplicity(
        ((y + r_coef * a) % p, (y * y + r_coef * a * a) % p) for y, a in zip(dom, images)
    )


# ---------------------------------------------------------------------------
# vectorised exhaustive sweeps over fixed-point-free functions


def count_fixed_point_free(D: int) -> int:
    return (D - 1) ** D


def fixed_point_free_chunks(D: int, chunk: int = 1 << 16) -> Iterator[np.ndarray]:
    """All maps f: [D] -> [D] with f(i) != i, as rows of index arrays.

    Row j is decoded from j in mixed radix D-1: digit i picks f(i) among the
    D-1 values other than i.
    """
    total = count_fixed_point_free(D)
    pos = np.arange(D)
    radix = (D - 1) ** pos
    for start in range(0, total, chunk):
        j = np.arange(start, min(total, start + chunk), dtype=np.int64)
        digits = (j[:, None] // radix[None, :]) % (D - 1)
        yield digits + (digits >= pos[None, :])


def random_fixed_point_free(D: int, count: int, rng: np.random.Generator) -> np.ndarray:
    digits = rng.integers(0, D - 1, size=(count, D))
    return digits + (digits >= np.arange(D)[None, :])


def max_run_per_row(values: np.ndarray) -> np.ndarray:
    """Largest multiplicity of a value within each row."""
    s = np.sort(values, axis=1)
    D = s.shape[1]
    best = np.ones(len(s), dtype=np.int64)
    for k in range(2, D + 1):
        hit = (s[:, k - 1 :] == s[:, : D - k + 1]).any(axis=1)
        if not hit.any():
            break
        best[hit] = k
    return best


def _domain_fields(enc: SeedEncoding) -> np.ndarray:
    return np.array([enc.to_field(y) for y in enc.domain()], dtype=np.int64)


def sweep_preimages_sum(enc: SeedEncoding, cap: int = DEFAULT_AUDIT_CAP) -> AuditReport:
    """audit_preimages_sum over every fixed-point-free function on the seed domain."""
    zf = _domain_fields(enc)
    D = len(zf)
    total = count_fixed_point_free(D)
    if total > cap:
        raise EnumerationBudgetExceeded(f"{total} functions exceed cap {cap}")
    cols = column_table(enc)[zf]
    report = AuditReport(
        "preimages_sum",
        {"ell": enc.ell, "r": enc.r, "embed": enc.embed, "domain": D},
        bound=2,
    )
    for F in fixed_point_free_chunks(D):
        maxes = max_run_per_row(cols[None, :] ^ cols[F])
        if report.witness is None and (maxes > 2).any():
            report.witness = F[np.argmax(maxes > 2)].tolist()
        report.merge_counts(maxes)
    return report


def _linear_values(enc, zf, F, t1, t2):
    mul = gf_mul_table(enc.ctx)
    cube = gf_pow_table(enc.ctx, 3)
    z = zf[None, :]
    u = zf[F]
    a = mul[t1, z] ^ mul[t2, u]
    b = mul[t1, cube[z]] ^ mul[t2, cube[u]]
    return (a << enc.ell) | b


def sweep_preimages_linear(enc: SeedEncoding, cap: int = DEFAULT_AUDIT_CAP) -> AuditReport:
    """audit_preimages_linear over all (A, t1 != 0, t2)."""
    if enc.r != 1:
        raise ValueError("the linear audit is defined for r = 1")
    zf = _domain_fields(enc)
    D = len(zf)
    q = enc.ctx.order
    total = count_fixed_point_free(D) * (q - 1) * q
    if total > cap:
        raise EnumerationBudgetExceeded(f"{total} cases exceed cap {cap}")
    report = AuditReport(
        "preimages_linear",
        {"ell": enc.ell, "embed": enc.embed, "domain": D},
        bound=3,
    )
    for F in fixed_point_free_chunks(D):
        for t1 in range(1, q):
            for t2 in range(q):
                maxes = max_run_per_row(_linear_values(enc, zf, F, t1, t2))
                if report.witness is None and (maxes > 3).any():
                    report.witness = {"A": F[np.argmax(maxes > 3)].tolist(), "t1": t1, "t2": t2}
                report.merge_counts(maxes)
    return report


def sample_preimages_linear(
    enc: SeedEncoding, samples: int, seed: int = 0, batch: int = 1 << 14
) -> AuditReport:
    """Random (A, t1 != 0, t2) triples; for fields too large to enumerate."""
    zf = _domain_fields(enc)
    D = len(zf)
    q = enc.ctx.order
    rng = np.random.default_rng(seed)
    report = AuditReport(
        "preimages_linear_sampled",
        {"ell": enc.ell, "embed": enc.embed, "domain": D, "samples": samples, "seed": seed},
        bound=3,
    )
    mul = gf_mul_table(enc.ctx)
    cube = gf_pow_table(enc.ctx, 3)
    done = 0
    while done < samples:
        k = min(batch, samples - done)
        F = random_fixed_point_free(D, k, rng)
        t1 = rng.integers(1, q, size=(k, 1))
        t2 = rng.integers(0, q, size=(k, 1))
        z = np.broadcast_to(zf[None, :], F.shape)
        u = zf[F]
        a = mul[t1, z] ^ mul[t2, u]
        b = mul[t1, cube[z]] ^ mul[t2, cube[u]]
        maxes = max_run_per_row((a << enc.ell) | b)
        if report.witness is None and (maxes > 3).any():
            i = int(np.argmax(maxes > 3))
            report.witness = {"A": F[i].tolist(), "t1": int(t1[i, 0]), "t2": int(t2[i, 0])}
        report.merge_counts(maxes)
        done += k
    return report


def sweep_preimages_fp(p: int, cap: int = DEFAULT_AUDIT_CAP) -> AuditReport:
    """audit_preimages_fp over every fixed-point-free A on F_p and every r != 0.

    The histogram is split by whether r = -1, the case where the quadratic
    encoding collapses (y' = y would be forced), so it is reported separately.
    """
    FpCtx(p)
    total = count_fixed_point_free(p) * (p - 1)
    if total > cap:
        raise EnumerationBudgetExceeded(f"{total} cases exceed cap {cap}")
    y = np.arange(p, dtype=np.int64)[None, :]
    report = AuditReport("preimages_fp", {"p": p}, bound=2)
    by_r: dict = {}
    for F in fixed_point_free_chunks(p):
        for r in range(1, p):
            v = ((y + r * F) % p) * p + (y * y + r * F * F) % p
            maxes = max_run_per_row(v)
            if report.witness is None and (maxes > 2).any():
                report.witness = {"A": F[np.argmax(maxes > 2)].tolist(), "r": r}
            report.merge_counts(maxes)
            by_r[r] = max(by_r.get(r, 0), int(maxes.max()))
    report.params["max_by_r"] = {str(r): m for r, m in sorted(by_r.items())}
    return report


def affine_offsets(enc: SeedEncoding) -> list[np.ndarray]:
    """Index arrays for z -> z xor c on the domain, for every c keeping z in range."""
    zf = _domain_fields(enc)
    pos = {int(z): i for i, z in enumerate(zf)}
    out = []
    for c in range(1, enc.ctx.order):
        img = [pos.get(int(z) ^ c) for z in zf]
        if all(i is not None for i in img):
            out.append(np.array(img))
    return out


def random_adversary(domain: Sequence[int], rng: random.Random) -> dict:
    out = {}
    for y in domain:
        a = rng.choice(domain)
        while a == y:
            a = rng.choice(domain)
        out[y] = a
    return out
