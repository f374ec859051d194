"""Exact finite distributions.

Probabilities are ``fractions.Fraction`` throughout; floats appear only
when a caller asks for them. Everything here is small-scale by design: a
joint distribution is a dict from tuples to probabilities.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptySubset,
    EnumerationBudgetExceeded,
    FixedPointAdversary,
    InvalidCoordinate,
)

DEFAULT_ENUMERATION_CAP = 1 << 28


def _log2_fraction(q: Fraction) -> float:
    # exact enough for the small rationals seen here, and exact on powers of 2
    return math.log2(q.numerator) - math.log2(q.denominator)


@dataclass(frozen=True)
class FlatSource:
    n_bits: int
    support: frozenset

    def __post_init__(self):
        object.__setattr__(self, "support", frozenset(self.support))
        if not self.support:
            raise ValueError("flat source needs a non-empty support")
        if any(v < 0 or v >> self.n_bits for v in self.support):
            raise ValueError("support element out of range")

    @classmethod
    def cube(cls, n_bits: int) -> FlatSource:
        return cls(n_bits, frozenset(range(1 << n_bits)))

    def __len__(self):
        return len(self.support)

    def __iter__(self):
        return iter(sorted(self.support))

    @property
    def min_entropy(self) -> float:
        return math.log2(len(self.support))

    def to_dist(self) -> ExplicitDist:
        p = Fraction(1, len(self.support))
        return ExplicitDist(self.n_bits, {v: p for v in self.support})


@dataclass(frozen=True)
class ExplicitDist:
    n_bits: int
    pmf: Mapping[int, Fraction]

    def __post_init__(self):
        clean = {}
        for v, p in self.pmf.items():
            p = Fraction(p)
            if p < 0:
                raise ValueError("negative probability")
            if v < 0 or v >> self.n_bits:
                raise ValueError(f"value {v} does not fit in {self.n_bits} bits")
            if p:
                clean[v] = p
        if sum(clean.values()) != 1:
            raise ValueError("probabilities must sum to exactly 1")
        object.__setattr__(self, "pmf", clean)

    @classmethod
    def uniform(cls, n_bits: int) -> ExplicitDist:
        p = Fraction(1, 1 << n_bits)
        return cls(n_bits, {v: p for v in range(1 << n_bits)})

    @classmethod
    def point(cls, n_bits: int, v: int) -> ExplicitDist:
        return cls(n_bits, {v: Fraction(1)})

    @classmethod
    def flat(cls, n_bits: int, support: Iterable[int]) -> ExplicitDist:
        return FlatSource(n_bits, frozenset(support)).to_dist()

    def support(self) -> list[int]:
        return sorted(self.pmf)

    def prob(self, v: int) -> Fraction:
        return self.pmf.get(v, Fraction(0))

    def to_json(self) -> dict:
        return {
            "n_bits": self.n_bits,
            "entries": [[v, p.numerator, p.denominator] for v, p in sorted(self.pmf.items())],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> ExplicitDist:
        return cls(obj["n_bits"], {v: Fraction(num, den) for v, num, den in obj["entries"]})


@dataclass(frozen=True)
class JointDist:
    """Distribution over tuples; ``widths[i]`` is the bit-length of coordinate i."""

    widths: tuple
    pmf: Mapping[tuple, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(self.widths))
        clean = {}
        for key, p in self.pmf.items():
            key = tuple(key)
            if len(key) != len(self.widths):
                raise DimensionMismatch("tuple length does not match widths")
            p = Fraction(p)
            if p < 0:
                raise ValueError("negative probability")
            if p:
                clean[key] = clean.get(key, Fraction(0)) + p
        if sum(clean.values()) != 1:
            raise ValueError("probabilities must sum to exactly 1")
        object.__setattr__(self, "pmf", clean)

    @property
    def arity(self) -> int:
        return len(self.widths)

    def _check(self, coords: Iterable[int]) -> tuple:
        coords = tuple(coords)
        for c in coords:
            if not 0 <= c < self.arity:
                raise InvalidCoordinate(f"coordinate {c} out of range")
        return coords

    def marginal(self, coords: Sequence[int]) -> JointDist:
        coords = self._check(coords)
        out: dict = defaultdict(Fraction)
        for key, p in self.pmf.items():
            out[tuple(key[c] for c in coords)] += p
        return JointDist(tuple(self.widths[c] for c in coords), dict(out))

    def coordinate(self, c: int) -> ExplicitDist:
        (c,) = self._check([c])
        out: dict = defaultdict(Fraction)
        for key, p in self.pmf.items():
            out[key[c]] += p
        return ExplicitDist(self.widths[c], dict(out))

    def to_json(self) -> dict:
        return {
            "widths": list(self.widths),
            "entries": [[list(k), p.numerator, p.denominator] for k, p in sorted(self.pmf.items())],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> JointDist:
        return cls(tuple(obj["widths"]), {tuple(k): Fraction(n, d) for k, n, d in obj["entries"]})

    @classmethod
    def product_of(cls, *dists: ExplicitDist) -> JointDist:
        pmf = {}
        for combo in product(*(d.pmf.items() for d in dists)):
            key = tuple(v for v, _ in combo)
            p = Fraction(1)
            for _, q in combo:
                p *= q
            pmf[key] = p
        return cls(tuple(d.n_bits for d in dists), pmf)


def as_dist(d) -> ExplicitDist:
    if isinstance(d, ExplicitDist):
        return d
    if isinstance(d, FlatSource):
        return d.to_dist()
    raise TypeError(f"cannot read {type(d).__name__} as a distribution")


# ---------------------------------------------------------------------------


def max_prob(d: ExplicitDist) -> Fraction:
    return max(as_dist(d).pmf.values())


def min_entropy(d: ExplicitDist) -> float:
    return -_log2_fraction(max_prob(d))


def stat_dist_exact(d1, d2) -> Fraction:
    """Half the L1 distance, as an exact rational."""
    if isinstance(d1, JointDist) or isinstance(d2, JointDist):
        if not (isinstance(d1, JointDist) and isinstance(d2, JointDist)):
            raise DimensionMismatch("cannot compare a joint with a single distribution")
        if d1.widths != d2.widths:
            raise DimensionMismatch("joint widths differ")
        a, b = d1.pmf, d2.pmf
    else:
        d1, d2 = as_dist(d1), as_dist(d2)
        if d1.n_bits != d2.n_bits:
            raise DimensionMismatch(f"{d1.n_bits}-bit vs {d2.n_bits}-bit")
        a, b = d1.pmf, d2.pmf
    zero = Fraction(0)
    total = sum(abs(a.get(k, zero) - b.get(k, zero)) for k in set(a) | set(b))
    return Fraction(total) / 2


def stat_dist(d1, d2) -> float:
    return float(stat_dist_exact(d1, d2))


def avg_cond_guess_prob(j: JointDist, target: int, given: Sequence[int]) -> Fraction:
    """E_w[max_x Pr[X=x | W=w]] = sum_w max_x Pr[X=x, W=w]."""
    given = tuple(given)
    coords = j._check((target,) + given)
    if target in given or len(set(given)) != len(given):
        raise InvalidCoordinate("target and conditioning coordinates must be distinct")
    best: dict = {}
    joint: dict = defaultdict(Fraction)
    for key, p in j.pmf.items():
        joint[(key[target], tuple(key[c] for c in coords[1:]))] += p
    for (x, w), p in joint.items():
        if p > best.get(w, Fraction(0)):
            best[w] = p
    return sum(best.values(), Fraction(0))


def avg_cond_min_entropy(j: JointDist, target: int, given: Sequence[int]) -> float:
    return -_log2_fraction(avg_cond_guess_prob(j, target, given))


def cond_min_entropies(j: JointDist, target: int, given: Sequence[int]) -> dict:
    """Map w -> (Pr[W=w], H_inf(X | W=w)) for the pointwise conditional entropies."""
    given = tuple(given)
    j._check((target,) + given)
    joint: dict = defaultdict(Fraction)
    pw: dict = defaultdict(Fraction)
    for key, p in j.pmf.items():
        w = tuple(key[c] for c in given)
        joint[(key[target], w)] += p
        pw[w] += p
    best: dict = defaultdict(Fraction)
    for (x, w), p in joint.items():
        best[w] = max(best[w], p)
    return {w: (pw[w], -_log2_fraction(best[w] / pw[w])) for w in pw}


# ---------------------------------------------------------------------------
# non-malleability experiment


def nm_joint(
    ext: Callable[[int, int], int],
    X,
    Yd,
    advs: Sequence[Callable[[int], int]] = (),
    m: int = 1,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> JointDist:
    """Joint law of (ext(X,Y), ext(X,A_1(Y)), ..., ext(X,A_r(Y)), Y).

    ``X`` is a FlatSource (or ExplicitDist); ``Yd`` an ExplicitDist over the
    seed space. ``m`` is the extractor output width in bits.
    """
    xd = as_dist(X)
    yd = as_dist(Yd)
    if len(xd.pmf) * len(yd.pmf) > cap:
        raise EnumerationBudgetExceeded(
            f"{len(xd.pmf)} x {len(yd.pmf)} pairs exceeds cap {cap}"
        )
    seeds = yd.support()
    for i, adv in enumerate(advs):
        for y in seeds:
            if adv(y) == y:
                raise FixedPointAdversary(f"adversary {i} fixes seed {y}")
    xs = xd.support()
    x_uniform = len(set(xd.pmf.values())) == 1
    widths = (m,) * (1 + len(advs)) + (yd.n_bits,)
    batch = getattr(ext, "batch", None)
    if batch is not None and x_uniform and m * (1 + len(advs)) <= 62:
        return JointDist(widths, _nm_joint_batched(batch, xs, yd, advs, m))
    pmf: dict = {}
    for y in seeds:
        tampered = [adv(y) for adv in advs]
        if x_uniform:
            counts = Counter(
                (ext(x, y),) + tuple(ext(x, t) for t in tampered) for x in xs
            )
            w = yd.pmf[y] / len(xs)
            for key, c in counts.items():
                pmf[key + (y,)] = w * c
        else:
            acc: dict = defaultdict(Fraction)
            for x in xs:
                acc[(ext(x, y),) + tuple(ext(x, t) for t in tampered)] += xd.pmf[x]
            for key, p in acc.items():
                pmf[key + (y,)] = yd.pmf[y] * p
    return JointDist(widths, pmf)


def _nm_joint_batched(batch, xs, yd: ExplicitDist, advs, m: int) -> dict:
    # one numpy pass per seed: pack the output tuple into an int, count codes
    xarr = np.asarray(xs, dtype=np.int64)
    mask = (1 << m) - 1
    r = len(advs)
    pmf: dict = {}
    for y, py in yd.pmf.items():
        code = np.asarray(batch(xarr, y), dtype=np.int64)
        for adv in advs:
            code = (code << m) | np.asarray(batch(xarr, adv(y)), dtype=np.int64)
        vals, counts = np.unique(code, return_counts=True)
        w = py / len(xs)
        for v, c in zip(vals.tolist(), counts.tolist()):
            key = tuple((v >> (m * (r - i))) & mask for i in range(r + 1))
            pmf[key + (y,)] = w * c
    return pmf


def nm_error_exact(j: JointDist) -> Fraction:
    """Distance of j from the law with coordinate 0 replaced by independent uniform."""
    m = j.widths[0]
    rest: dict = defaultdict(Fraction)
    for key, p in j.pmf.items():
        rest[key[1:]] += p
    u = Fraction(1, 1 << m)
    total = Fraction(0)
    seen_rest_mass: dict = defaultdict(Fraction)
    for key, p in j.pmf.items():
        r = key[1:]
        total += abs(p - u * rest[r])
        seen_rest_mass[r] += u * rest[r]
    # outputs z never hit for a given rest contribute u * P(rest) each
    for r, pr in rest.items():
        total += u * pr * (1 << m) - seen_rest_mass[r]
    return total / 2


def nm_error(j: JointDist) -> float:
    return float(nm_error_exact(j))


def per_seed_nm_errors(j: JointDist) -> dict:
    """Map seed -> exact error of the conditional law given that seed.

    The seed is the last coordinate. The overall nm error is the
    Pr[Y=y]-weighted sum of these.
    """
    by_seed: dict = defaultdict(dict)
    py: dict = defaultdict(Fraction)
    for key, p in j.pmf.items():
        by_seed[key[-1]][key[:-1]] = p
        py[key[-1]] += p
    out = {}
    for y, sub in by_seed.items():
        cond = {k: p / py[y] for k, p in sub.items()}
        out[y] = nm_error_exact(JointDist(j.widths[:-1], cond))
    return out


def xor_bias_exact(j: JointDist, S1: Iterable[int], S2: Iterable[int] = ()) -> Fraction:
    """|2 Pr[XOR of selected bits = 0] - 1| for bits S1 of coordinate 0 and S2 of coordinate 1.

    Bit indices are 0-based (bit i is ``(value >> i) & 1``).
    """
    S1, S2 = tuple(S1), tuple(S2)
    if not S1:
        raise EmptySubset("S1 must be non-empty")
    for i in S1:
        if not 0 <= i < j.widths[0]:
            raise InvalidCoordinate(f"bit {i} outside first block")
    if S2 and (j.arity < 2 or any(not 0 <= i < j.widths[1] for i in S2)):
        raise InvalidCoordinate("bad second-block bit index")
    mask1 = sum(1 << i for i in S1)
    mask2 = sum(1 << i for i in S2)
    p0 = Fraction(0)
    for key, p in j.pmf.items():
        bit = (key[0] & mask1).bit_count() & 1
        if S2:
            bit ^= (key[1] & mask2).bit_count() & 1
        if bit == 0:
            p0 += p
    return abs(2 * p0 - 1)


def xor_bias(j: JointDist, S1: Iterable[int], S2: Iterable[int] = ()) -> float:
    return float(xor_bias_exact(j, S1, S2))


def render(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}" if q.denominator != 1 else str(q.numerator)


def nm_error_counts(
    batch: Callable[[np.ndarray, int], np.ndarray],
    xs: Sequence[int],
    seeds: Sequence[int],
    advs: Sequence[Callable[[int], int]] = (),
    m: int = 1,
) -> tuple[Fraction, dict]:
    """nm error for X flat on ``xs`` and Y uniform on ``seeds``, by integer counting.

    Returns (overall error, {seed: conditional error}). Equivalent to
    ``nm_error_exact(nm_joint(...))`` with both distributions flat, but
    works on integer histograms instead of rational dictionaries.
    """
    xarr = np.asarray(xs, dtype=np.int64)
    r = len(advs)
    if m * (r + 1) > 24:
        raise EnumerationBudgetExceeded("output tuple too wide for histogram counting")
    size = 1 << (m * (r + 1))
    scale = 1 << m
    per_seed = {}
    total = 0
    for y in seeds:
        rest = np.zeros(len(xarr), dtype=np.int64)
        for adv in advs:
            t = adv(y)
            if t == y:
                raise FixedPointAdversary(f"adversary fixes seed {y}")
            rest = (rest << m) | np.asarray(batch(xarr, t), dtype=np.int64)
        code = (rest << m) | np.asarray(batch(xarr, y), dtype=np.int64)
        joint = np.bincount(code, minlength=size).reshape(-1, scale)
        marg = joint.sum(axis=1, keepdims=True)
        num = int(np.abs(scale * joint - marg).sum())
        per_seed[y] = Fraction(num, 2 * scale * len(xarr))
        total += num
    return Fraction(total, 2 * scale * len(xarr) * len(seeds)), per_seed
