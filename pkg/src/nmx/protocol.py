"""Two-round privacy amplification over a channel controlled by Eve.

Alice and Bob share a weak secret X. Alice sends three random seeds; Bob
answers with a fresh seed W', a MAC tag on W' under a key Z' extracted
from X, and a look-ahead value V' derived from X and a non-malleable
extraction of X's condensed rows. Alice recomputes both checks and either
rejects or outputs Ext(X; W). Bob never rejects.

Everything runs on plain ints with explicit bit widths. A session is a
deterministic function of X, the parties' randomness streams and Eve's
strategy, so any run can be replayed from its experiment seed.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .errors import EnumerationBudgetExceeded, InsufficientRandomness, WidthMismatch
from .extractors import CondenserPlan, short_seed_ext, somewhere_condense, two_source_ip
from .fields import gf2, gf_mul
from .nmext import NmExtConfig, NmExtractor, build

# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class ProtocolParams:
    """Widths for one protocol instance.

    d: seed length of the seeded extractors; d_nm: seed length of the
    non-malleable extractor; key_bits: length of the final key. The seed
    sizes |Y2|, |Y3| follow the fixed formulas unless ``y2_override`` /
    ``y3_override`` relax them (recorded in ``relaxed``).
    """

    n: int
    k: int
    s: int
    C: int
    d: int
    d_nm: int
    key_bits: int
    name: str = "custom"
    y2_override: int | None = None
    y3_override: int | None = None
    eps_bound: float = 0.05

    def __post_init__(self):
        for f in ("n", "k", "s", "C", "d", "d_nm", "key_bits"):
            if getattr(self, f) < 1:
                raise WidthMismatch(f"{f} must be positive")
        if self.k > self.n:
            raise WidthMismatch("k cannot exceed n")
        if self.n % self.C:
            raise WidthMismatch(f"C = {self.C} rows do not divide n = {self.n}")
        if self.row_bits % 2:
            raise WidthMismatch("condensed rows must have even width")
        if self.d_nm != self.row_bits // 2 - 1:
            raise WidthMismatch(
                f"the non-malleable extractor on {self.row_bits}-bit rows takes "
                f"{self.row_bits // 2 - 1} seed bits, not {self.d_nm}"
            )
        if sum(self.v_widths) >= self.z_bits:
            raise WidthMismatch("look-ahead output must be shorter than the MAC key")

    @property
    def dmax(self) -> int:
        return max(self.d, self.d_nm)

    @property
    def y1_bits(self) -> int:
        return self.dmax

    @property
    def y2_formula(self) -> int:
        return 4 * self.C * self.d + 31 * self.dmax + 4 * self.s

    @property
    def y3_formula(self) -> int:
        return 30 * self.dmax + 3 * self.s

    @property
    def y2_bits(self) -> int:
        return self.y2_override or self.y2_formula

    @property
    def y3_bits(self) -> int:
        return self.y3_override or self.y3_formula

    @property
    def relaxed(self) -> bool:
        return self.y2_override is not None or self.y3_override is not None

    @property
    def row_bits(self) -> int:
        return self.n // self.C

    @property
    def z_bits(self) -> int:
        return (1 << self.C) * 6 * self.s

    @property
    def tag_bits(self) -> int:
        return (1 << self.C) * 3 * self.s

    @property
    def nm_out_bits(self) -> int:
        return 6 * (1 << self.C) * self.s

    @property
    def v_widths(self) -> tuple:
        return tuple((1 << (self.C - i)) * 2 * self.s for i in range(1, self.C + 1))

    @property
    def v_bits(self) -> int:
        return sum(self.v_widths)

    @property
    def target_eps(self) -> float:
        return 2.0**-self.s

    def with_k(self, k: int) -> ProtocolParams:
        return replace(self, k=k)

    def to_json(self) -> dict:
        out = asdict(self)
        out.update(
            y1_bits=self.y1_bits,
            y2_bits=self.y2_bits,
            y3_bits=self.y3_bits,
            y2_formula=self.y2_formula,
            y3_formula=self.y3_formula,
            relaxed=self.relaxed,
            z_bits=self.z_bits,
            tag_bits=self.tag_bits,
            nm_out_bits=self.nm_out_bits,
            v_widths=list(self.v_widths),
            target_eps=self.target_eps,
        )
        return out


PRESETS = {
    # |Y2| and |Y3| shrink to d bits so the whole randomness space can be enumerated
    "micro": ProtocolParams(n=12, k=12, s=1, C=1, d=2, d_nm=5, key_bits=2, name="micro",
                            y2_override=2, y3_override=2),
    "small": ProtocolParams(n=64, k=48, s=4, C=2, d=8, d_nm=15, key_bits=16, name="small"),
    "demo": ProtocolParams(n=1024, k=512, s=16, C=4, d=32, d_nm=127, key_bits=64, name="demo"),
}


def preset(name: str) -> ProtocolParams:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


# ---------------------------------------------------------------------------
# randomness streams


class RngStream:
    """Unbounded stream of random bits from a seeded ``random.Random``."""

    def __init__(self, rng: random.Random):
        self.rng = rng

    def bits(self, k: int) -> int:
        return self.rng.getrandbits(k) if k else 0


class FixedStream:
    """Hands out the bits of a fixed value, high bits first."""

    def __init__(self, value: int, width: int):
        if value >> width:
            raise ValueError("value wider than the declared width")
        self.value = value
        self.left = width

    @classmethod
    def of(cls, parts: Sequence[tuple[int, int]]) -> FixedStream:
        v, w = 0, 0
        for part, width in parts:
            v, w = (v << width) | part, w + width
        return cls(v, w)

    def bits(self, k: int) -> int:
        if k > self.left:
            raise InsufficientRandomness(f"asked for {k} bits, {self.left} left")
        self.left -= k
        return (self.value >> self.left) & ((1 << k) - 1)


# ---------------------------------------------------------------------------
# sources


@dataclass(frozen=True)
class SubcubeSource:
    """Flat source: the top n-k bits are fixed to ``prefix``, the rest uniform."""

    n: int
    k: int
    prefix: int = 0

    def sample(self, rng: random.Random) -> int:
        return (self.prefix << self.k) | rng.getrandbits(self.k)

    def support(self) -> Iterator[int]:
        base = self.prefix << self.k
        return (base | u for u in range(1 << self.k))

    def __len__(self):
        return 1 << self.k


# ---------------------------------------------------------------------------
# MAC


def mac_tag(key: int, msg: int, v: int, d: int) -> int:
    """k2 + sum_i w_i k1^i over GF(2^v); key = (k1, k2), k1 in the high bits.

    The message is cut into ceil(d/v) v-bit blocks, w_1 the lowest.
    """
    if v < 1:
        raise ValueError("tag length must be >= 1")
    if key >> (2 * v) or msg >> d:
        raise WidthMismatch("key or message wider than declared")
    ctx = gf2(v)
    k1, k2 = key >> v, key & ctx.mask
    c = -(-d // v)
    acc = 0
    for i in range(c, 0, -1):
        acc = gf_mul(acc ^ ((msg >> (v * (i - 1))) & ctx.mask), k1, ctx)
    return acc ^ k2


def mac_bound(v: int, d: int, leaked_bits: int = 0) -> Fraction:
    return Fraction(-(-d // v)) * Fraction(2) ** (leaked_bits - v)


def _tag_table(v: int, d: int) -> np.ndarray:
    keys = 1 << (2 * v)
    table = np.empty((1 << d, keys), dtype=np.int64)
    for w in range(1 << d):
        for key in range(keys):
            table[w, key] = mac_tag(key, w, v, d)
    return table


def mac_forgery_advantage(
    v: int,
    d: int,
    leak_positions: Sequence[int] = (),
    cap: int = 1 << 26,
    table: np.ndarray | None = None,
) -> Fraction:
    """Exact best one-query forgery probability for a uniform key.

    Eve learns the key bits at ``leak_positions``, picks W from that
    leakage, sees the tag of W, and outputs (W', T') with W' != W. The
    value is maximised over all such strategies by enumeration.
    """
    nkeys = 1 << (2 * v)
    if (1 << d) ** 2 * nkeys > cap:
        raise EnumerationBudgetExceeded(f"v={v}, d={d} too large for exhaustive search")
    if table is None:
        table = _tag_table(v, d)
    keys = np.arange(nkeys)
    leak = np.zeros(nkeys, dtype=np.int64)
    for j, pos in enumerate(leak_positions):
        leak |= ((keys >> pos) & 1) << j
    n_leak = 1 << len(leak_positions)
    T = 1 << v
    nmsg = 1 << d
    best_per_leak = np.zeros(n_leak, dtype=np.int64)
    others = np.arange(nmsg)
    for w in range(nmsg):
        # cell = (leak, observed tag); count (w', forged tag) per cell
        cell = leak * T + table[w]
        idx = (cell[None, :] * nmsg + others[:, None]) * T + table
        counts = np.bincount(idx.ravel(), minlength=n_leak * T * nmsg * T)
        counts = counts.reshape(n_leak, T, nmsg, T)
        counts[:, :, w, :] = 0
        wins = counts.max(axis=(2, 3)).sum(axis=1)
        np.maximum(best_per_leak, wins, out=best_per_leak)
    return Fraction(int(best_per_leak.sum()), nkeys)


# ---------------------------------------------------------------------------
# extractors used by the protocol


def seeded_ext(x: int, seed: int, m: int, n: int, d: int) -> int:
    """The protocol's Ext, Ext_q, Ext_w and Ext_v (short seeds).

    When m exceeds n the output cannot carry more than n bits of entropy;
    small presets hit this for the MAC key and the report says so.
    """
    return short_seed_ext(x, seed, m, n, d)


def two_source_step(s0: int, x: int, s0_bits: int, n: int, m: int) -> int:
    """Two-source step: inner-product extractor on (S0, X), shorter input zero-padded."""
    return two_source_ip(s0, x, max(s0_bits, n), m, pad=True)


@dataclass(frozen=True)
class AltExtraction:
    S: tuple
    R: tuple
    V: tuple


def alt_extract(x: int, xbar: Sequence[int], q: int, s0: int, params: ProtocolParams) -> AltExtraction:
    """Alternating extraction between (Q, S0) and (X, Xbar).

    R0 = 2Ext(S0, X) (inner-product two-source step); then for i = 1..C:
    S_i = Ext_q(Q, R_{i-1}), R_i = Ext_w(X, S_i), V_i = Ext_v(Xbar_i, S_i).
    """
    p = params
    if len(xbar) != p.C:
        raise WidthMismatch(f"expected {p.C} rows, got {len(xbar)}")
    if x >> p.n or q >> p.y2_bits or s0 >> p.y3_bits:
        raise WidthMismatch("input wider than its declared width")
    if any(r >> p.nm_out_bits for r in xbar):
        raise WidthMismatch("row of Xbar wider than the non-malleable output")
    S, R, V = [s0], [two_source_step(s0, x, p.y3_bits, p.n, p.d)], []
    for i in range(1, p.C + 1):
        si = seeded_ext(q, R[-1], p.d, p.y2_bits, p.d)
        S.append(si)
        R.append(seeded_ext(x, si, p.d, p.n, p.d))
        V.append(seeded_ext(xbar[i - 1], si, p.v_widths[i - 1], p.nm_out_bits, p.d))
    return AltExtraction(tuple(S), tuple(R), tuple(V))


def look_ahead_ext(x: int, xbar: Sequence[int], q: int, s0: int, params: ProtocolParams) -> tuple:
    return alt_extract(x, xbar, q, s0, params).V


def pack_v(vs: Sequence[int], params: ProtocolParams) -> int:
    out = 0
    for v, w in zip(vs, params.v_widths):
        out = (out << w) | v
    return out


# ---------------------------------------------------------------------------
# messages and outcomes


@dataclass(frozen=True)
class Round1:
    y1: int
    y2: int
    y3: int

    def widths(self, p: ProtocolParams) -> dict:
        return {"y1": p.y1_bits, "y2": p.y2_bits, "y3": p.y3_bits}


@dataclass(frozen=True)
class Round2:
    w: int
    t: int
    v: int

    def widths(self, p: ProtocolParams) -> dict:
        return {"w": p.d, "t": p.tag_bits, "v": p.v_bits}


def _check_widths(msg, p: ProtocolParams):
    for name, width in msg.widths(p).items():
        val = getattr(msg, name)
        if val < 0 or val >> width:
            raise WidthMismatch(f"{name} = {val} does not fit {width} bits")


@dataclass(frozen=True)
class PartyOutcome:
    accepted: bool
    key: int | None = None

    @classmethod
    def accept(cls, key: int) -> PartyOutcome:
        return cls(True, key)

    @classmethod
    def reject(cls) -> PartyOutcome:
        return cls(False, None)

    def to_json(self):
        return {"status": "accept", "key": self.key} if self.accepted else {"status": "reject"}


@dataclass(frozen=True)
class AliceState:
    x: int
    sent: Round1


# ---------------------------------------------------------------------------
# party logic


class Protocol:
    """One configured instance; holds the non-malleable extractor for the rows."""

    def __init__(self, params: ProtocolParams, nm: NmExtractor | None = None):
        self.params = params
        if nm is None:
            nm = build(NmExtConfig("multibit", n=params.row_bits, m=params.nm_out_bits, base="half"))
        if nm.seed_bits != params.d_nm or nm.out_bits != params.nm_out_bits:
            raise WidthMismatch("non-malleable extractor shape does not match the parameters")
        self.nm = nm
        self._derived: dict = {}

    def rows(self, x: int) -> tuple:
        return somewhere_condense(x, self.params.n, CondenserPlan(self.params.C)).rows

    def mac_key(self, x: int, y1: int) -> int:
        p = self.params
        return seeded_ext(x, y1 >> (p.y1_bits - p.d), p.z_bits, p.n, p.d)

    def xbar(self, x: int, y1: int) -> tuple:
        p = self.params
        seed = y1 >> (p.y1_bits - p.d_nm)
        return tuple(self.nm(row, seed) for row in self.rows(x))

    def final_key(self, x: int, w: int) -> int:
        p = self.params
        return seeded_ext(x, w, p.key_bits, p.n, p.d)

    def derive(self, x: int, r1: Round1) -> tuple[int, int]:
        """(MAC key Z, packed look-ahead output V) for a given round-1 view.

        Pure in (x, r1); memoised because both parties evaluate it on the
        same inputs whenever round 1 arrives intact.
        """
        key = (x, r1)
        hit = self._derived.get(key)
        if hit is None:
            z = self.mac_key(x, r1.y1)
            v = look_ahead_ext(x, self.xbar(x, r1.y1), r1.y2, r1.y3, self.params)
            hit = (z, pack_v(v, self.params))
            if len(self._derived) > 4096:
                self._derived.clear()
            self._derived[key] = hit
        return hit

    def alice_round1(self, x: int, rand) -> tuple[Round1, AliceState]:
        p = self.params
        y1 = rand.bits(p.y1_bits)
        y2 = rand.bits(p.y2_bits)
        y3 = rand.bits(p.y3_bits)
        msg = Round1(y1, y2, y3)
        return msg, AliceState(x, msg)

    def bob_round(self, x: int, received: Round1, rand) -> tuple[Round2, PartyOutcome]:
        p = self.params
        _check_widths(received, p)
        w = rand.bits(p.d)
        z, v = self.derive(x, received)
        t = mac_tag(z, w, p.tag_bits, p.d)
        return Round2(w, t, v), PartyOutcome.accept(self.final_key(x, w))

    def alice_finalize(self, state: AliceState, received: Round2) -> PartyOutcome:
        p = self.params
        try:
            _check_widths(received, p)
        except WidthMismatch:
            return PartyOutcome.reject()
        z, v = self.derive(state.x, state.sent)
        if received.t != mac_tag(z, received.w, p.tag_bits, p.d) or received.v != v:
            return PartyOutcome.reject()
        return PartyOutcome.accept(self.final_key(state.x, received.w))


# ---------------------------------------------------------------------------
# Eve


@dataclass
class EveView:
    params: ProtocolParams
    leak: int
    rng: random.Random
    round1_sent: Round1 | None = None
    round1_delivered: Round1 | None = None


@dataclass
class EveStrategy:
    """Side information plus a tamper function per direction.

    ``leak_positions`` selects the bits of X that Eve learns; the leakage
    width must stay within the budget so that enough entropy remains.
    """

    name: str
    round1: Callable[[Round1, EveView], Round1] = lambda m, view: m
    round2: Callable[[Round2, EveView], Round2] = lambda m, view: m
    leak_positions: tuple = ()

    def leak(self, x: int) -> int:
        out = 0
        for j, pos in enumerate(self.leak_positions):
            out |= ((x >> pos) & 1) << j
        return out

    def check_budget(self, params: ProtocolParams, budget: int | None = None):
        budget = params.s if budget is None else budget
        if len(self.leak_positions) > budget:
            raise ValueError(f"strategy {self.name} leaks {len(self.leak_positions)} > {budget} bits")


def _flip(field_name: str, which: str, pos: int = 0):
    def tamper(m, view):
        width = getattr(m, "widths")(view.params)[field_name]
        return replace(m, **{field_name: getattr(m, field_name) ^ (1 << (pos % width))})

    return tamper


def _truncate_pad(m: Round2, view: EveView) -> Round2:
    # keep the high half of W and zero-fill the rest
    d = view.params.d
    keep = d // 2
    return replace(m, w=(m.w >> (d - keep)) << (d - keep))


def _adaptive_table(seed: int = 7):
    table_rng = random.Random(seed)
    table = [table_rng.getrandbits(64) for _ in range(256)]

    def tamper(m: Round2, view: EveView) -> Round2:
        p = view.params
        row = table[view.round1_sent.y1 & 0xFF]
        w = (m.w ^ row) & ((1 << p.d) - 1) or 1
        t = m.t ^ ((row >> 8) & ((1 << p.tag_bits) - 1))
        return replace(m, w=w, t=t)

    return tamper


def _leak_guided(m: Round2, view: EveView) -> Round2:
    # pick W' from the leaked bits of X and guess the tag offset from the same bits
    p = view.params
    mask = (1 << p.d) - 1
    w = (m.w ^ (view.leak | 1)) & mask
    t = m.t ^ (view.leak & ((1 << p.tag_bits) - 1))
    return replace(m, w=w, t=t)


def _flip_y1_and_w(m: Round1, view: EveView) -> Round1:
    return replace(m, y1=m.y1 ^ 1)


def _random_round2(m: Round2, view: EveView) -> Round2:
    p = view.params
    return Round2(view.rng.getrandbits(p.d), view.rng.getrandbits(p.tag_bits), m.v)


def eve_library(params: ProtocolParams) -> dict:
    """Name -> EveStrategy for the shipped tampering strategies."""
    low = tuple(range(min(params.s, params.n)))
    lib = [
        EveStrategy("passive"),
        EveStrategy("flip-w", round2=_flip("w", "w")),
        EveStrategy("flip-w-high", round2=_flip("w", "w", params.d - 1)),
        EveStrategy("flip-t", round2=_flip("t", "t")),
        EveStrategy("flip-v", round2=_flip("v", "v")),
        EveStrategy("flip-y1", round1=_flip("y1", "y1")),
        EveStrategy("flip-y2", round1=_flip("y2", "y2")),
        EveStrategy("flip-y3", round1=_flip("y3", "y3")),
        EveStrategy("flip-y1-w", round1=_flip_y1_and_w, round2=_flip("w", "w")),
        EveStrategy("replace-round1", round1=lambda m, view: Round1(0, 0, 0)),
        EveStrategy("replace-round2", round2=lambda m, view: Round2(0, 0, 0)),
        EveStrategy("random-round2", round2=_random_round2),
        EveStrategy("truncate-pad", round2=_truncate_pad),
        EveStrategy("adaptive-table", round2=_adaptive_table()),
        EveStrategy("leak-guided", round2=_leak_guided, leak_positions=low),
    ]
    return {e.name: e for e in lib}


# ---------------------------------------------------------------------------
# sessions


@dataclass
class SessionRecord:
    trial: int
    x: int
    sent1: Round1
    recv1: Round1
    sent2: Round2
    recv2: Round2
    alice: PartyOutcome
    bob: PartyOutcome

    @property
    def tampered(self) -> bool:
        return self.sent1 != self.recv1 or self.sent2 != self.recv2

    @property
    def both_accept(self) -> bool:
        return self.alice.accepted and self.bob.accepted

    @property
    def robustness_violation(self) -> bool:
        return self.both_accept and self.alice.key != self.bob.key

    def to_json(self, params: ProtocolParams, with_keys: bool = True) -> dict:
        def enc(m):
            return {k: [getattr(m, k), w] for k, w in m.widths(params).items()}

        out = {
            "trial": self.trial,
            "messages_sent": {"round1": enc(self.sent1), "round2": enc(self.sent2)},
            "messages_received": {"round1": enc(self.recv1), "round2": enc(self.recv2)},
            "outcome_A": self.alice.to_json(),
            "outcome_B": self.bob.to_json(),
        }
        if not with_keys:
            out["outcome_A"].pop("key", None)
            out["outcome_B"].pop("key", None)
        return out


def run_one(
    proto: Protocol,
    x: int,
    eve: EveStrategy,
    alice_rand,
    bob_rand,
    eve_rng: random.Random | None = None,
    trial: int = 0,
) -> SessionRecord:
    view = EveView(proto.params, eve.leak(x), eve_rng or random.Random(0))
    sent1, state = proto.alice_round1(x, alice_rand)
    view.round1_sent = sent1
    recv1 = eve.round1(sent1, view)
    view.round1_delivered = recv1
    sent2, bob = proto.bob_round(x, recv1, bob_rand)
    recv2 = eve.round2(sent2, view)
    alice = proto.alice_finalize(state, recv2)
    return SessionRecord(trial, x, sent1, recv1, sent2, recv2, alice, bob)


def wilson_interval(successes: int, trials: int, z: float = 3.0) -> tuple[float, float]:
    if trials == 0:
        return (0.0, 1.0)
    ph = successes / trials
    denom = 1 + z * z / trials
    centre = (ph + z * z / (2 * trials)) / denom
    half = z * math.sqrt(ph * (1 - ph) / trials + z * z / (4 * trials * trials)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))


@dataclass
class SessionStats:
    strategy: str = ""
    trials: int = 0
    both_accept: int = 0
    keys_match: int = 0
    alice_accept: int = 0
    tampered: int = 0
    alice_accept_tampered: int = 0
    robustness_violations: int = 0

    def add(self, rec: SessionRecord):
        self.trials += 1
        self.both_accept += rec.both_accept
        self.keys_match += rec.both_accept and rec.alice.key == rec.bob.key
        self.alice_accept += rec.alice.accepted
        self.tampered += rec.tampered
        self.alice_accept_tampered += rec.tampered and rec.alice.accepted
        self.robustness_violations += rec.robustness_violation

    def merge(self, other: SessionStats) -> SessionStats:
        out = SessionStats(self.strategy or other.strategy)
        for f in ("trials", "both_accept", "keys_match", "alice_accept", "tampered",
                  "alice_accept_tampered", "robustness_violations"):
            setattr(out, f, getattr(self, f) + getattr(other, f))
        return out

    @property
    def correctness_rate(self) -> float:
        return self.keys_match / self.trials if self.trials else 0.0

    @property
    def robustness_rate(self) -> float:
        return self.robustness_violations / self.trials if self.trials else 0.0

    def to_json(self) -> dict:
        out = asdict(self)
        out["correctness_rate"] = self.correctness_rate
        out["robustness_rate"] = self.robustness_rate
        out["robustness_wilson"] = list(wilson_interval(self.robustness_violations, self.trials))
        out["alice_accept_tampered_wilson"] = list(
            wilson_interval(self.alice_accept_tampered, self.trials)
        )
        return out


def run_session(
    source,
    eve: EveStrategy,
    params: ProtocolParams,
    trials: int,
    seed: int = 0,
    proto: Protocol | None = None,
    transcript=None,
) -> SessionStats:
    """Monte Carlo over X, party randomness and Eve's coins; one stream per trial."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    eve.check_budget(params)
    proto = proto or Protocol(params)
    stats = SessionStats(eve.name)
    for trial in range(trials):
        rng = random.Random(f"{seed}:{trial}")
        x = source.sample(rng)
        rec = run_one(
            proto,
            x,
            eve,
            RngStream(random.Random(rng.getrandbits(64))),
            RngStream(random.Random(rng.getrandbits(64))),
            random.Random(rng.getrandbits(64)),
            trial,
        )
        stats.add(rec)
        if transcript is not None:
            transcript.write(json.dumps(rec.to_json(params), sort_keys=True) + "\n")
    return stats


def default_source(params: ProtocolParams) -> SubcubeSource:
    return SubcubeSource(params.n, params.k)


# ---------------------------------------------------------------------------
# exact analysis at micro scale


@dataclass
class MicroTables:
    """Every protocol value at micro scale, tabulated from the real functions."""

    params: ProtocolParams
    xs: np.ndarray
    z: np.ndarray  # [x, y1]
    v: np.ndarray  # [x, y1, y2, y3]
    tag: np.ndarray  # [x, y1, w]
    key: np.ndarray  # [x, w]


def micro_tables(params: ProtocolParams, xs: Iterable[int], budget: int = 1 << 24) -> MicroTables:
    p = params
    xs = np.fromiter(xs, dtype=np.int64)
    n1, n2, n3, nw = 1 << p.y1_bits, 1 << p.y2_bits, 1 << p.y3_bits, 1 << p.d
    if len(xs) * n1 * n2 * n3 * nw > budget:
        raise EnumerationBudgetExceeded("micro enumeration exceeds budget")
    proto = Protocol(p)
    z = np.empty((len(xs), n1), dtype=np.int64)
    v = np.empty((len(xs), n1, n2, n3), dtype=np.int64)
    tag = np.empty((len(xs), n1, nw), dtype=np.int64)
    key = np.empty((len(xs), nw), dtype=np.int64)
    for i, x in enumerate(xs.tolist()):
        for w in range(nw):
            key[i, w] = proto.final_key(x, w)
        for y1 in range(n1):
            zz = proto.mac_key(x, y1)
            z[i, y1] = zz
            xbar = proto.xbar(x, y1)
            for w in range(nw):
                tag[i, y1, w] = mac_tag(zz, w, p.tag_bits, p.d)
            for y2 in range(n2):
                for y3 in range(n3):
                    v[i, y1, y2, y3] = pack_v(look_ahead_ext(x, xbar, y2, y3, p), p)
    return MicroTables(p, xs, z, v, tag, key)


@dataclass
class ExtractionResult:
    k: int
    tv: Fraction
    views: int
    conditioning: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "tv": f"{self.tv.numerator}/{self.tv.denominator}",
            "tv_float": float(self.tv),
            "views": self.views,
            "conditioning": self.conditioning,
        }


def _view_codes(t: MicroTables) -> np.ndarray:
    """Code of Eve's passive view (Y1, Y2, Y3, W, T, V) for every (x, y1, y2, y3, w)."""
    p = t.params
    n1, n2, n3, nw = t.v.shape[1], t.v.shape[2], t.v.shape[3], t.key.shape[1]
    y1 = np.arange(n1)[None, :, None, None, None]
    y2 = np.arange(n2)[None, None, :, None, None]
    y3 = np.arange(n3)[None, None, None, :, None]
    w = np.arange(nw)[None, None, None, None, :]
    tag = t.tag[:, :, None, None, :]
    v = t.v[:, :, :, :, None]
    code = y1
    code = code * n2 + y2
    code = code * n3 + y3
    code = code * nw + w
    code = (code << p.tag_bits) | tag
    code = (code << p.v_bits) | v
    return code


def exact_extraction(params: ProtocolParams, k: int | None = None) -> ExtractionResult:
    """TV of (R_A, passive view) from (uniform, passive view), X flat with k free bits.

    Under a passive Eve Alice always accepts, so conditioning on acceptance
    is vacuous here; the flag is still checked from the tables.
    """
    p = params if k is None else params.with_k(k)
    src = default_source(p)
    t = micro_tables(p, src.support())
    codes = _view_codes(t)
    keys = np.broadcast_to(t.key[:, None, None, None, :], codes.shape)
    flat_view = codes.ravel()
    uniq, view_idx = np.unique(flat_view, return_inverse=True)
    K = 1 << p.key_bits
    joint = np.bincount(view_idx * K + keys.ravel(), minlength=len(uniq) * K).reshape(-1, K)
    marg = joint.sum(axis=1, keepdims=True)
    total = int(joint.sum())
    tv = Fraction(int(np.abs(K * joint - marg).sum()), 2 * K * total)
    cond = conditioning_check(t, codes)
    return ExtractionResult(p.k, tv, len(uniq), cond)


def conditioning_check(t: MicroTables, codes: np.ndarray, eps_list=(0.5, 0.25, 0.125)) -> dict:
    """Pr_v[H(X | V=v) >= H(X) - log|range V| - log 1/eps] >= 1 - eps, on the exact joint.

    V here is the part of the view that depends on X: (T, V) given the seeds.
    The range size is 2^(|T| + |V|) and X is flat, so H(X) = k.
    """
    p = t.params
    nx = len(t.xs)
    hx = math.log2(nx)
    # per view, how many x share it; H(X | view) = log2(count) since X is flat and seeds independent
    per_seed_view = codes.reshape(nx, -1).T  # rows: seed tuples, cols: x
    out = {}
    for eps in eps_list:
        threshold = hx - (p.tag_bits + p.v_bits) - math.log2(1 / eps)
        good = 0
        total = 0
        for row in per_seed_view:
            vals, counts = np.unique(row, return_counts=True)
            ent = np.log2(counts)
            good += int(counts[ent >= threshold - 1e-12].sum())
            total += nx
        frac = good / total
        out[str(eps)] = {"threshold": threshold, "fraction": frac, "holds": frac >= 1 - eps}
    return out


def exhaustive_passive_micro(params: ProtocolParams, xs: Iterable[int]) -> SessionStats:
    """Run the real state machines for every X in ``xs`` and every randomness choice."""
    p = params
    proto = Protocol(p)
    eve = EveStrategy("passive")
    stats = SessionStats("passive-exhaustive")
    for x in xs:
        for y1 in range(1 << p.y1_bits):
            for y2 in range(1 << p.y2_bits):
                for y3 in range(1 << p.y3_bits):
                    for w in range(1 << p.d):
                        a = FixedStream.of([(y1, p.y1_bits), (y2, p.y2_bits), (y3, p.y3_bits)])
                        b = FixedStream(w, p.d)
                        stats.add(run_one(proto, x, eve, a, b))
    return stats
