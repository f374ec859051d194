import io
import json
import random
from collections import Counter, defaultdict
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from nmx.errors import InsufficientRandomness, WidthMismatch
from nmx.protocol import (
    EveStrategy,
    FixedStream,
    Protocol,
    ProtocolParams,
    Round2,
    SessionStats,
    SubcubeSource,
    conditioning_check,
    default_source,
    eve_library,
    exact_extraction,
    mac_bound,
    mac_forgery_advantage,
    mac_tag,
    micro_tables,
    preset,
    run_one,
    run_session,
    wilson_interval,
)
from nmx.protocol import _view_codes

from oracles import schoolbook_mul


def test_mac_tag_hand_value():
    # key = (k1, k2) = (3, 5), message 0x21 as blocks w1 = 1, w2 = 2 over GF(16):
    # 5 + 1*3 + 2*3^2 = 5 + 3 + 2*5 = 5 ^ 3 ^ 10 = 12
    assert mac_tag((3 << 4) | 5, 0x21, 4, 8) == 12


@settings(max_examples=60)
@given(st.integers(0, 255), st.integers(0, 255))
def test_mac_tag_against_polynomial(key, msg):
    k1, k2 = key >> 4, key & 15
    acc, power = k2, 1
    for i in range(2):
        power = schoolbook_mul(power, k1, 4)
        acc ^= schoolbook_mul((msg >> (4 * i)) & 15, power, 4)
    assert mac_tag(key, msg, 4, 8) == acc


def test_mac_width_errors():
    with pytest.raises(WidthMismatch):
        mac_tag(1 << 8, 0, 4, 8)
    with pytest.raises(WidthMismatch):
        mac_tag(0, 1 << 8, 4, 8)


def forgery_oracle(v, d, leak):
    # best strategy: W chosen per leak value; after the tag, the best (W', T') per (leak, tag)
    best = Fraction(0)
    keys = range(1 << (2 * v))
    by_leak = defaultdict(list)
    for k in keys:
        by_leak[tuple((k >> p) & 1 for p in leak)].append(k)
    total = 0
    for ks in by_leak.values():
        best_w = 0
        for w in range(1 << d):
            groups = defaultdict(list)
            for k in ks:
                groups[mac_tag(k, w, v, d)].append(k)
            wins = 0
            for ks2 in groups.values():
                wins += max(
                    Counter(mac_tag(k, w2, v, d) for k in ks2).most_common(1)[0][1]
                    for w2 in range(1 << d)
                    if w2 != w
                )
            best_w = max(best_w, wins)
        total += best_w
    return Fraction(total, 1 << (2 * v))


@pytest.mark.parametrize("v,d,leak", [(2, 4, ()), (2, 4, (0,)), (2, 2, (1, 3)), (1, 1, ()), (2, 3, (3,))])
def test_forgery_advantage_against_oracle(v, d, leak):
    assert mac_forgery_advantage(v, d, leak) == forgery_oracle(v, d, leak)


def test_forgery_advantage_values():
    assert mac_forgery_advantage(4, 8) == Fraction(1, 8)
    assert mac_forgery_advantage(4, 4) == Fraction(1, 16)
    assert mac_forgery_advantage(1, 1) == Fraction(1, 2)
    assert mac_bound(4, 8) == Fraction(1, 8)
    assert mac_bound(4, 8, 2) == Fraction(1, 2)


def test_params_validation():
    with pytest.raises(WidthMismatch):
        ProtocolParams(n=12, k=13, s=1, C=1, d=2, d_nm=5, key_bits=2)
    with pytest.raises(WidthMismatch):
        ProtocolParams(n=12, k=12, s=1, C=1, d=2, d_nm=4, key_bits=2)
    with pytest.raises(ValueError):
        preset("huge")
    small = preset("small")
    assert (small.y2_bits, small.y3_bits, small.z_bits, small.tag_bits) == (545, 462, 96, 48)
    assert preset("micro").relaxed and not small.relaxed


def test_streams_and_sources():
    s = FixedStream.of([(0b10, 2), (0b1, 1)])
    assert s.bits(2) == 0b10 and s.bits(1) == 1
    with pytest.raises(InsufficientRandomness):
        s.bits(1)
    src = SubcubeSource(8, 3, prefix=0b10110)
    assert sorted(src.support()) == list(range(0b10110000, 0b10111000))
    assert len(src) == 8


@pytest.mark.parametrize("name", ["micro", "small"])
def test_passive_correctness(name):
    p = preset(name)
    st_ = run_session(default_source(p), EveStrategy("passive"), p, 150, seed=3)
    assert st_.keys_match == st_.trials == 150


def test_sessions_are_reproducible():
    p = preset("small")
    eve = eve_library(p)["random-round2"]
    a = io.StringIO()
    b = io.StringIO()
    sa = run_session(default_source(p), eve, p, 40, seed=11, transcript=a)
    sb = run_session(default_source(p), eve, p, 40, seed=11, transcript=b)
    assert sa == sb and a.getvalue() == b.getvalue()
    line = json.loads(a.getvalue().splitlines()[0])
    assert set(line) == {"trial", "messages_sent", "messages_received", "outcome_A", "outcome_B"}
    assert line["messages_sent"]["round2"]["t"][1] == p.tag_bits


@pytest.mark.parametrize("name", sorted(eve_library(preset("small"))))
def test_no_robustness_violations_short_run(name):
    p = preset("small")
    st_ = run_session(default_source(p), eve_library(p)[name], p, 60, seed=5)
    assert st_.robustness_violations == 0
    if name == "passive":
        assert st_.correctness_rate == 1.0


def test_flip_w_is_rejected():
    p = preset("small")
    st_ = run_session(default_source(p), eve_library(p)["flip-w"], p, 100, seed=1)
    assert st_.alice_accept == 0 and st_.tampered == 100


def test_alice_rejects_malformed_round2():
    p = preset("micro")
    proto = Protocol(p)
    rand = FixedStream.of([(1, p.y1_bits), (2, p.y2_bits), (3, p.y3_bits)])
    _, state = proto.alice_round1(5, rand)
    assert not proto.alice_finalize(state, Round2(1 << p.d, 0, 0)).accepted


def test_leak_budget():
    p = preset("small")
    greedy = EveStrategy("greedy", leak_positions=tuple(range(p.s + 1)))
    with pytest.raises(ValueError):
        run_session(default_source(p), greedy, p, 1)


def test_wilson_interval_and_merge():
    lo, hi = wilson_interval(5, 100)
    assert lo < 0.05 < hi
    assert wilson_interval(0, 0) == (0.0, 1.0)
    a, b = SessionStats("x", trials=3, keys_match=3), SessionStats("x", trials=2, keys_match=1)
    assert a.merge(b).trials == 5 and a.merge(b).keys_match == 4


def test_exact_extraction_matches_session_enumeration():
    # independent route: drive the real state machines over every x and every
    # choice of randomness and tabulate (passive view, Alice's key)
    p = preset("micro").with_k(4)
    proto = Protocol(p)
    eve = EveStrategy("passive")
    counts = Counter()
    for x in SubcubeSource(p.n, p.k).support():
        for y1 in range(1 << p.y1_bits):
            for y2 in range(1 << p.y2_bits):
                for y3 in range(1 << p.y3_bits):
                    for w in range(1 << p.d):
                        a = FixedStream.of([(y1, p.y1_bits), (y2, p.y2_bits), (y3, p.y3_bits)])
                        rec = run_one(proto, x, eve, a, FixedStream(w, p.d))
                        assert rec.alice.accepted
                        counts[(rec.sent1, rec.recv2), rec.alice.key] += 1
    total = sum(counts.values())
    K = 1 << p.key_bits
    views = Counter()
    for (view, _), c in counts.items():
        views[view] += c
    tv = Fraction(0)
    for view, cv in views.items():
        for key in range(K):
            tv += abs(Fraction(counts.get((view, key), 0), total) - Fraction(cv, total * K))
    assert exact_extraction(preset("micro"), 4).tv == tv / 2


def test_extraction_decreases_with_entropy():
    micro = preset("micro")
    tvs = [exact_extraction(micro, k).tv for k in (4, 6)]
    assert tvs[1] < tvs[0]


def test_conditioning_on_micro_tables():
    p = preset("micro").with_k(5)
    t = micro_tables(p, SubcubeSource(p.n, p.k).support())
    out = conditioning_check(t, _view_codes(t))
    assert all(v["holds"] for v in out.values())
