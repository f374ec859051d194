import itertools

import pytest
from hypothesis import given, settings, strategies as st

from nmx.errors import DivisionByZero, NoPrimeInRange
from nmx.fields import (
    IRREDUCIBLE_MODULI,
    FpCtx,
    GF2Ctx,
    _search_modulus,
    fp_arith,
    fp_find_prime,
    gf2,
    gf_basis,
    gf_find_generator,
    gf_inv,
    gf_mul,
    gf_mul_table,
    gf_order,
    gf_pow,
    is_irreducible,
    is_irreducible_bruteforce,
    pack_components,
    unpack_components,
)


def schoolbook_mul(a, b, ell, modulus):
    # bit-serial shift-and-add, reducing after every shift
    r = 0
    for _ in range(ell):
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> ell:
            a ^= modulus
    return r


def naive_prime_scan(lo, hi):
    for v in range(lo + 1, hi):
        if v > 1 and all(v % q for q in range(2, v)):
            return v
    return None


def test_gf8_products():
    ctx = gf2(3)
    assert ctx.modulus == 0b1011
    assert gf_mul(0b010, 0b010, ctx) == 0b100
    assert gf_mul(0b100, 0b010, ctx) == schoolbook_mul(0b100, 0b010, 3, 0b1011) == 0b011
    for a in range(8):
        assert gf_mul(a, 1, ctx) == a


def test_gf8_powers():
    ctx = gf2(3)
    assert gf_pow(0b010, 7, ctx) == 1
    assert gf_pow(0b010, 3, ctx) == gf_mul(gf_mul(2, 2, ctx), 2, ctx) == 0b011
    for a in range(8):
        assert gf_pow(a, 0, ctx) == 1


@pytest.mark.parametrize("ell", range(1, 7))
def test_mul_matches_schoolbook(ell):
    ctx = gf2(ell)
    for a in range(ctx.order):
        for b in range(ctx.order):
            assert gf_mul(a, b, ctx) == schoolbook_mul(a, b, ell, ctx.modulus)


@pytest.mark.parametrize("ell", range(1, 5))
def test_field_axioms_exhaustive(ell):
    ctx = gf2(ell)
    q = range(ctx.order)
    for a, b in itertools.product(q, q):
        assert gf_mul(a, b, ctx) == gf_mul(b, a, ctx)
    for a, b, c in itertools.product(q, q, q):
        assert gf_mul(gf_mul(a, b, ctx), c, ctx) == gf_mul(a, gf_mul(b, c, ctx), ctx)
        assert gf_mul(a, b ^ c, ctx) == gf_mul(a, b, ctx) ^ gf_mul(a, c, ctx)
    for a in range(1, ctx.order):
        assert gf_mul(a, gf_inv(a, ctx), ctx) == 1


@settings(max_examples=300, deadline=None)
@given(st.integers(8, 64), st.data())
def test_field_axioms_random_wide(ell, data):
    ctx = gf2(ell)
    a, b, c = (data.draw(st.integers(0, ctx.mask)) for _ in range(3))
    assert gf_mul(a, b, ctx) == gf_mul(b, a, ctx)
    assert gf_mul(gf_mul(a, b, ctx), c, ctx) == gf_mul(a, gf_mul(b, c, ctx), ctx)
    assert gf_mul(a, b ^ c, ctx) == gf_mul(a, b, ctx) ^ gf_mul(a, c, ctx)
    if a:
        assert gf_mul(a, gf_inv(a, ctx), ctx) == 1


def test_moduli_irreducible():
    for ell, f in IRREDUCIBLE_MODULI.items():
        assert f.bit_length() - 1 == ell
        assert is_irreducible(f)
        if ell <= 16:
            assert is_irreducible_bruteforce(f)


def test_moduli_table_reproducible():
    for ell in (2, 8, 13, 32, 64):
        assert _search_modulus(ell) == IRREDUCIBLE_MODULI[ell]


def test_rabin_agrees_with_trial_division():
    for f in range(2, 1 << 11):
        assert is_irreducible(f) == is_irreducible_bruteforce(f)


def test_bad_modulus_degree():
    with pytest.raises(ValueError):
        GF2Ctx(3, 0b10011)


def test_generators_small():
    assert gf_find_generator(gf2(3)) == 0b010
    assert gf_find_generator(gf2(1)) == 0b1
    ctx4 = gf2(4)
    assert ctx4.modulus == 0b10011
    assert gf_find_generator(ctx4) == 0b0010
    # brute-force order of x in GF(16)
    powers, v = [], 1
    for _ in range(15):
        v = schoolbook_mul(v, 2, 4, 0b10011)
        powers.append(v)
    assert powers.index(1) == 14


@pytest.mark.parametrize("ell", range(1, 9))
def test_generator_enumerates_group(ell):
    ctx = gf2(ell)
    g = gf_find_generator(ctx)
    seen = {gf_pow(g, i, ctx) for i in range(ctx.order - 1)}
    assert seen == set(range(1, ctx.order))
    # smallest such element
    for h in range(1, g):
        assert gf_order(h, ctx) < ctx.order - 1


def test_generator_wide():
    ctx = gf2(61)  # 2^61 - 1 is prime
    g = gf_find_generator(ctx)
    assert gf_order(g, ctx) == ctx.order - 1


def test_basis():
    assert gf_basis(gf2(3)) == [1, 2, 4]
    assert gf_basis(gf2(1)) == [1]
    assert gf_basis(gf2(4)) == [1, 2, 4, 8]


def test_mul_table_matches():
    ctx = gf2(4)
    t = gf_mul_table(ctx)
    for a in range(16):
        for b in range(16):
            assert t[a, b] == gf_mul(a, b, ctx)


def test_find_prime():
    assert fp_find_prime(16, 32) == 17 == naive_prime_scan(16, 32)
    assert fp_find_prime(4, 8) == 5 == naive_prime_scan(4, 8)
    assert fp_find_prime(2, 4) == 3
    with pytest.raises(NoPrimeInRange):
        fp_find_prime(24, 29)


@given(st.integers(1, 3000), st.integers(1, 60))
def test_find_prime_matches_scan(lo, width):
    expect = naive_prime_scan(lo, lo + width)
    if expect is None:
        with pytest.raises(NoPrimeInRange):
            fp_find_prime(lo, lo + width)
    else:
        assert fp_find_prime(lo, lo + width) == expect


def test_fp_arith_examples():
    ctx = FpCtx(7)
    inverse_table = {a: b for a in range(1, 7) for b in range(1, 7) if a * b % 7 == 1}
    assert fp_arith(3, None, "inv", ctx) == inverse_table[3] == 5
    assert fp_arith(3, None, "pow", ctx, e=6) == 1
    for a in range(7):
        assert fp_arith(a, 0, "add", ctx) == a
    with pytest.raises(DivisionByZero):
        fp_arith(0, None, "inv", ctx)
    with pytest.raises(ValueError):
        FpCtx(9)


@pytest.mark.parametrize("p", [2, 3, 5, 7, 11, 13, 17])
def test_fp_axioms_exhaustive(p):
    ctx = FpCtx(p)
    r = range(p)
    for a, b, c in itertools.product(r, r, r):
        ab = fp_arith(a, b, "mul", ctx)
        assert ab == fp_arith(b, a, "mul", ctx)
        assert fp_arith(ab, c, "mul", ctx) == fp_arith(a, fp_arith(b, c, "mul", ctx), "mul", ctx)
        assert fp_arith(a, fp_arith(b, c, "add", ctx), "mul", ctx) == fp_arith(
            ab, fp_arith(a, c, "mul", ctx), "add", ctx
        )
    for a in range(1, p):
        assert fp_arith(a, fp_arith(a, None, "inv", ctx), "mul", ctx) == 1
        assert fp_arith(a, -1, "pow", ctx) == fp_arith(a, None, "inv", ctx)


@given(st.lists(st.integers(0, 255), min_size=1, max_size=6))
def test_pack_roundtrip(parts):
    v = pack_components(parts, 8)
    assert unpack_components(v, len(parts), 8) == parts
    assert v >> (8 * (len(parts) - 1)) == parts[0]
