"""Independent reference implementations used only by the tests."""

from nmx.fields import gf2


def schoolbook_mul(a, b, ell, modulus=None):
    # bit-serial shift-and-add, reducing after every shift
    modulus = modulus or gf2(ell).modulus
    r = 0
    for _ in range(ell):
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> ell:
            a ^= modulus
    return r


def slow_pow(a, e, ell):
    r = 1
    for _ in range(e):
        r = schoolbook_mul(r, a, ell)
    return r


def bit_parity(v):
    return bin(v).count("1") % 2
