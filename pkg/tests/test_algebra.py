"""Modular arithmetic, prime generation, group setup, and seeding.

Oracles: schoolbook square-and-multiply, extended Euclid, trial division,
and sympy's independent primality test.
"""

import random

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from verfu.algebra import (
    RFC3526_2048,
    GroupDesc,
    derive_generator,
    gen_prime,
    group_setup,
    in_subgroup,
    int_from_bytes,
    int_to_bytes,
    is_probable_prime,
    mod_inv,
    mod_pow,
    seeded_rng,
    validate_group,
)
from verfu.errors import ConfigError, NotInvertible


def oracle_pow(base, exp, mod):
    """Schoolbook square-and-multiply, one bit at a time."""
    result = 1 % mod
    base %= mod
    while exp:
        if exp & 1:
            result = result * base % mod
        base = base * base % mod
        exp >>= 1
    return result


def oracle_inv(x, mod):
    """Extended Euclid."""
    r0, r1 = mod, x % mod
    s0, s1 = 0, 1
    while r1:
        qt = r0 // r1
        r0, r1 = r1, r0 - qt * r1
        s0, s1 = s1, s0 - qt * s1
    if r0 != 1:
        return None
    return s0 % mod


def oracle_is_prime(n):
    """Trial division."""
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


EIGHT_BIT_PRIMES = [n for n in range(128, 256) if oracle_is_prime(n)]


class TestModPow:
    def test_frozen_values(self):
        assert mod_pow(2, 10, 1000) == 24
        assert mod_pow(2, 11, 23) == 1
        assert mod_pow(0, 0, 7) == 1
        assert mod_pow(5, 1, 5) == 0

    def test_matches_oracle_randomized(self, rng):
        for _ in range(300):
            base = rng.randrange(0, 1 << 64)
            exp = rng.randrange(0, 1 << 64)
            mod = rng.randrange(2, 1 << 64)
            assert mod_pow(base, exp, mod) == oracle_pow(base, exp, mod)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            mod_pow(2, 3, 1)
        with pytest.raises(ValueError):
            mod_pow(2, -1, 7)

    @given(
        base=st.integers(min_value=0, max_value=1 << 128),
        exp=st.integers(min_value=0, max_value=1 << 128),
        mod=st.integers(min_value=2, max_value=1 << 128),
    )
    @settings(max_examples=60, deadline=None)
    def test_matches_builtin(self, base, exp, mod):
        assert mod_pow(base, exp, mod) == pow(base, exp, mod)


class TestModInv:
    def test_frozen_values(self):
        assert mod_inv(3, 7) == 5
        assert mod_inv(1, 2) == 1

    def test_matches_oracle_randomized(self, rng):
        for _ in range(300):
            mod = rng.randrange(2, 1 << 32)
            x = rng.randrange(1, mod)
            expected = oracle_inv(x, mod)
            if expected is None:
                with pytest.raises(NotInvertible):
                    mod_inv(x, mod)
            else:
                got = mod_inv(x, mod)
                assert got == expected
                assert got * x % mod == 1

    def test_not_invertible(self):
        with pytest.raises(NotInvertible):
            mod_inv(6, 9)
        with pytest.raises(NotInvertible):
            mod_inv(0, 7)


class TestPrimes:
    def test_agrees_with_trial_division_exhaustive(self, rng):
        for n in range(2000):
            assert is_probable_prime(n, rng) == oracle_is_prime(n), n

    def test_agrees_with_sympy_randomized(self, rng):
        for _ in range(200):
            n = rng.randrange(1 << 31, 1 << 32) | 1
            assert is_probable_prime(n, rng) == sympy.isprime(n)

    def test_carmichael_numbers_rejected(self, rng):
        for n in (561, 1105, 1729, 2465, 2821, 6601, 8911, 562973):
            assert not is_probable_prime(n, rng) or sympy.isprime(n)

    def test_gen_prime_exact_bits_and_primality(self):
        for seed in range(20):
            p = gen_prime(8, random.Random(seed))
            assert p in EIGHT_BIT_PRIMES
        for bits in (2, 3, 16, 48):
            p = gen_prime(bits, random.Random(7))
            assert p.bit_length() == bits
            assert sympy.isprime(p)

    def test_gen_prime_rejects_tiny(self):
        with pytest.raises(ValueError):
            gen_prime(1, random.Random(0))


class TestGroupSetup:
    def test_deterministic(self):
        a = group_setup(32, b"seed-a")
        b = group_setup(32, b"seed-a")
        c = group_setup(32, b"seed-b")
        assert a == b
        assert a != c

    def test_safe_prime_structure(self, rng):
        g = group_setup(32, b"structure")
        assert g.p_mod == 2 * g.q_order + 1
        assert sympy.isprime(g.p_mod)
        assert sympy.isprime(g.q_order)
        validate_group(g, rng)

    def test_rfc3526_selected_at_2047(self):
        g = group_setup(2047, b"ignored-for-fixed-group")
        assert g.p_mod == RFC3526_2048
        assert g.p_mod.bit_length() == 2048
        assert g.p_mod == 2 * g.q_order + 1

    def test_rfc3526_is_safe_prime(self, rng):
        # expensive check run once: both halves pass Miller-Rabin
        assert is_probable_prime(RFC3526_2048, rng, rounds=10)
        assert is_probable_prime((RFC3526_2048 - 1) // 2, rng, rounds=10)

    def test_rejects_bad_sizes(self):
        with pytest.raises(ConfigError):
            group_setup(3, b"x")
        with pytest.raises(ConfigError):
            group_setup(513, b"x")

    def test_element_widths(self):
        g = GroupDesc(p_mod=23, q_order=11, seed=b"t")
        assert g.element_bytes == 1
        assert g.scalar_bytes == 1
        big = group_setup(2047, b"")
        assert big.element_bytes == 256
        assert big.scalar_bytes == 256


class TestDeriveGenerator:
    def test_lands_in_subgroup(self):
        g = group_setup(32, b"gen-test")
        seen = set()
        for label in ("g_0", "g_1", "com_g", "zz"):
            x = derive_generator(g, label)
            assert in_subgroup(g, x)
            assert x not in (0, 1)
            seen.add(x)
        assert len(seen) == 4  # labels separate the generators

    def test_deterministic_per_label(self):
        g = group_setup(32, b"gen-test")
        assert derive_generator(g, "g_0") == derive_generator(g, "g_0")


class TestBytesCodec:
    def test_frozen(self):
        assert int_to_bytes(1, 4) == b"\x00\x00\x00\x01"
        assert int_to_bytes(0xAB, 1) == b"\xab"
        assert int_from_bytes(b"\x01\x00") == 256

    def test_roundtrip(self, rng):
        for _ in range(200):
            width = rng.randrange(1, 40)
            x = rng.randrange(0, 1 << (8 * width))
            assert int_from_bytes(int_to_bytes(x, width)) == x

    def test_rejects_overflow(self):
        with pytest.raises(OverflowError):
            int_to_bytes(256, 1)
        with pytest.raises(ValueError):
            int_to_bytes(-1, 4)


class TestSeededRng:
    def test_deterministic_and_label_sensitive(self):
        a = seeded_rng(7, "x").random()
        b = seeded_rng(7, "x").random()
        c = seeded_rng(7, "y").random()
        d = seeded_rng(8, "x").random()
        assert a == b
        assert a != c
        assert a != d

    def test_no_concatenation_collisions(self):
        # ("ab", "c") must differ from ("a", "bc")
        assert seeded_rng("ab", "c").random() != seeded_rng("a", "bc").random()

    def test_type_tagging(self):
        assert seeded_rng(1).random() != seeded_rng("1").random()
        assert seeded_rng(b"1").random() != seeded_rng("1").random()
