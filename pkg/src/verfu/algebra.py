"""Modular arithmetic, prime generation, and safe-prime group setup.

Big integers are plain Python ints throughout the library; this module owns
the canonical fixed-width big-endian serialization and the seeded randomness
conventions every other module builds on.

Modular exponentiation and inversion delegate to gmpy2 when available (about
an order of magnitude faster at 2048-bit sizes) and fall back to the
built-ins otherwise. Both paths are exercised by the test suite against
schoolbook oracles.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from .errors import ConfigError, NotInvertible

try:
    import gmpy2

    _HAVE_GMPY2 = True
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    _HAVE_GMPY2 = False

MR_ROUNDS = 40


def _small_primes(limit: int) -> list[int]:
    sieve = bytearray([1]) * limit
    sieve[0] = sieve[1] = 0
    for i in range(2, int(limit**0.5) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(sieve[i * i :: i]))
    return [i for i in range(limit) if sieve[i]]


SMALL_PRIMES = _small_primes(2000)


# ===== core modular ops =====

if _HAVE_GMPY2:

    def mod_pow(base: int, exp: int, modulus: int) -> int:
        """Return base**exp mod modulus for exp >= 0, modulus >= 2."""
        if modulus < 2:
            raise ValueError(f"modulus must be >= 2, got {modulus}")
        if exp < 0:
            raise ValueError("negative exponent; use mod_inv explicitly")
        return int(gmpy2.powmod(base, exp, modulus))

    def mod_inv(x: int, modulus: int) -> int:
        """Return the inverse of x mod modulus, or raise NotInvertible."""
        if modulus < 2:
            raise ValueError(f"modulus must be >= 2, got {modulus}")
        try:
            return int(gmpy2.invert(x, modulus))
        except ZeroDivisionError:
            raise NotInvertible(f"{x} has no inverse mod {modulus}") from None

else:  # pragma: no cover - exercised only without gmpy2

    def mod_pow(base: int, exp: int, modulus: int) -> int:
        """Return base**exp mod modulus for exp >= 0, modulus >= 2."""
        if modulus < 2:
            raise ValueError(f"modulus must be >= 2, got {modulus}")
        if exp < 0:
            raise ValueError("negative exponent; use mod_inv explicitly")
        return pow(base, exp, modulus)

    def mod_inv(x: int, modulus: int) -> int:
        """Return the inverse of x mod modulus, or raise NotInvertible."""
        if modulus < 2:
            raise ValueError(f"modulus must be >= 2, got {modulus}")
        try:
            return pow(x, -1, modulus)
        except ValueError:
            raise NotInvertible(f"{x} has no inverse mod {modulus}") from None


# ===== primality =====


def is_probable_prime(n: int, rng: random.Random, rounds: int = MR_ROUNDS) -> bool:
    """Miller-Rabin with `rounds` rng-chosen bases."""
    if n < 2:
        return False
    for p in SMALL_PRIMES:
        if n == p:
            return True
        if n % p == 0:
            return False
    # n is odd and > max(SMALL_PRIMES) here
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = mod_pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = mod_pow(x, 2, n)
            if x == n - 1:
                break
        else:
            return False
    return True


def gen_prime(bits: int, rng: random.Random) -> int:
    """Return a probable prime of exactly `bits` bits, deterministic in rng."""
    if bits < 2:
        raise ValueError(f"prime needs at least 2 bits, got {bits}")
    if bits == 2:
        return 2 if rng.getrandbits(1) == 0 else 3
    while True:
        cand = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
        if any(cand % p == 0 for p in SMALL_PRIMES if p * p <= cand):
            continue
        if is_probable_prime(cand, rng):
            return cand


# ===== safe-prime group =====

# RFC 3526 group 14: 2048-bit MODP safe prime, used verbatim for the
# production size (a fresh safe-prime search at this size is impractical).
RFC3526_2048 = int(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E08"
    "8A67CC74020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B"
    "302B0A6DF25F14374FE1356D6D51C245E485B576625E7EC6F44C42E9"
    "A637ED6B0BFF5CB6F406B7EDEE386BFB5A899FA5AE9F24117C4B1FE6"
    "49286651ECE45B3DC2007CB8A163BF0598DA48361C55D39A69163FA8"
    "FD24CF5F83655D23DCA3AD961C62F356208552BB9ED529077096966D"
    "670C354E4ABC9804F1746C08CA18217C32905E462E36CE3BE39E772C"
    "180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718"
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFF"
    "FFFFFFFF",
    16,
)


@dataclass(frozen=True)
class GroupDesc:
    """Safe-prime group p_mod = 2*q_order + 1 with prime-order subgroup q_order.

    `seed` pins generator derivation so identical seeds give identical
    parameters everywhere.
    """

    p_mod: int
    q_order: int
    seed: bytes

    @property
    def element_bytes(self) -> int:
        return (self.p_mod.bit_length() + 7) // 8

    @property
    def scalar_bytes(self) -> int:
        return (self.q_order.bit_length() + 7) // 8


def group_setup(q_bits: int, seed: bytes) -> GroupDesc:
    """Build a safe-prime group whose subgroup order q has `q_bits` bits.

    q_bits = 2047 selects the fixed RFC 3526 2048-bit modulus; smaller sizes
    are searched deterministically from the seed. Sizes between 513 and 2046
    bits are rejected: searching there is too slow to be useful.
    """
    if q_bits == 2047:
        p = RFC3526_2048
        return GroupDesc(p_mod=p, q_order=(p - 1) // 2, seed=seed)
    if q_bits < 4:
        raise ConfigError(f"subgroup order of {q_bits} bits is too small")
    if q_bits > 512:
        raise ConfigError(
            f"no fixed safe prime for q_bits={q_bits}; use 2047 or <= 512"
        )
    rng = seeded_rng(seed, "safe-prime-search")
    while True:
        q = rng.getrandbits(q_bits) | (1 << (q_bits - 1)) | 1
        p = 2 * q + 1
        if any(q % s == 0 or p % s == 0 for s in SMALL_PRIMES if s * s <= q):
            continue
        if is_probable_prime(q, rng) and is_probable_prime(p, rng):
            return GroupDesc(p_mod=p, q_order=q, seed=seed)


def derive_generator(group: GroupDesc, label: str) -> int:
    """Derive a subgroup generator by hashing seed/label and squaring.

    Squaring maps into the order-q subgroup (index 2); the counter bumps
    until the result is neither 0 nor 1. Deterministic in (seed, label).
    """
    counter = 0
    while True:
        material = group.seed + b"/" + label.encode() + counter.to_bytes(4, "big")
        x = int.from_bytes(hashlib.sha256(material).digest(), "big") % group.p_mod
        g = mod_pow(x, 2, group.p_mod)
        if g not in (0, 1):
            return g
        counter += 1


def in_subgroup(group: GroupDesc, x: int) -> bool:
    """Membership test for the order-q subgroup (test/validation helper)."""
    return 0 < x < group.p_mod and mod_pow(x, group.q_order, group.p_mod) == 1


def validate_group(group: GroupDesc, rng: random.Random) -> None:
    """Raise if the descriptor is not a safe-prime group."""
    if group.p_mod != 2 * group.q_order + 1:
        raise ConfigError("p_mod != 2*q_order + 1")
    if not is_probable_prime(group.q_order, rng):
        raise ConfigError("q_order is not prime")
    if not is_probable_prime(group.p_mod, rng):
        raise ConfigError("p_mod is not prime")


# ===== serialization and seeding =====


def int_to_bytes(x: int, width: int) -> bytes:
    """Canonical big-endian encoding, left-padded to `width` bytes."""
    if x < 0:
        raise ValueError("only non-negative integers serialize")
    return x.to_bytes(width, "big")


def int_from_bytes(data: bytes) -> int:
    return int.from_bytes(data, "big")


def seeded_rng(*parts: int | str | bytes) -> random.Random:
    """Deterministic RNG derived from a label path via SHA-256.

    Every random choice in the library flows through an injected Random
    built here, so (config, seed) reproduces each run bit for bit.
    """
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, int):
            blob = b"i" + str(part).encode()
        elif isinstance(part, str):
            blob = b"s" + part.encode()
        else:
            blob = b"b" + part
        h.update(len(blob).to_bytes(4, "big") + blob)
    return random.Random(int.from_bytes(h.digest(), "big"))
