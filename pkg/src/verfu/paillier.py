"""Additive-homomorphic Paillier encryption over Z_n.

Single shared keypair model: a trusted dealer hands the secret key to every
device; the aggregation server only ever sees the public key. Plaintexts are
ring residues in [0, n); negative quantities are represented upstream by the
codec's centered embedding.

The generator is fixed to g = n + 1, so g^m mod n^2 collapses to 1 + m*n and
encryption costs a single full exponentiation (the obfuscating r^n).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .algebra import gen_prime, int_from_bytes, int_to_bytes, mod_inv, mod_pow
from .errors import InvalidCiphertext, LengthMismatch, MessageOutOfRange


@dataclass(frozen=True)
class PaillierPublicKey:
    """Public modulus n with cached n^2; g is implicitly n + 1."""

    n: int
    n_sq: int = field(repr=False, default=0)

    def __post_init__(self):
        if self.n < 15:
            raise ValueError("modulus too small to be a Paillier n")
        object.__setattr__(self, "n_sq", self.n * self.n)

    @property
    def g(self) -> int:
        return self.n + 1

    @property
    def ciphertext_bytes(self) -> int:
        return (self.n_sq.bit_length() + 7) // 8


@dataclass(frozen=True)
class PaillierSecretKey:
    """Carmichael exponent lam = lcm(p-1, q-1) and mu = L(g^lam mod n^2)^-1."""

    lam: int
    mu: int
    p: int
    q: int


@dataclass(frozen=True)
class Ciphertext:
    value: int


@dataclass(frozen=True)
class CiphertextVector:
    coords: tuple[Ciphertext, ...]

    def __len__(self) -> int:
        return len(self.coords)


def keygen(kappa_bits: int, rng: random.Random) -> tuple[PaillierPublicKey, PaillierSecretKey]:
    """Generate a keypair with an exactly kappa_bits modulus.

    Primes are redrawn until p != q, bits(n) == kappa_bits, and
    gcd(n, (p-1)(q-1)) == 1 (the latter can fail when one prime divides the
    other minus one).
    """
    if kappa_bits < 8:
        raise ValueError(f"kappa_bits too small: {kappa_bits}")
    half = kappa_bits // 2
    while True:
        p = gen_prime(half, rng)
        q = gen_prime(kappa_bits - half, rng)
        if p == q:
            continue
        n = p * q
        if n.bit_length() != kappa_bits:
            continue
        if math.gcd(n, (p - 1) * (q - 1)) != 1:
            continue
        return keypair_from_primes(p, q)


def keypair_from_primes(p: int, q: int) -> tuple[PaillierPublicKey, PaillierSecretKey]:
    """Build a keypair from explicit primes (micro-tests use tiny ones)."""
    if p == q:
        raise ValueError("p and q must differ")
    n = p * q
    if math.gcd(n, (p - 1) * (q - 1)) != 1:
        raise ValueError("gcd(pq, (p-1)(q-1)) != 1")
    pk = PaillierPublicKey(n=n)
    lam = math.lcm(p - 1, q - 1)
    # with g = n + 1: g^lam = 1 + lam*n (mod n^2), so L(...) = lam mod n
    l_value = _l_function(mod_pow(pk.g, lam, pk.n_sq), n)
    mu = mod_inv(l_value, n)
    return pk, PaillierSecretKey(lam=lam, mu=mu, p=p, q=q)


def _l_function(x: int, n: int) -> int:
    return (x - 1) // n


def encrypt(
    pk: PaillierPublicKey,
    m: int,
    rng: random.Random | None = None,
    r: int | None = None,
) -> Ciphertext:
    """Enc(m) = g^m * r^n mod n^2 with r a fresh unit mod n.

    Pass r explicitly only in tests; normal callers supply an rng and every
    ciphertext gets fresh randomness.
    """
    if not 0 <= m < pk.n:
        raise MessageOutOfRange(f"plaintext {m} outside [0, {pk.n})")
    if r is None:
        if rng is None:
            raise ValueError("encrypt needs an rng when r is not given")
        while True:
            r = rng.randrange(1, pk.n)
            if math.gcd(r, pk.n) == 1:
                break
    else:
        if not 0 < r < pk.n or math.gcd(r, pk.n) != 1:
            raise ValueError(f"r={r} is not a unit in [1, n)")
    g_to_m = (1 + m * pk.n) % pk.n_sq
    return Ciphertext((g_to_m * mod_pow(r, pk.n, pk.n_sq)) % pk.n_sq)


def decrypt(sk: PaillierSecretKey, pk: PaillierPublicKey, ct: Ciphertext) -> int:
    """Dec(c) = L(c^lam mod n^2) * mu mod n."""
    c = ct.value
    if not 0 < c < pk.n_sq or math.gcd(c, pk.n) != 1:
        raise InvalidCiphertext(f"ciphertext not a unit in (0, n^2)")
    l_value = _l_function(mod_pow(c, sk.lam, pk.n_sq), pk.n)
    return (l_value * sk.mu) % pk.n


def ct_add(pk: PaillierPublicKey, a: Ciphertext, b: Ciphertext) -> Ciphertext:
    """Homomorphic addition: Enc(m1) (*) Enc(m2) = Enc(m1 + m2 mod n)."""
    return Ciphertext((a.value * b.value) % pk.n_sq)


def ct_sub(pk: PaillierPublicKey, a: Ciphertext, b: Ciphertext) -> Ciphertext:
    """Homomorphic subtraction via the ciphertext inverse of b."""
    return Ciphertext((a.value * mod_inv(b.value, pk.n_sq)) % pk.n_sq)


def ct_scale(pk: PaillierPublicKey, a: Ciphertext, k: int) -> Ciphertext:
    """Homomorphic scaling by an integer: Enc(m)^k = Enc(k*m mod n)."""
    if k >= 0:
        return Ciphertext(mod_pow(a.value, k, pk.n_sq))
    return Ciphertext(mod_inv(mod_pow(a.value, -k, pk.n_sq), pk.n_sq))


# ===== vector layer: one ciphertext per coordinate =====


def vec_encrypt(
    pk: PaillierPublicKey, values: list[int], rng: random.Random
) -> CiphertextVector:
    return CiphertextVector(tuple(encrypt(pk, v, rng) for v in values))


def vec_decrypt(
    sk: PaillierSecretKey, pk: PaillierPublicKey, vec: CiphertextVector
) -> list[int]:
    return [decrypt(sk, pk, ct) for ct in vec.coords]


def vec_add(pk: PaillierPublicKey, a: CiphertextVector, b: CiphertextVector) -> CiphertextVector:
    _check_len(a, b)
    return CiphertextVector(tuple(ct_add(pk, x, y) for x, y in zip(a.coords, b.coords)))


def vec_sub(pk: PaillierPublicKey, a: CiphertextVector, b: CiphertextVector) -> CiphertextVector:
    _check_len(a, b)
    return CiphertextVector(tuple(ct_sub(pk, x, y) for x, y in zip(a.coords, b.coords)))


def vec_scale(pk: PaillierPublicKey, a: CiphertextVector, k: int) -> CiphertextVector:
    return CiphertextVector(tuple(ct_scale(pk, ct, k) for ct in a.coords))


def _check_len(a: CiphertextVector, b: CiphertextVector) -> None:
    if len(a) != len(b):
        raise LengthMismatch(f"vector lengths differ: {len(a)} vs {len(b)}")


# ===== serialization =====


def ct_to_bytes(pk: PaillierPublicKey, ct: Ciphertext) -> bytes:
    return int_to_bytes(ct.value, pk.ciphertext_bytes)


def ct_from_bytes(pk: PaillierPublicKey, data: bytes) -> Ciphertext:
    if len(data) != pk.ciphertext_bytes:
        raise LengthMismatch(
            f"ciphertext needs {pk.ciphertext_bytes} bytes, got {len(data)}"
        )
    return Ciphertext(int_from_bytes(data))


def vec_to_bytes(pk: PaillierPublicKey, vec: CiphertextVector) -> bytes:
    return b"".join(ct_to_bytes(pk, ct) for ct in vec.coords)


def vec_from_bytes(pk: PaillierPublicKey, data: bytes) -> CiphertextVector:
    width = pk.ciphertext_bytes
    if len(data) % width != 0:
        raise LengthMismatch(f"payload length {len(data)} not a multiple of {width}")
    coords = tuple(
        Ciphertext(int_from_bytes(data[i : i + width]))
        for i in range(0, len(data), width)
    )
    return CiphertextVector(coords)
