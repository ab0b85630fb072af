"""Linear homomorphic hash over a prime-order subgroup.

A vector m in F_q^d hashes to h(m) = prod_i g_i^{m[i]} mod p, a single group
element. Linearity: combining digests with coefficients f_i (via lhh_eval)
equals the digest of the coefficient-weighted vector sum mod q. Coefficient
-1 is realized as the group inverse, i.e. exponent q-1.

The digest is one group element regardless of d, which is what keeps the
verification phase's upload constant-size.
"""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import (
    GroupDesc,
    derive_generator,
    group_setup,
    int_from_bytes,
    int_to_bytes,
    mod_inv,
    mod_pow,
)
from .errors import CoordinateOutOfRange, DimMismatch, LengthMismatch

IDENTITY_DIGEST = 1  # hash of the all-zero vector


@dataclass(frozen=True)
class LhhParams:
    group: GroupDesc
    generators: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.generators)

    @property
    def digest_bytes(self) -> int:
        return self.group.element_bytes


def lhh_setup(q_bits: int, dim: int, seed: bytes) -> LhhParams:
    """Fresh group plus d derived generators, deterministic in the seed."""
    return lhh_from_group(group_setup(q_bits, seed), dim)


def lhh_from_group(group: GroupDesc, dim: int) -> LhhParams:
    """Derive d generators over an existing group (labels g_0 .. g_{d-1})."""
    if dim < 1:
        raise DimMismatch(f"dim must be >= 1, got {dim}")
    gens = tuple(derive_generator(group, f"g_{i}") for i in range(dim))
    return LhhParams(group=group, generators=gens)


def lhh_hash(params: LhhParams, values: list[int]) -> int:
    """Digest of a residue vector: prod g_i^{values[i]} mod p.

    Exponents above q/2 are folded through the subgroup identity
    g^e = (g^{q-e})^-1 so near-q residues (the centered embedding of small
    negatives) cost small exponentiations; one inversion total. The result
    is the same canonical residue the naive product gives.
    """
    q = params.group.q_order
    p = params.group.p_mod
    if len(values) != params.dim:
        raise DimMismatch(f"expected {params.dim} coordinates, got {len(values)}")
    num = 1
    den = 1
    for g, e in zip(params.generators, values):
        if not 0 <= e < q:
            raise CoordinateOutOfRange(f"residue {e} outside [0, {q})")
        if e <= q - e:
            num = (num * mod_pow(g, e, p)) % p
        else:
            den = (den * mod_pow(g, q - e, p)) % p
    if den != 1:
        num = (num * mod_inv(den, p)) % p
    return num


def lhh_hash_naive(params: LhhParams, values: list[int]) -> int:
    """Reference product with literal exponents; oracle for the fast path."""
    q = params.group.q_order
    p = params.group.p_mod
    if len(values) != params.dim:
        raise DimMismatch(f"expected {params.dim} coordinates, got {len(values)}")
    acc = 1
    for g, e in zip(params.generators, values):
        if not 0 <= e < q:
            raise CoordinateOutOfRange(f"residue {e} outside [0, {q})")
        acc = (acc * mod_pow(g, e, p)) % p
    return acc


def lhh_eval(params: LhhParams, digests: list[int], coeffs: list[int]) -> int:
    """Combine digests: prod h_i^{c_i} mod p with exponents taken mod q."""
    q = params.group.q_order
    p = params.group.p_mod
    if len(digests) != len(coeffs):
        raise LengthMismatch(
            f"{len(digests)} digests but {len(coeffs)} coefficients"
        )
    acc = 1
    for h, c in zip(digests, coeffs):
        if not 0 < h < p:
            raise CoordinateOutOfRange(f"digest {h} outside (0, p)")
        e = c % q
        if e == 0:
            continue
        if e <= q - e:
            acc = (acc * mod_pow(h, e, p)) % p
        else:
            acc = (acc * mod_inv(mod_pow(h, q - e, p), p)) % p
    return acc


def digest_to_bytes(params: LhhParams, digest: int) -> bytes:
    return int_to_bytes(digest, params.digest_bytes)


def digest_from_bytes(params: LhhParams, data: bytes) -> int:
    if len(data) != params.digest_bytes:
        raise LengthMismatch(
            f"digest needs {params.digest_bytes} bytes, got {len(data)}"
        )
    return int_from_bytes(data)
