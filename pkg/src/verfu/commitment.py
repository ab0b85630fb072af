"""Pedersen commitments with an explicit equivocation trapdoor.

commit(x, r) = g^x * h^r mod p over the safe-prime subgroup, hiding and
computationally binding. The dealer that derives h = g^alpha knows alpha and
can retarget any commitment to any message (equivocate); whoever holds alpha
can break binding at will, which is exactly why the trapdoor must never
reach the aggregation server. The committed message is the field encoding of
a hash digest (encode_message), not the digest itself.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from .algebra import (
    GroupDesc,
    derive_generator,
    group_setup,
    int_from_bytes,
    int_to_bytes,
    mod_inv,
    mod_pow,
    seeded_rng,
)
from .errors import CoordinateOutOfRange, LengthMismatch


@dataclass(frozen=True)
class ComParams:
    group: GroupDesc
    g_com: int
    h_com: int

    @property
    def commitment_bytes(self) -> int:
        return self.group.element_bytes

    @property
    def scalar_bytes(self) -> int:
        return self.group.scalar_bytes


@dataclass(frozen=True)
class Trapdoor:
    """alpha with h_com = g_com^alpha; grants unrestricted equivocation."""

    alpha: int
    params: ComParams


@dataclass(frozen=True)
class Opening:
    """Field-level opening: the committed residue and its randomness."""

    message_field: int
    r: int


def com_setup(q_bits: int, seed: bytes) -> tuple[ComParams, Trapdoor]:
    """Fresh group, derived g_com, and h_com = g_com^alpha for seeded alpha."""
    return com_from_group(group_setup(q_bits, seed), seeded_rng(seed, "com-alpha"))


def com_from_group(group: GroupDesc, rng: random.Random) -> tuple[ComParams, Trapdoor]:
    g_com = derive_generator(group, "com_g")
    alpha = rng.randrange(1, group.q_order)
    h_com = mod_pow(g_com, alpha, group.p_mod)
    params = ComParams(group=group, g_com=g_com, h_com=h_com)
    return params, Trapdoor(alpha=alpha, params=params)


def commit(params: ComParams, x: int, r: int) -> int:
    q = params.group.q_order
    if not 0 <= x < q:
        raise CoordinateOutOfRange(f"message residue {x} outside [0, {q})")
    if not 0 <= r < q:
        raise CoordinateOutOfRange(f"randomness {r} outside [0, {q})")
    p = params.group.p_mod
    return (mod_pow(params.g_com, x, p) * mod_pow(params.h_com, r, p)) % p


def decommit(params: ComParams, commitment: int, x: int, r: int) -> bool:
    """Recompute-and-compare opening check."""
    return commit(params, x, r) == commitment


def equivocate(td: Trapdoor, x: int, r: int, x_new: int) -> int:
    """Randomness that opens commit(x, r) to x_new instead.

    commit(x, r) = g^(x + alpha r), so r_new = r + (x - x_new)/alpha keeps
    the exponent, hence the commitment, unchanged.
    """
    q = td.params.group.q_order
    for v in (x, r, x_new):
        if not 0 <= v < q:
            raise CoordinateOutOfRange(f"residue {v} outside [0, {q})")
    return (r + (x - x_new) * mod_inv(td.alpha, q)) % q


def encode_message(params: ComParams, digest: int) -> int:
    """Map a group-element digest into the commitment's exponent field.

    SHA-256 over the digest's fixed-width serialization, reduced mod q.
    Verifiers recompute this from the transmitted digest, so wire openings
    carry the digest itself plus r.
    """
    data = int_to_bytes(digest, params.group.element_bytes)
    return int.from_bytes(hashlib.sha256(data).digest(), "big") % params.group.q_order


def com_to_bytes(params: ComParams, commitment: int) -> bytes:
    return int_to_bytes(commitment, params.commitment_bytes)


def com_from_bytes(params: ComParams, data: bytes) -> int:
    if len(data) != params.commitment_bytes:
        raise LengthMismatch(
            f"commitment needs {params.commitment_bytes} bytes, got {len(data)}"
        )
    return int_from_bytes(data)
