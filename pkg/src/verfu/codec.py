"""Fixed-point codec bridging real gradient vectors and ring residues.

Reals are scaled by 2^scale_bits and rounded (ties away from zero) to signed
integers; signed integers embed into Z_m by the centered map (negatives wrap
to the top half). The same encoded integer vector feeds both the Paillier
ring (mod n) and the hash field (mod q); sum consistency across the two
rings is what makes the aggregate's hash check meaningful.

No-wraparound invariant: max_terms * bound * 2^scale_bits < m/2 for every
modulus m in play, checked at setup. Within it, ring sums decode to the
exact integer sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ConfigError, LengthMismatch, OutOfBound


@dataclass(frozen=True)
class FixedPointSpec:
    """Scaling and magnitude contract for encoded vectors.

    bound is the largest |x| a single encode accepts; max_terms is the
    largest number of encoded vectors any protocol sum may combine
    (accumulated contributions count every constituent gradient).
    """

    scale_bits: int = 24
    bound: float = 1.0
    max_terms: int = 1

    def __post_init__(self):
        if self.scale_bits < 1:
            raise ConfigError(f"scale_bits must be >= 1, got {self.scale_bits}")
        if self.bound <= 0:
            raise ConfigError(f"bound must be positive, got {self.bound}")
        if self.max_terms < 1:
            raise ConfigError(f"max_terms must be >= 1, got {self.max_terms}")

    @property
    def scale(self) -> int:
        return 1 << self.scale_bits

    def validate_modulus(self, modulus: int) -> None:
        """Raise unless sums of max_terms bounded values stay centered in Z_m."""
        # integer comparison: huge moduli overflow float division
        largest_encoded = math.floor(self.bound * self.scale + 0.5)
        if 2 * self.max_terms * largest_encoded >= modulus:
            raise ConfigError(
                f"fixed-point range {self.max_terms} * {self.bound} * 2^"
                f"{self.scale_bits} does not fit centered in modulus of "
                f"{modulus.bit_length()} bits"
            )


@dataclass(frozen=True)
class EncodedVector:
    coords: tuple[int, ...]
    spec: FixedPointSpec

    def __len__(self) -> int:
        return len(self.coords)


def encode(values: Iterable[float], spec: FixedPointSpec) -> EncodedVector:
    """Scale and round each value; ties round away from zero."""
    coords = []
    for x in values:
        x = float(x)
        if not math.isfinite(x) or abs(x) > spec.bound:
            raise OutOfBound(f"value {x} exceeds bound {spec.bound}")
        mag = math.floor(abs(x) * spec.scale + 0.5)
        coords.append(-mag if x < 0 else mag)
    return EncodedVector(coords=tuple(coords), spec=spec)


def decode(vec: EncodedVector, divisor: int) -> list[float]:
    """Back to reals, dividing by divisor * 2^scale_bits (divisor = |U|)."""
    if divisor == 0:
        raise ZeroDivisionError("decode divisor is zero")
    denom = divisor * vec.spec.scale
    return [c / denom for c in vec.coords]


def to_ring(vec: EncodedVector | Sequence[int], modulus: int) -> list[int]:
    """Centered embedding into Z_m: negatives map to m - |x|."""
    coords = vec.coords if isinstance(vec, EncodedVector) else vec
    return [c % modulus for c in coords]


def from_ring(
    residues: Sequence[int], modulus: int, spec: FixedPointSpec
) -> EncodedVector:
    """Inverse of to_ring: residues above m/2 are negative."""
    half = modulus // 2
    coords = tuple(r if r <= half else r - modulus for r in residues)
    return EncodedVector(coords=coords, spec=spec)


def ev_zero(dim: int, spec: FixedPointSpec) -> EncodedVector:
    return EncodedVector(coords=(0,) * dim, spec=spec)


def ev_add(a: EncodedVector, b: EncodedVector) -> EncodedVector:
    if len(a) != len(b):
        raise LengthMismatch(f"vector lengths differ: {len(a)} vs {len(b)}")
    return EncodedVector(
        coords=tuple(x + y for x, y in zip(a.coords, b.coords)), spec=a.spec
    )


def ev_sub(a: EncodedVector, b: EncodedVector) -> EncodedVector:
    if len(a) != len(b):
        raise LengthMismatch(f"vector lengths differ: {len(a)} vs {len(b)}")
    return EncodedVector(
        coords=tuple(x - y for x, y in zip(a.coords, b.coords)), spec=a.spec
    )
