"""Scripted server misbehavior for soundness testing.

Each behavior plugs into the two server-side hooks of a round: forming the
encrypted aggregate and relaying the openings to the verifiers. The honest
base class passes both through unchanged. Targets may be given explicitly or
left as None, in which case a behavior picks this round's unlearning devices
(the natural victims) on the fly.

EquivocateWithTrapdoor exists in two flavors deliberately: with an arbitrary
substitute digest the decommitments verify but the hash comparison fails;
in consistent mode the same target's removal is skipped in the aggregate and
its commitment is reopened to the zero-vector digest, so both checks pass.
The consistent mode is a negative control: it demonstrates constructively
that a server holding the trapdoor defeats verification, which is why the
dealer must never hand the trapdoor over.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from . import commitment, paillier
from .algebra import mod_pow, seeded_rng
from .errors import TargetNotInCohort, TrapdoorRequired
from .lhh import IDENTITY_DIGEST
from .protocol import (
    FLAG_NORMAL,
    AggregateContext,
    OpeningContext,
    OpeningMsg,
)


class ServerBehavior:
    """Honest pass-through; attack behaviors override the hooks."""

    name = "honest"

    def observe_uploads(self, round_index, uploads, pk) -> None:
        """Called with every round's uploads before aggregation."""

    def corrupt_aggregate(self, ctx: AggregateContext):
        return ctx.honest

    def corrupt_openings(self, ctx: OpeningContext):
        return ctx.openings, ctx.board


class Honest(ServerBehavior):
    pass


def corrupt_aggregate(behavior: ServerBehavior, ctx: AggregateContext):
    return behavior.corrupt_aggregate(ctx)


def corrupt_openings(behavior: ServerBehavior, ctx: OpeningContext):
    return behavior.corrupt_openings(ctx)


def _resolve_targets(explicit, ctx_unlearners, cohort) -> tuple[int, ...]:
    """Explicit targets validated against the cohort; None means this
    round's unlearners."""
    if explicit is None:
        return tuple(ctx_unlearners)
    missing = [t for t in explicit if t not in cohort]
    if missing:
        raise TargetNotInCohort(f"targets {missing} not in cohort {sorted(cohort)}")
    return tuple(explicit)


@dataclass
class SkipUnlearn(ServerBehavior):
    """Quietly keep the targets' contributions: undo their subtraction."""

    targets: tuple[int, ...] | None = None
    name: str = "skip_unlearn"

    def corrupt_aggregate(self, ctx: AggregateContext):
        out = ctx.honest
        for dev in _resolve_targets(self.targets, ctx.unlearners, ctx.cohort):
            if dev not in ctx.unlearners:
                raise TargetNotInCohort(f"device {dev} is not unlearning this round")
            # adding the upload back cancels the honest subtraction
            out = paillier.vec_add(ctx.pk, out, ctx.uploads[dev].payload)
        return out


@dataclass
class PartialUnlearn(ServerBehavior):
    """Remove only part of the target's history.

    The server cannot scale a hidden contribution fractionally, but it has
    retained every gradient ciphertext the target ever uploaded; subtracting
    the homomorphic sum of just the first k of the target's m past uploads
    (k = round(fraction * m), half away from zero) realizes fractional
    removal exactly in the integer domain.
    """

    targets: tuple[int, ...] | None = None
    fraction: Fraction = Fraction(1, 2)
    name: str = "partial_unlearn"
    _archive: dict[int, list[paillier.CiphertextVector]] = field(
        default_factory=dict, repr=False
    )

    def __post_init__(self):
        if not 0 < self.fraction < 1:
            raise ValueError(
                f"fraction must lie strictly between 0 and 1, got {self.fraction}"
            )

    def observe_uploads(self, round_index, uploads, pk) -> None:
        for dev, msg in uploads.items():
            if msg.flag == FLAG_NORMAL:
                self._archive.setdefault(dev, []).append(msg.payload)

    def corrupt_aggregate(self, ctx: AggregateContext):
        out = ctx.honest
        for dev in _resolve_targets(self.targets, ctx.unlearners, ctx.cohort):
            if dev not in ctx.unlearners:
                raise TargetNotInCohort(f"device {dev} is not unlearning this round")
            history = self._archive.get(dev, [])
            m = len(history)
            k = (2 * self.fraction.numerator * m + self.fraction.denominator) // (
                2 * self.fraction.denominator
            )
            k = min(k, m)
            # cancel the honest full subtraction, then subtract the partial sum
            out = paillier.vec_add(ctx.pk, out, ctx.uploads[dev].payload)
            for vec in history[:k]:
                out = paillier.vec_sub(ctx.pk, out, vec)
        return out


@dataclass
class TamperAggregate(ServerBehavior):
    """Inject an additive plaintext offset at one coordinate."""

    coord: int = 0
    offset: int = 1
    rng: random.Random = field(default_factory=lambda: seeded_rng("tamper-aggregate"))
    name: str = "tamper_aggregate"

    def corrupt_aggregate(self, ctx: AggregateContext):
        coords = list(ctx.honest.coords)
        if not 0 <= self.coord < len(coords):
            raise IndexError(f"coordinate {self.coord} out of range")
        delta = paillier.encrypt(ctx.pk, self.offset % ctx.pk.n, self.rng)
        coords[self.coord] = paillier.ct_add(ctx.pk, coords[self.coord], delta)
        return paillier.CiphertextVector(tuple(coords))


@dataclass
class ForgeOpening(ServerBehavior):
    """Swap the target's opening for random garbage; the board stays put."""

    target: int | None = None
    rng: random.Random = field(default_factory=lambda: seeded_rng("forge-opening"))
    name: str = "forge_opening"

    def corrupt_openings(self, ctx: OpeningContext):
        cohort = ctx.cohort
        target = self.target
        if target is None:
            target = ctx.unlearners[0] if ctx.unlearners else cohort[0]
        elif target not in cohort:
            raise TargetNotInCohort(f"device {target} not in cohort {sorted(cohort)}")
        group = ctx.params.group
        g0 = ctx.params.lhh_params.generators[0]
        fake_digest = mod_pow(g0, self.rng.randrange(1, group.q_order), group.p_mod)
        fake_r = self.rng.randrange(0, group.q_order)
        replaced = tuple(
            OpeningMsg(device_id=m.device_id, digest=fake_digest, randomness=fake_r)
            if m.device_id == target
            else m
            for m in ctx.openings
        )
        return replaced, ctx.board


@dataclass
class EquivocateWithTrapdoor(ServerBehavior):
    """Reopen the target's commitment to a substitute digest via the trapdoor.

    The server learns (digest, r) when it collects openings; with the dealer
    trapdoor it can then retarget the unchanged board entry to any digest,
    so every decommitment still verifies. In consistent mode the aggregate
    hook also skips the same target's removal and the substitute is the
    zero-vector digest, making the hash comparison pass as well.
    """

    target: int | None = None
    substitute_digest: int | None = None  # None: random group element
    consistent: bool = False
    rng: random.Random = field(default_factory=lambda: seeded_rng("equivocate"))
    name: str = "equivocate_inconsistent"

    def __post_init__(self):
        if self.consistent:
            self.name = "equivocate_consistent"

    def _pick_target(self, ctx) -> int:
        if self.target is not None:
            if self.target not in ctx.cohort:
                raise TargetNotInCohort(
                    f"device {self.target} not in cohort {sorted(ctx.cohort)}"
                )
            return self.target
        if not ctx.unlearners:
            raise TargetNotInCohort("no unlearning device to equivocate against")
        return ctx.unlearners[0]

    def corrupt_aggregate(self, ctx: AggregateContext):
        if not self.consistent or not ctx.unlearners:
            return ctx.honest
        dev = self._pick_target(ctx)
        if dev not in ctx.unlearners:
            raise TargetNotInCohort(f"device {dev} is not unlearning this round")
        return paillier.vec_add(ctx.pk, ctx.honest, ctx.uploads[dev].payload)

    def corrupt_openings(self, ctx: OpeningContext):
        if ctx.trapdoor is None:
            raise TrapdoorRequired(f"{self.name} needs the commitment trapdoor")
        target = self._pick_target(ctx)
        com = ctx.params.com_params
        substitute = self.substitute_digest
        if self.consistent:
            substitute = IDENTITY_DIGEST
        elif substitute is None:
            g0 = ctx.params.lhh_params.generators[0]
            substitute = mod_pow(
                g0, self.rng.randrange(1, com.group.q_order), com.group.p_mod
            )
        replaced = []
        for msg in ctx.openings:
            if msg.device_id != target:
                replaced.append(msg)
                continue
            x_old = commitment.encode_message(com, msg.digest)
            x_new = commitment.encode_message(com, substitute)
            r_new = commitment.equivocate(ctx.trapdoor, x_old, msg.randomness, x_new)
            replaced.append(
                OpeningMsg(device_id=target, digest=substitute, randomness=r_new)
            )
        return tuple(replaced), ctx.board


def consistent_forgery(target: int | None = None) -> EquivocateWithTrapdoor:
    """The trapdoor-equipped forgery that verification cannot catch."""
    return EquivocateWithTrapdoor(target=target, consistent=True)


BEHAVIOR_NAMES = (
    "honest",
    "skip_unlearn",
    "partial_unlearn",
    "tamper_aggregate",
    "forge_opening",
    "equivocate_inconsistent",
    "equivocate_consistent",
)


def parse_behavior(text: str) -> ServerBehavior:
    """Build a behavior from its CLI name, e.g. 'partial_unlearn:1/2' or
    'tamper_aggregate:3:25'. Targets resolve to each round's unlearners."""
    parts = text.split(":")
    name, args = parts[0], parts[1:]
    if name == "honest":
        return Honest()
    if name == "skip_unlearn":
        return SkipUnlearn()
    if name == "partial_unlearn":
        frac = Fraction(args[0]) if args else Fraction(1, 2)
        if not 0 < frac < 1:
            raise ValueError(f"partial_unlearn fraction must be in (0, 1): {frac}")
        return PartialUnlearn(fraction=frac)
    if name == "tamper_aggregate":
        coord = int(args[0]) if len(args) > 0 else 0
        offset = int(args[1]) if len(args) > 1 else 1
        return TamperAggregate(coord=coord, offset=offset)
    if name == "forge_opening":
        return ForgeOpening()
    if name == "equivocate_inconsistent":
        return EquivocateWithTrapdoor()
    if name == "equivocate_consistent":
        return consistent_forgery()
    raise ValueError(f"unknown behavior {name!r}; known: {', '.join(BEHAVIOR_NAMES)}")
