"""Server misbehavior hooks and their detection signatures.

Oracle: every expected aggregate below is the honest plaintext fold plus
the hand-derived distortion of the behavior under test (add back cv, leave
part of it in, or bump one coordinate).
"""

from fractions import Fraction

import pytest

from verfu import adversary, codec, simtrain
from verfu.adversary import (
    BEHAVIOR_NAMES,
    EquivocateWithTrapdoor,
    ForgeOpening,
    Honest,
    PartialUnlearn,
    SkipUnlearn,
    TamperAggregate,
    consistent_forgery,
    parse_behavior,
)
from verfu.errors import TargetNotInCohort, TrapdoorRequired

CAMPAIGN = simtrain.Campaign(
    devices=5,
    rounds=3,
    cohort_size=5,
    unlearn_rate=0.2,
    cadence=3,
    scale_bits=8,
    paillier_bits=64,
    group_q_bits=64,
    seed=13,
)
DIM = 3


@pytest.fixture(scope="module")
def setup():
    workload = simtrain.frozen_random(5, 3, DIM, 0.5, 77)
    params, trapdoor = simtrain.build_protocol(CAMPAIGN, DIM)
    honest = simtrain.run_campaign(CAMPAIGN, workload, params=params)
    return workload, params, trapdoor, honest


def run_with(setup, behavior, trapdoor=None):
    workload, params, _, _ = setup
    return simtrain.run_campaign(
        CAMPAIGN, workload, behavior=behavior, trapdoor=trapdoor, params=params
    )


def target_history(setup):
    """(unlearner id, its per-round encoded uploads, its cv) from the schedule."""
    workload, params, _, honest = setup
    plan = honest.schedule[2]
    assert len(plan.unlearners) == 1
    dev = plan.unlearners[0]
    uploads = [
        codec.encode(
            workload.local_gradient(dev, r, None, 0, 0.0), CAMPAIGN.fp_spec()
        ).coords
        for r in (1, 2)
    ]
    cv = tuple(a + b for a, b in zip(*uploads))
    return dev, uploads, cv


class TestHonestBaseline:
    def test_all_rounds_verify(self, setup):
        _, _, _, honest = setup
        assert honest.all_verified
        assert honest.rounds[2].exited == honest.schedule[2].unlearners


class TestSkipUnlearn:
    def test_detected_and_aggregate_shifted_by_cv(self, setup):
        _, _, _, honest = setup
        res = run_with(setup, SkipUnlearn())
        r3 = res.rounds[2]
        assert not r3.all_verified
        assert r3.exited == ()
        dev, _, cv = target_history(setup)
        expected = tuple(
            a + c for a, c in zip(honest.rounds[2].aggregate.coords, cv)
        )
        assert r3.aggregate.coords == expected
        verdict = r3.verdicts[dev]
        assert all(verdict.decommit_ok.values())  # openings untouched
        assert not verdict.hash_ok

    def test_rounds_without_unlearners_honest(self, setup):
        _, _, _, honest = setup
        res = run_with(setup, SkipUnlearn())
        for i in (0, 1):
            assert (
                res.rounds[i].aggregate.coords
                == honest.rounds[i].aggregate.coords
            )

    def test_explicit_target_must_be_unlearning(self, setup):
        _, _, _, honest = setup
        bystander = next(
            d for d in honest.schedule[2].cohort
            if d not in honest.schedule[2].unlearners
        )
        with pytest.raises(TargetNotInCohort):
            run_with(setup, SkipUnlearn(targets=(bystander,)))


class TestPartialUnlearn:
    def test_half_of_two_uploads_leaves_one(self, setup):
        _, _, _, honest = setup
        res = run_with(setup, PartialUnlearn(fraction=Fraction(1, 2)))
        r3 = res.rounds[2]
        assert not r3.all_verified
        dev, uploads, cv = target_history(setup)
        # k = round(1/2 * 2) = 1: only the first archived upload is removed,
        # so cv - first stays inside the aggregate
        left_in = tuple(c - u for c, u in zip(cv, uploads[0]))
        expected = tuple(
            a + l for a, l in zip(honest.rounds[2].aggregate.coords, left_in)
        )
        assert r3.aggregate.coords == expected
        assert not r3.verdicts[dev].hash_ok

    def test_fraction_one_would_be_honest_so_rejected(self):
        with pytest.raises(ValueError):
            PartialUnlearn(fraction=Fraction(1, 1))
        with pytest.raises(ValueError):
            PartialUnlearn(fraction=Fraction(0, 1))


class TestTamperAggregate:
    def test_bumps_one_coordinate_every_round(self, setup):
        _, _, _, honest = setup
        res = run_with(setup, TamperAggregate(coord=1, offset=3))
        for i in range(3):
            got = res.rounds[i].aggregate.coords
            want = list(honest.rounds[i].aggregate.coords)
            want[1] += 3
            assert got == tuple(want)
        assert not res.rounds[2].all_verified

    def test_bad_coordinate_rejected(self, setup):
        with pytest.raises(IndexError):
            run_with(setup, TamperAggregate(coord=DIM, offset=1))


class TestForgeOpening:
    def test_decommit_fails_for_target(self, setup):
        res = run_with(setup, ForgeOpening())
        r3 = res.rounds[2]
        dev = res.schedule[2].unlearners[0]
        verdict = r3.verdicts[dev]
        assert verdict.decommit_ok[dev] is False
        assert all(ok for d, ok in verdict.decommit_ok.items() if d != dev)
        assert not r3.all_verified

    def test_aggregate_untouched(self, setup):
        _, _, _, honest = setup
        res = run_with(setup, ForgeOpening())
        assert (
            res.rounds[2].aggregate.coords
            == honest.rounds[2].aggregate.coords
        )


class TestEquivocate:
    def test_inconsistent_defeats_decommit_but_not_hash(self, setup):
        _, _, trapdoor, _ = setup
        res = run_with(
            setup, EquivocateWithTrapdoor(), trapdoor=trapdoor
        )
        r3 = res.rounds[2]
        dev = res.schedule[2].unlearners[0]
        verdict = r3.verdicts[dev]
        assert all(verdict.decommit_ok.values())  # trapdoor beats binding
        assert not verdict.hash_ok  # but the digest combination shifted
        assert not r3.all_verified

    def test_requires_trapdoor(self, setup):
        with pytest.raises(TrapdoorRequired):
            run_with(setup, EquivocateWithTrapdoor(), trapdoor=None)

    def test_consistent_forgery_passes_both_checks(self, setup):
        _, _, trapdoor, honest = setup
        res = run_with(setup, consistent_forgery(), trapdoor=trapdoor)
        r3 = res.rounds[2]
        dev = res.schedule[2].unlearners[0]
        # the aggregate is wrong (cv left in) yet verification accepts
        _, _, cv = target_history(setup)
        expected = tuple(
            a + c for a, c in zip(honest.rounds[2].aggregate.coords, cv)
        )
        assert r3.aggregate.coords == expected
        assert r3.verdicts[dev].passed
        assert r3.all_verified
        assert r3.exited == (dev,)


class TestParseBehavior:
    def test_all_names_parse(self):
        for name in BEHAVIOR_NAMES:
            beh = parse_behavior(name)
            assert beh.name == name

    def test_honest_is_default_noop(self):
        assert isinstance(parse_behavior("honest"), Honest)

    def test_arguments(self):
        beh = parse_behavior("partial_unlearn:1/4")
        assert isinstance(beh, PartialUnlearn)
        assert beh.fraction == Fraction(1, 4)
        beh = parse_behavior("tamper_aggregate:2:9")
        assert isinstance(beh, TamperAggregate)
        assert beh.coord == 2
        assert beh.offset == 9

    def test_unknown_rejected(self):
        with pytest.raises(ValueError):
            parse_behavior("rewind_ledger")
        with pytest.raises(ValueError):
            parse_behavior("partial_unlearn:2/1")
