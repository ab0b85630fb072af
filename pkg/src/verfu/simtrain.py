"""Deterministic multi-party simulator: workloads, schedules, campaigns.

Two workloads drive the engine. Frozen workloads script every gradient up
front (model-independent), which makes the unlearning arithmetic exactly
predictable and lets the plaintext retrain oracle check the engine integer
for integer. The synthetic logistic workload trains softmax regression on
Gaussian blobs under a Dirichlet non-IID partition and is used for utility
and recovery measurements.

The whole campaign (cohorts, unlearn events, device randomness) derives
from one seed, so identical (config, seed) reproduce identical transcripts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import codec, protocol
from .algebra import seeded_rng
from .codec import EncodedVector, FixedPointSpec
from .errors import ConfigError

DEFAULT_ALPHA = 1.0  # Dirichlet concentration for the non-IID partition


@dataclass(frozen=True)
class Campaign:
    """Full run configuration (crypto sizes included)."""

    devices: int = 500
    rounds: int = 100
    cohort_size: int = 20
    unlearn_rate: float = 0.0
    cadence: int = 5
    epochs: int = 5
    lr: float = 0.01
    scale_bits: int = 24
    bound: float = 1.0
    paillier_bits: int = 256
    group_q_bits: int = 256
    seed: int = 0
    behavior: str = "honest"

    def fp_spec(self) -> FixedPointSpec:
        # every contribution is a sum of up to `rounds` gradients, so the
        # aggregate can combine cohort*(rounds+1) bounded terms
        return FixedPointSpec(
            scale_bits=self.scale_bits,
            bound=self.bound,
            max_terms=self.cohort_size * (self.rounds + 1),
        )

    @property
    def unlearn_quota(self) -> int:
        return int(round(self.unlearn_rate * self.devices))


def validate_campaign(c: Campaign) -> None:
    if c.devices < 1 or c.rounds < 1 or c.cohort_size < 1:
        raise ConfigError("devices, rounds, and cohort must all be >= 1")
    if c.cohort_size > c.devices:
        raise ConfigError(f"cohort {c.cohort_size} exceeds device count {c.devices}")
    if not 0.0 <= c.unlearn_rate <= 1.0:
        raise ConfigError(f"unlearn_rate {c.unlearn_rate} outside [0, 1]")
    if c.cadence < 1:
        raise ConfigError(f"cadence must be >= 1, got {c.cadence}")
    if c.epochs < 0 or c.lr < 0:
        raise ConfigError("epochs and lr must be non-negative")
    quota = c.unlearn_quota
    n_events = c.rounds // c.cadence
    if quota > 0 and n_events == 0:
        raise ConfigError(
            f"unlearn quota {quota} cannot be scheduled: cadence {c.cadence} "
            f"exceeds rounds {c.rounds}"
        )
    if n_events > 0 and quota > 0:
        per_event_max = quota // n_events + (1 if quota % n_events else 0)
        if per_event_max > c.cohort_size:
            raise ConfigError(
                f"{per_event_max} unlearners per event exceed cohort "
                f"{c.cohort_size}"
            )
    if c.devices - quota < 0:
        raise ConfigError("unlearn quota exceeds device count")


def build_protocol(campaign: Campaign, dim: int):
    """Dealer setup for a campaign; returns (params, trapdoor)."""
    return protocol.setup_protocol(
        dim=dim,
        group_q_bits=campaign.group_q_bits,
        paillier_bits=campaign.paillier_bits,
        fp=campaign.fp_spec(),
        seed=campaign.seed,
    )


# ===== schedule =====


@dataclass(frozen=True)
class RoundPlan:
    round_index: int
    cohort: tuple[int, ...]
    unlearners: tuple[int, ...]


def build_schedule(campaign: Campaign) -> list[RoundPlan]:
    """Derive every round's cohort and unlearn event from the seed.

    Unlearn events fire every `cadence` rounds, splitting the total quota
    (rate * devices) evenly with the remainder on the earliest events.
    Scheduled unlearners join their round's cohort and leave the active pool
    afterwards (honest-path assumption), so they are never re-selected.
    """
    validate_campaign(campaign)
    rng = seeded_rng(campaign.seed, "schedule")
    active = list(range(campaign.devices))
    quota = campaign.unlearn_quota
    n_events = campaign.rounds // campaign.cadence
    event_counts: dict[int, int] = {}
    if quota > 0 and n_events > 0:
        base, rem = divmod(quota, n_events)
        for i in range(n_events):
            event_round = (i + 1) * campaign.cadence
            event_counts[event_round] = base + (1 if i < rem else 0)
    plans = []
    for t in range(1, campaign.rounds + 1):
        if len(active) < campaign.cohort_size:
            raise ConfigError(
                f"round {t}: only {len(active)} active devices remain, "
                f"cohort needs {campaign.cohort_size}"
            )
        k = event_counts.get(t, 0)
        if k > 0:
            unl = sorted(rng.sample(active, k))
            unl_set = set(unl)
            rest = rng.sample(
                [d for d in active if d not in unl_set],
                campaign.cohort_size - k,
            )
            cohort = tuple(sorted(unl + rest))
            plans.append(
                RoundPlan(round_index=t, cohort=cohort, unlearners=tuple(unl))
            )
            active = [d for d in active if d not in unl_set]
        else:
            cohort = tuple(sorted(rng.sample(active, campaign.cohort_size)))
            plans.append(RoundPlan(round_index=t, cohort=cohort, unlearners=()))
    return plans


# ===== workloads =====


class FrozenWorkload:
    """Scripted gradients: device x round x dim tensor, model-independent."""

    supports_eval = False

    def __init__(self, gradients: np.ndarray):
        if gradients.ndim != 3:
            raise ConfigError("frozen gradients need shape (devices, rounds, dim)")
        self.gradients = np.asarray(gradients, dtype=np.float64)

    @property
    def dim(self) -> int:
        return self.gradients.shape[2]

    def initial_model(self) -> np.ndarray:
        return np.zeros(self.dim, dtype=np.float64)

    def local_gradient(self, device_id, round_index, model, epochs, lr) -> np.ndarray:
        return self.gradients[device_id, round_index - 1]


def frozen_random(
    devices: int, rounds: int, dim: int, magnitude: float, seed: int
) -> FrozenWorkload:
    rng = np.random.default_rng(seed)
    grads = rng.uniform(-magnitude, magnitude, size=(devices, rounds, dim))
    return FrozenWorkload(grads)


def dirichlet_partition(
    rng: np.random.Generator,
    devices: int,
    classes: int,
    samples_per_device: int,
    alpha: float = DEFAULT_ALPHA,
) -> np.ndarray:
    """Per-device class counts under Dirichlet(alpha) label proportions."""
    counts = np.zeros((devices, classes), dtype=np.int64)
    for dev in range(devices):
        props = rng.dirichlet(alpha * np.ones(classes))
        counts[dev] = rng.multinomial(samples_per_device, props)
    return counts


class LogisticWorkload:
    """Softmax regression on Gaussian blobs, non-IID across devices."""

    supports_eval = True

    def __init__(self, features, classes, device_data, test_data):
        self.features = features
        self.classes = classes
        self.device_data = device_data  # list of (X, y)
        self.X_test, self.y_test = test_data

    @property
    def dim(self) -> int:
        return self.classes * (self.features + 1)

    def initial_model(self) -> np.ndarray:
        return np.zeros(self.dim, dtype=np.float64)

    def _unpack(self, model: np.ndarray) -> np.ndarray:
        return np.asarray(model, dtype=np.float64).reshape(
            self.classes, self.features + 1
        )

    @staticmethod
    def _augment(X: np.ndarray) -> np.ndarray:
        return np.hstack([X, np.ones((X.shape[0], 1))])

    def _loss_grad(self, W: np.ndarray, X: np.ndarray, y: np.ndarray):
        Xa = self._augment(X)
        logits = Xa @ W.T
        logits -= logits.max(axis=1, keepdims=True)
        expz = np.exp(logits)
        probs = expz / expz.sum(axis=1, keepdims=True)
        n = X.shape[0]
        loss = -np.mean(np.log(probs[np.arange(n), y] + 1e-12))
        onehot = np.zeros_like(probs)
        onehot[np.arange(n), y] = 1.0
        grad = (probs - onehot).T @ Xa / n
        return loss, grad

    def local_gradient(self, device_id, round_index, model, epochs, lr) -> np.ndarray:
        X, y = self.device_data[device_id]
        W = self._unpack(model).copy()
        if len(y) == 0:
            return np.zeros(self.dim, dtype=np.float64)
        for _ in range(epochs):
            _, grad = self._loss_grad(W, X, y)
            W -= lr * grad
        return (W - self._unpack(model)).ravel()

    def evaluate(self, model: np.ndarray) -> tuple[float, float]:
        W = self._unpack(model)
        loss, _ = self._loss_grad(W, self.X_test, self.y_test)
        Xa = self._augment(self.X_test)
        pred = np.argmax(Xa @ W.T, axis=1)
        acc = float(np.mean(pred == self.y_test))
        return acc, float(loss)


def synthetic_logistic(
    devices: int,
    features: int = 8,
    classes: int = 2,
    samples_per_device: int = 32,
    test_samples: int = 400,
    separation: float = 2.0,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
) -> LogisticWorkload:
    """Gaussian blob task: class means `separation` apart, unit covariance."""
    if not 2 <= classes <= 4 or not 8 <= features <= 32:
        raise ConfigError("supported range: 2-4 classes over 8-32 features")
    rng = np.random.default_rng(seed)
    means = rng.normal(size=(classes, features))
    means = separation * means / np.linalg.norm(means, axis=1, keepdims=True)
    counts = dirichlet_partition(rng, devices, classes, samples_per_device, alpha)
    device_data = []
    for dev in range(devices):
        xs, ys = [], []
        for cls in range(classes):
            k = int(counts[dev, cls])
            if k > 0:
                xs.append(means[cls] + rng.normal(size=(k, features)))
                ys.append(np.full(k, cls, dtype=np.int64))
        if xs:
            device_data.append((np.vstack(xs), np.concatenate(ys)))
        else:
            device_data.append(
                (np.zeros((0, features)), np.zeros(0, dtype=np.int64))
            )
    per_class = test_samples // classes
    xt, yt = [], []
    for cls in range(classes):
        xt.append(means[cls] + rng.normal(size=(per_class, features)))
        yt.append(np.full(per_class, cls, dtype=np.int64))
    test_data = (np.vstack(xt), np.concatenate(yt))
    return LogisticWorkload(features, classes, device_data, test_data)


def evaluate(workload, model: np.ndarray) -> tuple[float, float]:
    """(accuracy, mean cross-entropy) on the workload's held-out split."""
    return workload.evaluate(model)


# ===== campaign runner =====


@dataclass(frozen=True)
class UtilityPoint:
    round_index: int
    accuracy: float
    loss: float


@dataclass
class CampaignResult:
    campaign: Campaign
    schedule: list[RoundPlan]
    rounds: list[protocol.RoundResult]
    world: protocol.World
    utility: list[UtilityPoint]
    aborted: bool

    @property
    def all_verified(self) -> bool:
        return all(r.all_verified for r in self.rounds)

    @property
    def transcript(self) -> list[protocol.TranscriptRecord]:
        return self.world.transcript

    @property
    def ledger(self):
        return self.world.ledger

    def accuracy_trajectory(self) -> list[float]:
        return [u.accuracy for u in self.utility]


def run_campaign(
    campaign: Campaign,
    workload,
    behavior=None,
    trapdoor=None,
    strict: bool = False,
    params: protocol.ProtocolParams | None = None,
) -> CampaignResult:
    """Run every scheduled round against a fresh world.

    `trapdoor` stays None outside negative-control runs; pass `params` to
    reuse an existing dealer setup (otherwise one is derived from the
    campaign seed). With strict=True the campaign stops after the first
    round containing a failed verification.
    """
    validate_campaign(campaign)
    if params is None:
        params, _ = build_protocol(campaign, workload.dim)
    schedule = build_schedule(campaign)
    world = protocol.new_world(
        params, range(campaign.devices), workload.initial_model(), campaign.seed
    )
    results: list[protocol.RoundResult] = []
    utility: list[UtilityPoint] = []
    aborted = False
    for plan in schedule:
        unl_set = set(plan.unlearners)
        gradients = {
            dev: protocol.compute_gradient(
                workload, dev, plan.round_index, world.server.model,
                campaign.epochs, campaign.lr,
            )
            for dev in plan.cohort
            if dev not in unl_set
        }
        result = protocol.run_round(
            world,
            plan.cohort,
            plan.unlearners,
            gradients,
            behavior=behavior,
            trapdoor=trapdoor,
        )
        results.append(result)
        if workload.supports_eval:
            acc, loss = workload.evaluate(world.server.model)
            utility.append(UtilityPoint(plan.round_index, acc, loss))
        if strict and not result.all_verified:
            aborted = True
            break
    return CampaignResult(
        campaign=campaign,
        schedule=schedule,
        rounds=results,
        world=world,
        utility=utility,
        aborted=aborted,
    )


# ===== plaintext oracle and recovery metric =====


@dataclass(frozen=True)
class OracleRound:
    round_index: int
    aggregate: tuple[int, ...]
    cumulative: tuple[int, ...]
    model: np.ndarray


def retrain_oracle(
    campaign: Campaign, workload, schedule: list[RoundPlan] | None = None
) -> list[OracleRound]:
    """Plaintext integer re-execution of the aggregation/unlearning rule.

    No ciphertexts, hashes, or commitments: just the same fixed-point codec
    and exact integer sums over the same schedule. The engine's decrypted
    aggregates and cumulative model state must match this coordinate for
    coordinate.
    """
    fp = campaign.fp_spec()
    if schedule is None:
        schedule = build_schedule(campaign)
    d = workload.dim
    model = np.asarray(workload.initial_model(), dtype=np.float64)
    cumulative = [0] * d
    contributions: dict[int, list[int]] = {}
    out = []
    for plan in schedule:
        unl_set = set(plan.unlearners)
        aggregate = [0] * d
        fresh: dict[int, tuple[int, ...]] = {}
        for dev in plan.cohort:
            if dev in unl_set:
                past = contributions.get(dev, [0] * d)
                aggregate = [a - c for a, c in zip(aggregate, past)]
            else:
                grad = workload.local_gradient(
                    dev, plan.round_index, model, campaign.epochs, campaign.lr
                )
                enc = codec.encode(grad, fp).coords
                fresh[dev] = enc
                aggregate = [a + e for a, e in zip(aggregate, enc)]
        cumulative = [c + a for c, a in zip(cumulative, aggregate)]
        for dev, enc in fresh.items():
            past = contributions.setdefault(dev, [0] * d)
            contributions[dev] = [c + e for c, e in zip(past, enc)]
        delta = np.asarray(
            codec.decode(
                EncodedVector(coords=tuple(aggregate), spec=fp), len(plan.cohort)
            ),
            dtype=np.float64,
        )
        model = model + delta
        out.append(
            OracleRound(
                round_index=plan.round_index,
                aggregate=tuple(aggregate),
                cumulative=tuple(cumulative),
                model=model.copy(),
            )
        )
    return out


def recovery_rounds(
    trajectory: Sequence[float], unlearn_index: int, tolerance: float = 0.001
) -> int | None:
    """Rounds until accuracy returns to within `tolerance` of the
    pre-unlearning baseline.

    `trajectory[i]` is the accuracy after round i+1; `unlearn_index` is the
    position reflecting the unlearning round itself. Counts post-unlearning
    rounds inclusively: a trajectory that never dips returns 1. None if the
    trajectory ends before recovering.
    """
    if unlearn_index < 1 or unlearn_index >= len(trajectory):
        raise ValueError(
            f"unlearn_index {unlearn_index} needs a baseline predecessor "
            f"within the trajectory (length {len(trajectory)})"
        )
    baseline = trajectory[unlearn_index - 1]
    for k in range(1, len(trajectory) - unlearn_index + 2):
        idx = unlearn_index + k - 1
        if idx >= len(trajectory):
            return None
        if trajectory[idx] >= baseline - tolerance:
            return k
    return None


def recovery_report(result: CampaignResult) -> dict[int, int | None]:
    """recovery_rounds for every unlearning event in a campaign."""
    trajectory = result.accuracy_trajectory()
    out = {}
    for plan in result.schedule:
        if plan.unlearners and plan.round_index >= 2:
            idx = plan.round_index - 1
            if idx < len(trajectory):
                out[plan.round_index] = recovery_rounds(trajectory, idx)
    return out
