"""Three-phase round engine: prepare/commit, aggregate-and-unlearn, verify.

One round moves every cohort device through:

1. Preparation: normal devices hash their fresh encoded gradient, unlearning
   devices hash their accumulated contribution; each commits to the
   field-encoded digest and the server boards all commitments back.
2. Aggregation and unlearning: devices upload per-coordinate Paillier
   encryptions (gradient with flag +1, accumulated contribution with flag
   -1); the server folds them into the encrypted aggregate, which devices
   decrypt and apply as (1/|U|) * (sum of gradients - sum of contributions).
3. Verification (only when the cohort contains unlearning devices): everyone
   reveals (digest, randomness); each unlearning device checks every
   decommitment against the board, combines the digests with the status
   flags, and accepts only if the aggregate it decrypted hashes to the same
   group element. Passing verifiers exit the participant pool.

The engine is workload-agnostic (gradients come in as plain vectors) and
single-threaded-deterministic: same params, cohort, gradients, and device
RNG states reproduce every wire byte. All wire messages are appended to a
transcript and charged to the metrics ledger; decrypted aggregates and
verdicts are appended as non-wire records (receiver "local") so an offline
audit can replay the round.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import codec, commitment, lhh, paillier
from .algebra import group_setup, int_from_bytes, int_to_bytes, seeded_rng
from .codec import EncodedVector, FixedPointSpec
from .commitment import ComParams, Trapdoor
from .errors import (
    DuplicateDevice,
    EmptyCohort,
    LengthMismatch,
    MissingDevice,
    MissingOpening,
    TargetNotInCohort,
)
from .lhh import LhhParams
from .metrics import (
    AGGREGATION,
    PREPARATION,
    SERVER,
    VERIFICATION,
    MetricsLedger,
    device_role,
)
from .paillier import CiphertextVector, PaillierPublicKey, PaillierSecretKey

DEVICE_ID_BYTES = 4
FLAG_BYTES = 1
FLAG_NORMAL = 1
FLAG_UNLEARN = -1


class Role(Enum):
    NORMAL = "normal"
    UNLEARNING = "unlearning"


# ===== parameters and world state =====


@dataclass(frozen=True)
class ProtocolParams:
    """Everything the dealer distributes before round 1 (minus the trapdoor)."""

    lhh_params: LhhParams
    com_params: ComParams
    pk: PaillierPublicKey
    sk: PaillierSecretKey
    fp: FixedPointSpec

    @property
    def group(self):
        return self.lhh_params.group

    @property
    def dim(self) -> int:
        return self.lhh_params.dim

    @property
    def n_bytes(self) -> int:
        return (self.pk.n.bit_length() + 7) // 8


def setup_protocol(
    dim: int,
    group_q_bits: int,
    paillier_bits: int,
    fp: FixedPointSpec,
    seed: int,
) -> tuple[ProtocolParams, Trapdoor]:
    """Trusted-dealer setup: one group, hash generators, commitment pair,
    and a shared Paillier keypair, all derived from the seed.

    The equivocation trapdoor is returned separately; hand it to nobody
    (in particular not to the server) outside negative-control tests.
    """
    group_seed = seeded_rng(seed, "group-seed").randbytes(32)
    group = group_setup(group_q_bits, group_seed)
    lhh_params = lhh.lhh_from_group(group, dim)
    com_params, trapdoor = commitment.com_from_group(
        group, seeded_rng(seed, "com-alpha")
    )
    pk, sk = paillier.keygen(paillier_bits, seeded_rng(seed, "paillier"))
    fp.validate_modulus(pk.n)
    fp.validate_modulus(group.q_order)
    params = ProtocolParams(
        lhh_params=lhh_params, com_params=com_params, pk=pk, sk=sk, fp=fp
    )
    return params, trapdoor


@dataclass
class DeviceState:
    device_id: int
    rng: random.Random
    role: Role = Role.NORMAL
    contribution: EncodedVector | None = None  # running sum of uploaded gradients
    exited: bool = False
    participated: list[int] = field(default_factory=list)


@dataclass
class ServerState:
    round_index: int = 0
    model: np.ndarray | None = None
    model_int: list[int] | None = None  # cumulative integer aggregate


@dataclass
class World:
    params: ProtocolParams
    devices: dict[int, DeviceState]
    server: ServerState
    transcript: list["TranscriptRecord"] = field(default_factory=list)
    ledger: MetricsLedger = field(default_factory=MetricsLedger)

    def emit(
        self,
        round_index: int,
        phase: str,
        sender: str,
        receiver: str,
        rtype: str,
        payload: bytes,
    ) -> None:
        self.transcript.append(
            TranscriptRecord(round_index, phase, sender, receiver, rtype, payload)
        )
        if receiver != "local":
            self.ledger.record_message(
                round_index, phase, sender, receiver, len(payload)
            )


def new_world(
    params: ProtocolParams,
    device_ids: Iterable[int],
    initial_model: Sequence[float],
    seed: int,
) -> World:
    model = np.asarray(initial_model, dtype=np.float64)
    if model.shape != (params.dim,):
        raise LengthMismatch(
            f"initial model has shape {model.shape}, expected ({params.dim},)"
        )
    devices = {
        i: DeviceState(
            device_id=i,
            rng=seeded_rng(seed, "device", i),
            contribution=codec.ev_zero(params.dim, params.fp),
        )
        for i in device_ids
    }
    server = ServerState(
        model=model.copy(), model_int=[0] * params.dim
    )
    return World(params=params, devices=devices, server=server)


# ===== messages and wire formats =====


@dataclass(frozen=True)
class PrepareMsg:
    device_id: int
    commitment_value: int


@dataclass(frozen=True)
class UploadMsg:
    device_id: int
    payload: CiphertextVector
    flag: int


@dataclass(frozen=True)
class OpeningMsg:
    device_id: int
    digest: int
    randomness: int


@dataclass(frozen=True)
class StashedOpening:
    """What a device retains between committing and revealing."""

    digest: int
    randomness: int


def _flag_byte(flag: int) -> bytes:
    if flag == FLAG_NORMAL:
        return b"\x01"
    if flag == FLAG_UNLEARN:
        return b"\xff"
    raise ValueError(f"flag must be +1 or -1, got {flag}")


def _parse_flag(b: int) -> int:
    if b == 0x01:
        return FLAG_NORMAL
    if b == 0xFF:
        return FLAG_UNLEARN
    raise ValueError(f"unknown flag byte {b:#x}")


def prepare_payload(params: ProtocolParams, msg: PrepareMsg) -> bytes:
    return commitment.com_to_bytes(params.com_params, msg.commitment_value)


def board_payload(params: ProtocolParams, board: Mapping[int, int]) -> bytes:
    parts = []
    for dev in sorted(board):
        parts.append(int_to_bytes(dev, DEVICE_ID_BYTES))
        parts.append(commitment.com_to_bytes(params.com_params, board[dev]))
    return b"".join(parts)


def parse_board_payload(params: ProtocolParams, data: bytes) -> dict[int, int]:
    width = DEVICE_ID_BYTES + params.com_params.commitment_bytes
    if len(data) % width != 0:
        raise LengthMismatch(f"board payload length {len(data)} not a multiple of {width}")
    board = {}
    for off in range(0, len(data), width):
        dev = int_from_bytes(data[off : off + DEVICE_ID_BYTES])
        com = int_from_bytes(data[off + DEVICE_ID_BYTES : off + width])
        board[dev] = com
    return board


def upload_payload(params: ProtocolParams, msg: UploadMsg) -> bytes:
    return paillier.vec_to_bytes(params.pk, msg.payload) + _flag_byte(msg.flag)


def aggregate_payload(
    params: ProtocolParams,
    aggregate: CiphertextVector,
    flags: Sequence[tuple[int, int]],
) -> bytes:
    parts = [paillier.vec_to_bytes(params.pk, aggregate)]
    for dev, flag in flags:
        parts.append(int_to_bytes(dev, DEVICE_ID_BYTES))
        parts.append(_flag_byte(flag))
    return b"".join(parts)


def parse_aggregate_payload(
    params: ProtocolParams, data: bytes, dim: int
) -> tuple[CiphertextVector, dict[int, int]]:
    vec_len = dim * params.pk.ciphertext_bytes
    entry = DEVICE_ID_BYTES + FLAG_BYTES
    if len(data) < vec_len or (len(data) - vec_len) % entry != 0:
        raise LengthMismatch("aggregate payload has unexpected length")
    vec = paillier.vec_from_bytes(params.pk, data[:vec_len])
    flags = {}
    for off in range(vec_len, len(data), entry):
        dev = int_from_bytes(data[off : off + DEVICE_ID_BYTES])
        flags[dev] = _parse_flag(data[off + DEVICE_ID_BYTES])
    return vec, flags


def opening_payload(params: ProtocolParams, msg: OpeningMsg) -> bytes:
    return (
        lhh.digest_to_bytes(params.lhh_params, msg.digest)
        + int_to_bytes(msg.randomness, params.com_params.scalar_bytes)
    )


def opening_board_payload(
    params: ProtocolParams, openings: Sequence[OpeningMsg]
) -> bytes:
    parts = []
    for msg in sorted(openings, key=lambda m: m.device_id):
        parts.append(int_to_bytes(msg.device_id, DEVICE_ID_BYTES))
        parts.append(opening_payload(params, msg))
    return b"".join(parts)


def parse_opening_board_payload(
    params: ProtocolParams, data: bytes
) -> list[OpeningMsg]:
    d_bytes = params.lhh_params.digest_bytes
    s_bytes = params.com_params.scalar_bytes
    width = DEVICE_ID_BYTES + d_bytes + s_bytes
    if len(data) % width != 0:
        raise LengthMismatch(
            f"opening board length {len(data)} not a multiple of {width}"
        )
    out = []
    for off in range(0, len(data), width):
        dev = int_from_bytes(data[off : off + DEVICE_ID_BYTES])
        digest = int_from_bytes(
            data[off + DEVICE_ID_BYTES : off + DEVICE_ID_BYTES + d_bytes]
        )
        rnd = int_from_bytes(data[off + DEVICE_ID_BYTES + d_bytes : off + width])
        out.append(OpeningMsg(device_id=dev, digest=digest, randomness=rnd))
    return out


def residues_payload(params: ProtocolParams, residues: Sequence[int]) -> bytes:
    return b"".join(int_to_bytes(r, params.n_bytes) for r in residues)


def parse_residues_payload(params: ProtocolParams, data: bytes) -> list[int]:
    width = params.n_bytes
    if len(data) % width != 0:
        raise LengthMismatch(f"residue payload length {len(data)} not a multiple of {width}")
    return [int_from_bytes(data[off : off + width]) for off in range(0, len(data), width)]


# ===== transcript =====


@dataclass(frozen=True)
class TranscriptRecord:
    round_index: int
    phase: str
    sender: str
    receiver: str
    rtype: str
    payload: bytes

    @property
    def is_wire(self) -> bool:
        return self.receiver != "local"

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "round": self.round_index,
                "phase": self.phase,
                "sender": self.sender,
                "receiver": self.receiver,
                "type": self.rtype,
                "payload_hex": self.payload.hex(),
                "byte_len": len(self.payload),
            },
            sort_keys=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_json_line(cls, line: str) -> "TranscriptRecord":
        obj = json.loads(line)
        payload = bytes.fromhex(obj["payload_hex"])
        if len(payload) != obj["byte_len"]:
            raise ValueError(
                f"byte_len {obj['byte_len']} disagrees with payload length {len(payload)}"
            )
        return cls(
            round_index=obj["round"],
            phase=obj["phase"],
            sender=obj["sender"],
            receiver=obj["receiver"],
            rtype=obj["type"],
            payload=payload,
        )


def transcript_to_file(records: Iterable[TranscriptRecord], path: str) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(rec.to_json_line())
            fh.write("\n")


def transcript_from_file(path: str) -> list[TranscriptRecord]:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(TranscriptRecord.from_json_line(line))
    return records


# ===== per-op protocol steps =====


def compute_gradient(
    workload: Any,
    device_id: int,
    round_index: int,
    model: np.ndarray,
    epochs: int,
    lr: float,
) -> np.ndarray:
    """Local training delta for one device (delegates to the workload)."""
    return workload.local_gradient(device_id, round_index, model, epochs, lr)


def device_prepare(
    params: ProtocolParams, device: DeviceState, value: EncodedVector
) -> tuple[PrepareMsg, StashedOpening]:
    """Hash `value` (gradient or contribution), commit to the digest."""
    q = params.group.q_order
    digest = lhh.lhh_hash(params.lhh_params, codec.to_ring(value, q))
    x = commitment.encode_message(params.com_params, digest)
    r = device.rng.randrange(0, q)
    c = commitment.commit(params.com_params, x, r)
    return (
        PrepareMsg(device_id=device.device_id, commitment_value=c),
        StashedOpening(digest=digest, randomness=r),
    )


def device_upload(
    params: ProtocolParams, device: DeviceState, value: EncodedVector, flag: int
) -> UploadMsg:
    """Per-coordinate encryption of the centered ring embedding of `value`."""
    ct = paillier.vec_encrypt(params.pk, codec.to_ring(value, params.pk.n), device.rng)
    return UploadMsg(device_id=device.device_id, payload=ct, flag=flag)


def server_board(msgs: Sequence[PrepareMsg]) -> dict[int, int]:
    if not msgs:
        raise EmptyCohort("no prepare messages")
    board: dict[int, int] = {}
    for msg in msgs:
        if msg.device_id in board:
            raise DuplicateDevice(f"device {msg.device_id} prepared twice")
        board[msg.device_id] = msg.commitment_value
    return board


def server_aggregate_unlearn(
    pk: PaillierPublicKey, uploads: Mapping[int, UploadMsg]
) -> CiphertextVector:
    """Fold uploads in device-id order: multiply in +1 flags, divide out -1."""
    if not uploads:
        raise EmptyCohort("no uploads to aggregate")
    dims = {len(msg.payload) for msg in uploads.values()}
    if len(dims) != 1:
        raise LengthMismatch(f"uploads disagree on dimension: {sorted(dims)}")
    dim = dims.pop()
    acc = CiphertextVector(tuple(paillier.Ciphertext(1) for _ in range(dim)))
    for dev in sorted(uploads):
        msg = uploads[dev]
        if msg.flag == FLAG_NORMAL:
            acc = paillier.vec_add(pk, acc, msg.payload)
        elif msg.flag == FLAG_UNLEARN:
            acc = paillier.vec_sub(pk, acc, msg.payload)
        else:
            raise ValueError(f"flag must be +1 or -1, got {msg.flag}")
    return acc


def device_decrypt_update(
    params: ProtocolParams, aggregate: CiphertextVector, cohort_size: int
) -> tuple[EncodedVector, np.ndarray]:
    """Decrypt, lift to centered integers, and rescale by 1/(|U| * 2^s)."""
    residues = paillier.vec_decrypt(params.sk, params.pk, aggregate)
    a = codec.from_ring(residues, params.pk.n, params.fp)
    delta_w = np.asarray(codec.decode(a, cohort_size), dtype=np.float64)
    return a, delta_w


def apply_update(model: np.ndarray, delta_w: np.ndarray) -> np.ndarray:
    if model.shape != delta_w.shape:
        raise LengthMismatch(f"shape mismatch: {model.shape} vs {delta_w.shape}")
    return model + delta_w


def accumulate(device: DeviceState, gradient: EncodedVector) -> None:
    """Fold an uploaded gradient into the device's running contribution."""
    device.contribution = codec.ev_add(device.contribution, gradient)


def verify_decommitments(
    params: ComParams, board: Mapping[int, int], openings: Sequence[OpeningMsg]
) -> dict[int, bool]:
    """Eq.-style decommit check of every boarded commitment."""
    by_id: dict[int, OpeningMsg] = {}
    for msg in openings:
        if msg.device_id in by_id:
            raise DuplicateDevice(f"two openings from device {msg.device_id}")
        by_id[msg.device_id] = msg
    out = {}
    for dev, com_value in board.items():
        msg = by_id.get(dev)
        if msg is None:
            raise MissingOpening(f"no opening for boarded device {dev}")
        x = commitment.encode_message(params, msg.digest)
        out[dev] = commitment.decommit(params, com_value, x, msg.randomness)
    extra = set(by_id) - set(board)
    if extra:
        raise MissingDevice(f"openings from devices not on the board: {sorted(extra)}")
    return out


def combine_hashes(
    params: LhhParams, openings: Sequence[OpeningMsg], flags: Mapping[int, int]
) -> int:
    """Flag-weighted digest combination, devices in id order."""
    ordered = sorted(openings, key=lambda m: m.device_id)
    digests = []
    coeffs = []
    for msg in ordered:
        if msg.device_id not in flags:
            raise MissingDevice(f"no status flag for device {msg.device_id}")
        digests.append(msg.digest)
        coeffs.append(flags[msg.device_id])
    return lhh.lhh_eval(params, digests, coeffs)


def verify_unlearning(
    params: ProtocolParams, aggregate: EncodedVector, expected: int
) -> bool:
    """Hash the decrypted aggregate and compare with the digest combination."""
    q = params.group.q_order
    return lhh.lhh_hash(params.lhh_params, codec.to_ring(aggregate, q)) == expected


def rescaled_update_reference(
    delta_w: np.ndarray,
    unlearn_gradients: Sequence[np.ndarray],
    cohort_size: int,
) -> np.ndarray:
    """Plaintext reference for the rescaled post-unlearning update.

    Given the full-cohort average update and the unlearners' own gradients,
    returns the average over the remaining devices:
    |U|/(|U|-k) * delta_w - 1/(|U|-k) * sum(unlearn gradients).
    """
    k = len(unlearn_gradients)
    remaining = cohort_size - k
    if remaining == 0:
        raise ZeroDivisionError("every cohort device unlearns; nothing remains")
    total = np.zeros_like(delta_w)
    for g in unlearn_gradients:
        total = total + np.asarray(g, dtype=np.float64)
    return (cohort_size * delta_w - total) / remaining


# ===== adversary hook contexts =====


@dataclass(frozen=True)
class AggregateContext:
    """What a (possibly malicious) server has when forming the aggregate."""

    pk: PaillierPublicKey
    round_index: int
    cohort: tuple[int, ...]
    unlearners: tuple[int, ...]
    uploads: Mapping[int, UploadMsg]
    honest: CiphertextVector


@dataclass(frozen=True)
class OpeningContext:
    """What the server holds when relaying openings to the verifiers."""

    params: ProtocolParams
    round_index: int
    cohort: tuple[int, ...]
    unlearners: tuple[int, ...]
    openings: tuple[OpeningMsg, ...]
    board: Mapping[int, int]
    trapdoor: Trapdoor | None


# ===== round results =====


@dataclass(frozen=True)
class DeviceVerdict:
    device_id: int
    decommit_ok: Mapping[int, bool]
    hash_ok: bool

    @property
    def passed(self) -> bool:
        return self.hash_ok and all(self.decommit_ok.values())


@dataclass(frozen=True)
class RoundResult:
    round_index: int
    cohort: tuple[int, ...]
    unlearners: tuple[int, ...]
    aggregate: EncodedVector
    delta_w: np.ndarray
    verdicts: Mapping[int, DeviceVerdict]
    exited: tuple[int, ...]
    model_int: tuple[int, ...]

    @property
    def all_verified(self) -> bool:
        return all(v.passed for v in self.verdicts.values())


# ===== the round =====


def run_round(
    world: World,
    cohort: Sequence[int],
    unlearners: Sequence[int],
    gradients: Mapping[int, Sequence[float]],
    behavior: Any = None,
    trapdoor: Trapdoor | None = None,
) -> RoundResult:
    """Execute one full round against the world state.

    `gradients` maps each normal cohort device to its local training delta;
    unlearning devices contribute no gradient in their unlearning round.
    `behavior` (None = honest) receives the server-side hooks; `trapdoor` is
    only ever non-None in negative-control tests.
    """
    params = world.params
    cohort = tuple(sorted(cohort))
    unl = tuple(sorted(unlearners))
    if not cohort:
        raise EmptyCohort("cohort is empty")
    if len(set(cohort)) != len(cohort):
        raise DuplicateDevice("cohort contains repeats")
    unl_set = set(unl)
    if not unl_set.issubset(cohort):
        raise TargetNotInCohort(
            f"unlearners {sorted(unl_set - set(cohort))} not in cohort"
        )
    for dev in cohort:
        state = world.devices.get(dev)
        if state is None:
            raise MissingDevice(f"unknown device {dev}")
        if state.exited:
            raise MissingDevice(f"device {dev} already exited the pool")
    normals = [d for d in cohort if d not in unl_set]
    if set(gradients) != set(normals):
        raise MissingDevice(
            "gradients must cover exactly the normal cohort devices; "
            f"got {sorted(gradients)}, expected {normals}"
        )

    world.server.round_index += 1
    t = world.server.round_index
    q = params.group.q_order
    for dev in unl:
        world.devices[dev].role = Role.UNLEARNING

    # --- phase 1: preparation ---
    prep_msgs: list[PrepareMsg] = []
    stashes: dict[int, StashedOpening] = {}
    encoded: dict[int, EncodedVector] = {}
    for dev in cohort:
        state = world.devices[dev]
        t0 = time.perf_counter()
        if dev in unl_set:
            value = state.contribution
        else:
            value = codec.encode(gradients[dev], params.fp)
            encoded[dev] = value
        msg, stash = device_prepare(params, state, value)
        world.ledger.record_cpu(
            t, PREPARATION, device_role(dev), time.perf_counter() - t0
        )
        prep_msgs.append(msg)
        stashes[dev] = stash
        world.emit(
            t, PREPARATION, device_role(dev), SERVER, "prepare",
            prepare_payload(params, msg),
        )
    t0 = time.perf_counter()
    board = server_board(prep_msgs)
    board_bytes = board_payload(params, board)
    world.ledger.record_cpu(t, PREPARATION, SERVER, time.perf_counter() - t0)
    for dev in cohort:
        world.emit(t, PREPARATION, SERVER, device_role(dev), "board", board_bytes)

    # --- phase 2: aggregation and unlearning ---
    uploads: dict[int, UploadMsg] = {}
    for dev in cohort:
        state = world.devices[dev]
        t0 = time.perf_counter()
        if dev in unl_set:
            msg = device_upload(params, state, state.contribution, FLAG_UNLEARN)
        else:
            msg = device_upload(params, state, encoded[dev], FLAG_NORMAL)
        world.ledger.record_cpu(
            t, AGGREGATION, device_role(dev), time.perf_counter() - t0
        )
        uploads[dev] = msg
        world.emit(
            t, AGGREGATION, device_role(dev), SERVER, "upload",
            upload_payload(params, msg),
        )
    if behavior is not None:
        behavior.observe_uploads(t, uploads, params.pk)
    t0 = time.perf_counter()
    aggregate_ct = server_aggregate_unlearn(params.pk, uploads)
    if behavior is not None:
        aggregate_ct = behavior.corrupt_aggregate(
            AggregateContext(
                pk=params.pk,
                round_index=t,
                cohort=cohort,
                unlearners=unl,
                uploads=uploads,
                honest=aggregate_ct,
            )
        )
    flags = [(dev, uploads[dev].flag) for dev in cohort]
    aggregate_bytes = aggregate_payload(params, aggregate_ct, flags)
    world.ledger.record_cpu(t, AGGREGATION, SERVER, time.perf_counter() - t0)
    for dev in cohort:
        world.emit(t, AGGREGATION, SERVER, device_role(dev), "aggregate", aggregate_bytes)

    # every cohort device decrypts the same broadcast; computed once here
    t0 = time.perf_counter()
    residues = paillier.vec_decrypt(params.sk, params.pk, aggregate_ct)
    aggregate = codec.from_ring(residues, params.pk.n, params.fp)
    delta_w = np.asarray(codec.decode(aggregate, len(cohort)), dtype=np.float64)
    decrypt_seconds = time.perf_counter() - t0
    for dev in cohort:
        world.ledger.record_cpu(t, AGGREGATION, device_role(dev), decrypt_seconds)
    world.emit(
        t, AGGREGATION, "cohort", "local", "decrypted",
        residues_payload(params, residues),
    )

    for dev in normals:
        accumulate(world.devices[dev], encoded[dev])
        world.devices[dev].participated.append(t)
    world.server.model_int = [
        m + a for m, a in zip(world.server.model_int, aggregate.coords)
    ]
    world.server.model = apply_update(world.server.model, delta_w)

    # --- phase 3: verification (skipped entirely when nobody unlearns) ---
    verdicts: dict[int, DeviceVerdict] = {}
    exited: list[int] = []
    if unl:
        openings = []
        for dev in cohort:
            stash = stashes[dev]
            msg = OpeningMsg(
                device_id=dev, digest=stash.digest, randomness=stash.randomness
            )
            openings.append(msg)
            world.emit(
                t, VERIFICATION, device_role(dev), SERVER, "opening",
                opening_payload(params, msg),
            )
        board_view: Mapping[int, int] = board
        opening_view: Sequence[OpeningMsg] = openings
        if behavior is not None:
            opening_view, board_view = behavior.corrupt_openings(
                OpeningContext(
                    params=params,
                    round_index=t,
                    cohort=cohort,
                    unlearners=unl,
                    openings=tuple(openings),
                    board=board,
                    trapdoor=trapdoor,
                )
            )
        opening_board_bytes = opening_board_payload(params, opening_view)
        for dev in unl:
            world.emit(
                t, VERIFICATION, SERVER, device_role(dev), "openings",
                opening_board_bytes,
            )
        flag_map = {dev: flag for dev, flag in flags}
        for dev in unl:
            t0 = time.perf_counter()
            decommit_ok = verify_decommitments(
                params.com_params, board_view, opening_view
            )
            combined = combine_hashes(params.lhh_params, opening_view, flag_map)
            hash_ok = verify_unlearning(params, aggregate, combined)
            world.ledger.record_cpu(
                t, VERIFICATION, device_role(dev), time.perf_counter() - t0
            )
            verdict = DeviceVerdict(
                device_id=dev, decommit_ok=decommit_ok, hash_ok=hash_ok
            )
            verdicts[dev] = verdict
            world.emit(
                t, VERIFICATION, device_role(dev), "local", "verdict",
                b"\x01" if verdict.passed else b"\x00",
            )
        for dev in unl:
            if verdicts[dev].passed:
                world.devices[dev].exited = True
                exited.append(dev)

    return RoundResult(
        round_index=t,
        cohort=cohort,
        unlearners=unl,
        aggregate=aggregate,
        delta_w=delta_w,
        verdicts=verdicts,
        exited=tuple(exited),
        model_int=tuple(world.server.model_int),
    )


# ===== offline audit =====


@dataclass(frozen=True)
class RoundAudit:
    round_index: int
    decrypt_match: bool
    has_verification: bool
    decommit_ok: Mapping[int, bool]
    hash_ok: bool | None
    audited_pass: bool | None
    recorded_verdicts: Mapping[int, bool]
    verdicts_match: bool

    @property
    def consistent(self) -> bool:
        return self.decrypt_match and self.verdicts_match


def audit_records(
    params: ProtocolParams, records: Sequence[TranscriptRecord]
) -> list[RoundAudit]:
    """Replay the verification checks of each round from the transcript.

    Recomputes decryption, decommitments, and the hash comparison from the
    recorded wire messages alone and compares the outcome with the recorded
    local verdicts, localizing any tampering to its round.
    """
    by_round: dict[int, list[TranscriptRecord]] = {}
    for rec in records:
        by_round.setdefault(rec.round_index, []).append(rec)
    audits = []
    for rnd in sorted(by_round):
        recs = by_round[rnd]
        agg_rec = _first(recs, "aggregate")
        dec_rec = _first(recs, "decrypted")
        if agg_rec is None or dec_rec is None:
            raise ValueError(f"round {rnd}: missing aggregate or decrypted record")
        recorded_residues = parse_residues_payload(params, dec_rec.payload)
        dim = len(recorded_residues)
        aggregate_ct, flags = parse_aggregate_payload(params, agg_rec.payload, dim)
        residues = paillier.vec_decrypt(params.sk, params.pk, aggregate_ct)
        decrypt_match = residues == recorded_residues
        aggregate = codec.from_ring(residues, params.pk.n, params.fp)

        opening_rec = _first(recs, "openings")
        recorded_verdicts = {
            int(rec.sender.split(":", 1)[1]): rec.payload == b"\x01"
            for rec in recs
            if rec.rtype == "verdict"
        }
        if opening_rec is None:
            audit = RoundAudit(
                round_index=rnd,
                decrypt_match=decrypt_match,
                has_verification=False,
                decommit_ok={},
                hash_ok=None,
                audited_pass=None,
                recorded_verdicts=recorded_verdicts,
                verdicts_match=not recorded_verdicts,
            )
            audits.append(audit)
            continue
        board_rec = _first(recs, "board")
        if board_rec is None:
            raise ValueError(f"round {rnd}: verification phase without a board")
        board = parse_board_payload(params, board_rec.payload)
        openings = parse_opening_board_payload(params, opening_rec.payload)
        decommit_ok = verify_decommitments(params.com_params, board, openings)
        combined = combine_hashes(params.lhh_params, openings, flags)
        hash_ok = verify_unlearning(params, aggregate, combined)
        audited_pass = hash_ok and all(decommit_ok.values())
        verdicts_match = bool(recorded_verdicts) and all(
            v == audited_pass for v in recorded_verdicts.values()
        )
        audits.append(
            RoundAudit(
                round_index=rnd,
                decrypt_match=decrypt_match,
                has_verification=True,
                decommit_ok=decommit_ok,
                hash_ok=hash_ok,
                audited_pass=audited_pass,
                recorded_verdicts=recorded_verdicts,
                verdicts_match=verdicts_match,
            )
        )
    return audits


def _first(records: Sequence[TranscriptRecord], rtype: str) -> TranscriptRecord | None:
    for rec in records:
        if rec.rtype == rtype:
            return rec
    return None
