"""Privacy-preserving, client-verifiable federated unlearning toolkit.

Building blocks: additively homomorphic encryption for gradient aggregation,
a linear homomorphic hash plus equivocal commitments for client-side
verification of removal, a deterministic multi-party simulator, and metrics
accounting of the per-phase communication cost.
"""

from .algebra import GroupDesc, group_setup, seeded_rng
from .codec import EncodedVector, FixedPointSpec, decode, encode, from_ring, to_ring
from .commitment import (
    ComParams,
    Opening,
    Trapdoor,
    com_setup,
    commit,
    decommit,
    encode_message,
    equivocate,
)
from .errors import VerfuError
from .lhh import IDENTITY_DIGEST, LhhParams, lhh_eval, lhh_hash, lhh_setup
from .metrics import MetricsLedger, summarize
from .paillier import (
    Ciphertext,
    CiphertextVector,
    PaillierPublicKey,
    PaillierSecretKey,
    ct_add,
    ct_scale,
    ct_sub,
    decrypt,
    encrypt,
    keygen,
    vec_add,
    vec_decrypt,
    vec_encrypt,
    vec_sub,
)
from .protocol import (
    ProtocolParams,
    RoundResult,
    World,
    audit_records,
    new_world,
    run_round,
    setup_protocol,
)
from .simtrain import (
    Campaign,
    CampaignResult,
    build_schedule,
    frozen_random,
    recovery_report,
    recovery_rounds,
    retrain_oracle,
    run_campaign,
    synthetic_logistic,
)

__version__ = "0.1.0"

__all__ = [
    "Campaign",
    "CampaignResult",
    "Ciphertext",
    "CiphertextVector",
    "ComParams",
    "EncodedVector",
    "FixedPointSpec",
    "GroupDesc",
    "IDENTITY_DIGEST",
    "LhhParams",
    "MetricsLedger",
    "Opening",
    "PaillierPublicKey",
    "PaillierSecretKey",
    "ProtocolParams",
    "RoundResult",
    "Trapdoor",
    "VerfuError",
    "World",
    "audit_records",
    "build_schedule",
    "com_setup",
    "commit",
    "ct_add",
    "ct_scale",
    "ct_sub",
    "decode",
    "decommit",
    "decrypt",
    "encode",
    "encode_message",
    "encrypt",
    "equivocate",
    "from_ring",
    "frozen_random",
    "group_setup",
    "keygen",
    "lhh_eval",
    "lhh_hash",
    "lhh_setup",
    "new_world",
    "recovery_report",
    "recovery_rounds",
    "retrain_oracle",
    "run_campaign",
    "run_round",
    "seeded_rng",
    "setup_protocol",
    "summarize",
    "synthetic_logistic",
    "to_ring",
    "vec_add",
    "vec_decrypt",
    "vec_encrypt",
    "vec_sub",
    "__version__",
]
