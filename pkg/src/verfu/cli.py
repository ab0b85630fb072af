"""Command line front end: key generation, campaign runs, transcript audit,
and a cost benchmark sweep.

Exit codes: 0 all verification checks passed, 1 a verification check failed
(or an audit found an inconsistency), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import adversary, metrics, protocol, simtrain
from .algebra import GroupDesc, seeded_rng, validate_group
from .commitment import ComParams, Trapdoor
from .errors import ConfigError, VerfuError
from .lhh import LhhParams
from .paillier import PaillierPublicKey, PaillierSecretKey
from .simtrain import Campaign

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_USAGE = 2

SEED_ENV = "VERFU_SEED"

_CAMPAIGN_KEYS = {
    "devices": "devices",
    "rounds": "rounds",
    "cohort": "cohort_size",
    "unlearn_rate": "unlearn_rate",
    "cadence": "cadence",
    "epochs": "epochs",
    "lr": "lr",
    "scale_bits": "scale_bits",
    "bound": "bound",
    "kappa_paillier": "paillier_bits",
    "kappa_group": "group_q_bits",
    "seed": "seed",
    "behavior": "behavior",
}

_WORKLOAD_KEYS = {
    "frozen": {"kind", "dim", "magnitude"},
    "logistic": {
        "kind",
        "features",
        "classes",
        "samples_per_device",
        "test_samples",
        "separation",
        "alpha",
    },
}


# ===== config handling =====


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return cfg


def resolve_seed(cli_seed: int | None, cfg: dict) -> int:
    """Flag wins over the environment, environment over the config file."""
    if cli_seed is not None:
        return cli_seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}")
    if "seed" in cfg:
        return int(cfg["seed"])
    return 0


def campaign_from_config(
    cfg: dict, seed: int, behavior_override: str | None
) -> Campaign:
    unknown = set(cfg) - set(_CAMPAIGN_KEYS) - {"workload"}
    if unknown:
        raise ConfigError(f"unknown config key: {sorted(unknown)[0]}")
    fields = {}
    for key, attr in _CAMPAIGN_KEYS.items():
        if key in cfg:
            fields[attr] = cfg[key]
    fields["seed"] = seed
    if behavior_override is not None:
        fields["behavior"] = behavior_override
    try:
        campaign = Campaign(**fields)
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}")
    simtrain.validate_campaign(campaign)
    return campaign


def workload_dim(cfg: dict) -> int:
    wl = _workload_cfg(cfg)
    if wl["kind"] == "frozen":
        return int(wl.get("dim", 16))
    return int(wl.get("classes", 2)) * (int(wl.get("features", 8)) + 1)


def _workload_cfg(cfg: dict) -> dict:
    wl = dict(cfg.get("workload", {}))
    if not isinstance(wl, dict):
        raise ConfigError("workload config must be a JSON object")
    kind = wl.setdefault("kind", "frozen")
    allowed = _WORKLOAD_KEYS.get(kind)
    if allowed is None:
        raise ConfigError(f"unknown workload kind: {kind!r}")
    unknown = set(wl) - allowed
    if unknown:
        raise ConfigError(f"unknown workload key: {sorted(unknown)[0]}")
    return wl


def build_workload(campaign: Campaign, cfg: dict):
    wl = _workload_cfg(cfg)
    sub_seed = seeded_rng(campaign.seed, "workload").getrandbits(63)
    if wl["kind"] == "frozen":
        return simtrain.frozen_random(
            devices=campaign.devices,
            rounds=campaign.rounds,
            dim=int(wl.get("dim", 16)),
            magnitude=float(wl.get("magnitude", 0.5)),
            seed=sub_seed,
        )
    return simtrain.synthetic_logistic(
        devices=campaign.devices,
        features=int(wl.get("features", 8)),
        classes=int(wl.get("classes", 2)),
        samples_per_device=int(wl.get("samples_per_device", 32)),
        test_samples=int(wl.get("test_samples", 400)),
        separation=float(wl.get("separation", 2.0)),
        alpha=float(wl.get("alpha", simtrain.DEFAULT_ALPHA)),
        seed=sub_seed,
    )


# ===== key file I/O =====

KEY_FILES = ("group.json", "paillier.json", "lhh.json", "commitment.json")
TRAPDOOR_FILE = "trapdoor.json"


def _dump(path: Path, obj: dict) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _load(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"key file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"key file {path} is not valid JSON: {exc}")


def write_keys(
    out_dir: str,
    params: protocol.ProtocolParams,
    trapdoor: Trapdoor | None = None,
) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    group = params.group
    written = []
    files = {
        "group.json": {
            "p": format(group.p_mod, "x"),
            "q": format(group.q_order, "x"),
            "seed": group.seed.hex(),
        },
        "paillier.json": {
            "n": format(params.pk.n, "x"),
            "lambda": format(params.sk.lam, "x"),
            "mu": format(params.sk.mu, "x"),
            "p": format(params.sk.p, "x"),
            "q": format(params.sk.q, "x"),
        },
        "lhh.json": {
            "generators": [format(g, "x") for g in params.lhh_params.generators]
        },
        "commitment.json": {
            "g": format(params.com_params.g_com, "x"),
            "h": format(params.com_params.h_com, "x"),
        },
    }
    if trapdoor is not None:
        files[TRAPDOOR_FILE] = {"alpha": format(trapdoor.alpha, "x")}
    for name, obj in files.items():
        path = out / name
        _dump(path, obj)
        written.append(path)
    return written


def load_keys(
    keys_dir: str, fp
) -> tuple[protocol.ProtocolParams, Trapdoor | None]:
    keys = Path(keys_dir)
    g = _load(keys / "group.json")
    group = GroupDesc(
        p_mod=int(g["p"], 16), q_order=int(g["q"], 16), seed=bytes.fromhex(g["seed"])
    )
    validate_group(group, seeded_rng(group.seed, "key-file-check"))
    pj = _load(keys / "paillier.json")
    pk = PaillierPublicKey(int(pj["n"], 16))
    sk = PaillierSecretKey(
        lam=int(pj["lambda"], 16),
        mu=int(pj["mu"], 16),
        p=int(pj["p"], 16),
        q=int(pj["q"], 16),
    )
    lj = _load(keys / "lhh.json")
    lhh_params = LhhParams(
        group=group, generators=tuple(int(s, 16) for s in lj["generators"])
    )
    cj = _load(keys / "commitment.json")
    com_params = ComParams(group=group, g_com=int(cj["g"], 16), h_com=int(cj["h"], 16))
    fp.validate_modulus(pk.n)
    fp.validate_modulus(group.q_order)
    params = protocol.ProtocolParams(
        lhh_params=lhh_params, com_params=com_params, pk=pk, sk=sk, fp=fp
    )
    trapdoor = None
    td_path = keys / TRAPDOOR_FILE
    if td_path.exists():
        tj = _load(td_path)
        trapdoor = Trapdoor(alpha=int(tj["alpha"], 16), params=com_params)
    return params, trapdoor


def keys_present(keys_dir: str) -> bool:
    keys = Path(keys_dir)
    return all((keys / name).exists() for name in KEY_FILES)


# ===== subcommands =====


def cmd_keygen(args) -> int:
    cfg = load_config(args.config)
    seed = resolve_seed(args.seed, cfg)
    campaign = campaign_from_config(cfg, seed, None)
    dim = workload_dim(cfg)
    params, trapdoor = simtrain.build_protocol(campaign, dim)
    written = write_keys(
        args.out, params, trapdoor if args.emit_trapdoor else None
    )
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _resolve_params(args, campaign: Campaign, dim: int):
    """Load keys from --keys when present, else derive them from the seed."""
    keys_dir = args.keys or args.out
    if keys_dir and keys_present(keys_dir):
        return load_keys(keys_dir, campaign.fp_spec())
    return simtrain.build_protocol(campaign, dim)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    seed = resolve_seed(args.seed, cfg)
    campaign = campaign_from_config(cfg, seed, args.behavior)
    workload = build_workload(campaign, cfg)
    params, trapdoor = _resolve_params(args, campaign, workload.dim)
    behavior = adversary.parse_behavior(campaign.behavior)
    needs_trapdoor = isinstance(behavior, adversary.EquivocateWithTrapdoor)
    if needs_trapdoor and trapdoor is None:
        raise ConfigError(
            f"behavior {campaign.behavior!r} needs the commitment trapdoor; "
            f"generate keys with `verfu keygen --emit-trapdoor`"
        )
    result = simtrain.run_campaign(
        campaign,
        workload,
        behavior=behavior,
        trapdoor=trapdoor if needs_trapdoor else None,
        strict=args.strict,
        params=params,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    protocol.transcript_to_file(result.transcript, str(out / "transcript.jsonl"))
    metrics.write_csv(
        result.ledger, str(out / "metrics.csv"), campaign.unlearn_rate
    )
    with open(out / "utility.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "accuracy", "loss"])
        for point in result.utility:
            writer.writerow(
                [point.round_index, f"{point.accuracy:.6f}", f"{point.loss:.6f}"]
            )
    failed = [r.round_index for r in result.rounds if not r.all_verified]
    verified_rounds = len(result.rounds) - len(failed)
    print(f"rounds run: {len(result.rounds)}/{campaign.rounds}")
    print(f"rounds verified: {verified_rounds}/{len(result.rounds)}")
    if failed:
        print(f"verification failed in rounds: {failed}")
    if result.aborted:
        print("campaign aborted at first failure (--strict)")
    print(f"outputs in {out}")
    return EXIT_OK if result.all_verified else EXIT_VERIFY_FAIL


def cmd_audit(args) -> int:
    cfg = load_config(args.config)
    seed = resolve_seed(args.seed, cfg)
    campaign = campaign_from_config(cfg, seed, None)
    transcript_path = args.transcript or str(Path(args.out) / "transcript.jsonl")
    if not Path(transcript_path).exists():
        raise ConfigError(f"transcript not found: {transcript_path}")
    params, _ = _resolve_params(args, campaign, workload_dim(cfg))
    records = protocol.transcript_from_file(transcript_path)
    audits = protocol.audit_records(params, records)
    clean = True
    for audit in audits:
        parts = [f"decrypt={'ok' if audit.decrypt_match else 'MISMATCH'}"]
        if audit.has_verification:
            parts.append(f"audited={'pass' if audit.audited_pass else 'fail'}")
        parts.append(
            f"verdicts={'consistent' if audit.verdicts_match else 'INCONSISTENT'}"
        )
        print(f"round {audit.round_index}: " + " ".join(parts))
        clean = clean and audit.consistent
    print(f"audit: {'consistent' if clean else 'INCONSISTENT'} "
          f"({len(audits)} rounds)")
    return EXIT_OK if clean else EXIT_VERIFY_FAIL


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def cmd_bench(args) -> int:
    rates = _float_list(args.rates)
    dims = _int_list(args.dims)
    bits_list = _int_list(args.paillier_bits)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for bits in bits_list:
        for dim in dims:
            for rate in rates:
                campaign = Campaign(
                    devices=args.devices,
                    rounds=args.rounds,
                    cohort_size=args.cohort,
                    unlearn_rate=rate,
                    cadence=args.cadence,
                    paillier_bits=bits,
                    group_q_bits=args.group_bits,
                    seed=resolve_seed(args.seed, {}),
                )
                sub_seed = seeded_rng(campaign.seed, "workload").getrandbits(63)
                workload = simtrain.frozen_random(
                    campaign.devices, campaign.rounds, dim, 0.5, sub_seed
                )
                result = simtrain.run_campaign(campaign, workload)
                for row in metrics.summarize(result.ledger, rate):
                    row["dim"] = dim
                    row["paillier_bits"] = bits
                    rows.append(row)
                print(
                    f"bench: rate={rate} dim={dim} paillier={bits} bits -> "
                    f"{len(result.rounds)} rounds"
                )
    path = out / "bench.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["unlearn_rate", "dim", "paillier_bits", "role", "phase",
             "total_bytes", "total_time_ms"]
        )
        for row in rows:
            writer.writerow(
                [row["unlearn_rate"], row["dim"], row["paillier_bits"],
                 row["role"], row["phase"], row["total_bytes"],
                 f"{row['total_time_ms']:.3f}"]
            )
    print(f"wrote {path}")
    return EXIT_OK


# ===== argument parsing =====


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="verfu",
        description="Verifiable federated unlearning simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, keys=True):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help=f"master seed (beats {SEED_ENV})")
        p.add_argument("--out", default="out", help="output directory")
        if keys:
            p.add_argument(
                "--keys", help="directory with key files (default: --out)"
            )

    p = sub.add_parser("keygen", help="derive and write key files")
    common(p, keys=False)
    p.add_argument(
        "--emit-trapdoor",
        action="store_true",
        help="also write the commitment trapdoor (negative controls only)",
    )
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("run", help="run a campaign and write its transcript")
    common(p)
    p.add_argument("--behavior", help="server behavior, e.g. skip_unlearn")
    p.add_argument(
        "--strict", action="store_true", help="abort at the first failed round"
    )
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("audit", help="re-verify a recorded transcript")
    common(p)
    p.add_argument("--transcript", help="transcript path (default: OUT/transcript.jsonl)")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("bench", help="sweep communication costs into bench.csv")
    p.add_argument("--rates", default="0,0.1,0.2,0.4")
    p.add_argument("--dims", default="16")
    p.add_argument("--paillier-bits", default="256")
    p.add_argument("--devices", type=int, default=40)
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--cohort", type=int, default=8)
    p.add_argument("--cadence", type=int, default=5)
    p.add_argument("--group-bits", type=int, default=256)
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VerfuError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
