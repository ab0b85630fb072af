"""Command-line entry points: exit codes, file outputs, seed precedence."""

import json

import pytest

from verfu.cli import EXIT_OK, EXIT_USAGE, EXIT_VERIFY_FAIL, main

CONFIG = {
    "devices": 6,
    "rounds": 3,
    "cohort": 6,
    "unlearn_rate": 1 / 6,
    "cadence": 3,
    "scale_bits": 8,
    "kappa_paillier": 64,
    "kappa_group": 64,
    "workload": {"kind": "frozen", "dim": 3, "magnitude": 0.5},
}


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(CONFIG))
    return path


def run_cli(*argv):
    return main([str(a) for a in argv])


class TestKeygen:
    def test_writes_key_files(self, tmp_path, config_path):
        out = tmp_path / "keys"
        assert run_cli("keygen", "--config", config_path, "--out", out) == EXIT_OK
        names = {p.name for p in out.iterdir()}
        assert {"group.json", "paillier.json", "lhh.json",
                "commitment.json"} <= names
        assert "trapdoor.json" not in names

    def test_emit_trapdoor(self, tmp_path, config_path):
        out = tmp_path / "keys"
        run_cli("keygen", "--config", config_path, "--out", out,
                "--emit-trapdoor")
        assert (out / "trapdoor.json").exists()

    def test_deterministic(self, tmp_path, config_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_cli("keygen", "--config", config_path, "--out", a, "--seed", "3")
        run_cli("keygen", "--config", config_path, "--out", b, "--seed", "3")
        for name in ("group.json", "paillier.json", "lhh.json",
                     "commitment.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()


class TestRun:
    def test_honest_run(self, tmp_path, config_path):
        out = tmp_path / "out"
        assert run_cli("run", "--config", config_path, "--out", out) == EXIT_OK
        assert (out / "transcript.jsonl").exists()
        assert (out / "metrics.csv").exists()

    def test_adversarial_run_fails(self, tmp_path, config_path):
        out = tmp_path / "out"
        code = run_cli("run", "--config", config_path, "--out", out,
                       "--behavior", "skip_unlearn")
        assert code == EXIT_VERIFY_FAIL

    def test_consistent_forgery_needs_stored_trapdoor(self, tmp_path,
                                                      config_path, capsys):
        # keys loaded from disk without trapdoor.json cannot equivocate
        keys = tmp_path / "keys"
        run_cli("keygen", "--config", config_path, "--out", keys)
        code = run_cli("run", "--config", config_path, "--out", tmp_path / "o",
                       "--keys", keys, "--behavior", "equivocate_consistent")
        assert code == EXIT_USAGE
        assert "--emit-trapdoor" in capsys.readouterr().err

    def test_consistent_forgery_with_keys_passes(self, tmp_path, config_path):
        keys = tmp_path / "keys"
        run_cli("keygen", "--config", config_path, "--out", keys,
                "--emit-trapdoor")
        code = run_cli("run", "--config", config_path, "--out", tmp_path / "o",
                       "--keys", keys, "--behavior", "equivocate_consistent")
        assert code == EXIT_OK

    def test_unknown_behavior(self, tmp_path, config_path):
        code = run_cli("run", "--config", config_path, "--out", tmp_path / "o",
                       "--behavior", "nonsense")
        assert code == EXIT_USAGE

    def test_reruns_are_byte_identical(self, tmp_path, config_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_cli("run", "--config", config_path, "--out", a, "--seed", "11")
        run_cli("run", "--config", config_path, "--out", b, "--seed", "11")
        assert (a / "transcript.jsonl").read_bytes() == \
            (b / "transcript.jsonl").read_bytes()

    def test_logistic_run_writes_utility(self, tmp_path):
        cfg = dict(CONFIG)
        cfg["workload"] = {"kind": "logistic", "features": 8, "classes": 2,
                           "samples_per_device": 8}
        cfg["bound"] = 4.0
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg))
        out = tmp_path / "out"
        assert run_cli("run", "--config", path, "--out", out) == EXIT_OK
        header = (out / "utility.csv").read_text().splitlines()[0]
        assert header == "round,accuracy,loss"


class TestSeedPrecedence:
    def test_env_seed_used(self, tmp_path, config_path, monkeypatch):
        monkeypatch.setenv("VERFU_SEED", "21")
        a, b = tmp_path / "a", tmp_path / "b"
        run_cli("run", "--config", config_path, "--out", a)
        monkeypatch.delenv("VERFU_SEED")
        run_cli("run", "--config", config_path, "--out", b, "--seed", "21")
        assert (a / "transcript.jsonl").read_bytes() == \
            (b / "transcript.jsonl").read_bytes()

    def test_flag_beats_env(self, tmp_path, config_path, monkeypatch):
        monkeypatch.setenv("VERFU_SEED", "21")
        a, b = tmp_path / "a", tmp_path / "b"
        run_cli("run", "--config", config_path, "--out", a, "--seed", "5")
        monkeypatch.delenv("VERFU_SEED")
        run_cli("run", "--config", config_path, "--out", b, "--seed", "5")
        assert (a / "transcript.jsonl").read_bytes() == \
            (b / "transcript.jsonl").read_bytes()

    def test_bad_env_seed(self, tmp_path, config_path, monkeypatch):
        monkeypatch.setenv("VERFU_SEED", "not-a-number")
        code = run_cli("run", "--config", config_path, "--out", tmp_path / "o")
        assert code == EXIT_USAGE


class TestConfigValidation:
    def test_unknown_campaign_key(self, tmp_path, capsys):
        cfg = dict(CONFIG)
        cfg["cohort_sz"] = 4
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg))
        assert run_cli("run", "--config", path, "--out", tmp_path / "o") == EXIT_USAGE
        assert "cohort_sz" in capsys.readouterr().err

    def test_unknown_workload_key(self, tmp_path, capsys):
        cfg = dict(CONFIG)
        cfg["workload"] = {"kind": "frozen", "dims": 3}
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg))
        assert run_cli("run", "--config", path, "--out", tmp_path / "o") == EXIT_USAGE
        assert "dims" in capsys.readouterr().err

    def test_unknown_workload_kind(self, tmp_path):
        cfg = dict(CONFIG)
        cfg["workload"] = {"kind": "mystery"}
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg))
        assert run_cli("run", "--config", path, "--out", tmp_path / "o") == EXIT_USAGE

    def test_missing_config_file(self, tmp_path):
        code = run_cli("run", "--config", tmp_path / "absent.json",
                       "--out", tmp_path / "o")
        assert code == EXIT_USAGE


class TestAudit:
    def test_honest_transcript_audits_clean(self, tmp_path, config_path):
        out = tmp_path / "out"
        run_cli("run", "--config", config_path, "--out", out)
        code = run_cli("audit", "--config", config_path, "--out", out,
                       "--transcript", out / "transcript.jsonl")
        assert code == EXIT_OK

    def test_corrupted_transcript_detected(self, tmp_path, config_path, capsys):
        out = tmp_path / "out"
        run_cli("run", "--config", config_path, "--out", out)
        t = out / "transcript.jsonl"
        lines = t.read_text().splitlines()
        for i, line in enumerate(lines):
            rec = json.loads(line)
            if rec["type"] == "aggregate":
                payload = bytearray(bytes.fromhex(rec["payload_hex"]))
                payload[0] ^= 1
                rec["payload_hex"] = bytes(payload).hex()
                lines[i] = json.dumps(rec, sort_keys=True,
                                      separators=(",", ":"))
                break
        t.write_text("\n".join(lines) + "\n")
        code = run_cli("audit", "--config", config_path, "--out", out,
                       "--transcript", t)
        assert code == EXIT_VERIFY_FAIL
        assert "MISMATCH" in capsys.readouterr().out


class TestBench:
    def test_bench_writes_csv(self, tmp_path):
        out = tmp_path / "bench"
        code = run_cli("bench", "--out", out, "--rates", "0,0.2",
                       "--dims", "3", "--paillier-bits", "64",
                       "--group-bits", "64", "--devices", "12",
                       "--rounds", "3", "--cohort", "4", "--cadence", "3",
                       "--seed", "1")
        assert code == EXIT_OK
        header = (out / "bench.csv").read_text().splitlines()[0]
        assert header == ("unlearn_rate,dim,paillier_bits,role,phase,"
                          "total_bytes,total_time_ms")
