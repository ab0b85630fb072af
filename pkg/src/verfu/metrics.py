"""Communication and compute accounting per round, phase, and role.

Byte counts come from the exact serialized payload lengths the engine puts
on the wire, so they are assertable; cpu timings are wall-clock observations
and are reported only, never asserted. Broadcasts are charged once per
logical recipient.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

PREPARATION = "preparation"
AGGREGATION = "aggregation_unlearning"
VERIFICATION = "verification"

PHASES = (PREPARATION, AGGREGATION, VERIFICATION)

SERVER = "server"


def device_role(device_id: int) -> str:
    return f"device:{device_id}"


@dataclass
class _Cell:
    bytes_sent: int = 0
    bytes_received: int = 0
    cpu_seconds: float = 0.0


@dataclass
class MetricsLedger:
    """Accumulates (round, phase, role) cells for one campaign."""

    cells: dict[tuple[int, str, str], _Cell] = field(default_factory=dict)

    def _cell(self, round_index: int, phase: str, role: str) -> _Cell:
        key = (round_index, phase, role)
        cell = self.cells.get(key)
        if cell is None:
            cell = self.cells[key] = _Cell()
        return cell

    def record_message(
        self, round_index: int, phase: str, sender: str, receiver: str, nbytes: int
    ) -> None:
        """Charge one wire message to sender (sent) and receiver (received)."""
        self._cell(round_index, phase, sender).bytes_sent += nbytes
        self._cell(round_index, phase, receiver).bytes_received += nbytes

    def record_cpu(
        self, round_index: int, phase: str, role: str, seconds: float
    ) -> None:
        self._cell(round_index, phase, role).cpu_seconds += seconds

    # ----- queries -----

    def phase_totals(self, phase: str) -> tuple[int, int]:
        """(total sent, total received) across all roles for a phase."""
        sent = recv = 0
        for (_, ph, _), cell in self.cells.items():
            if ph == phase:
                sent += cell.bytes_sent
                recv += cell.bytes_received
        return sent, recv

    def per_device_sent(self, phase: str) -> dict[int, int]:
        """Bytes each device sent in a phase, summed across rounds."""
        out: dict[int, int] = {}
        for (_, ph, role), cell in self.cells.items():
            if ph == phase and role.startswith("device:"):
                dev = int(role.split(":", 1)[1])
                out[dev] = out.get(dev, 0) + cell.bytes_sent
        return out

    def per_device_round_sent(self, phase: str) -> dict[tuple[int, int], int]:
        """Bytes each device sent in a phase, keyed by (round, device)."""
        out: dict[tuple[int, int], int] = {}
        for (rnd, ph, role), cell in self.cells.items():
            if ph == phase and role.startswith("device:"):
                dev = int(role.split(":", 1)[1])
                out[(rnd, dev)] = out.get((rnd, dev), 0) + cell.bytes_sent
        return out

    def rows(self) -> list[dict]:
        """Sorted per-(round, phase, role) rows."""
        order = {ph: i for i, ph in enumerate(PHASES)}
        out = []
        for (rnd, phase, role) in sorted(
            self.cells, key=lambda k: (k[0], order[k[1]], k[2] != SERVER, k[2])
        ):
            cell = self.cells[(rnd, phase, role)]
            out.append(
                {
                    "round": rnd,
                    "phase": phase,
                    "role": role,
                    "bytes_sent": cell.bytes_sent,
                    "bytes_received": cell.bytes_received,
                    "cpu_ms": cell.cpu_seconds * 1000.0,
                }
            )
        return out


def summarize(ledger: MetricsLedger, unlearn_rate: float) -> list[dict]:
    """Phase/role overview rows.

    The 'device' row reports the worst single device (max bytes sent and max
    cpu over devices, per phase), the per-device overhead figure; 'server'
    reports the server's totals.
    """
    out = []
    for phase in PHASES:
        dev_sent: dict[str, int] = {}
        dev_cpu: dict[str, float] = {}
        server_sent = 0
        server_cpu = 0.0
        for (_, ph, role), cell in ledger.cells.items():
            if ph != phase:
                continue
            if role == SERVER:
                server_sent += cell.bytes_sent
                server_cpu += cell.cpu_seconds
            else:
                dev_sent[role] = dev_sent.get(role, 0) + cell.bytes_sent
                dev_cpu[role] = dev_cpu.get(role, 0.0) + cell.cpu_seconds
        out.append(
            {
                "unlearn_rate": unlearn_rate,
                "role": "device",
                "phase": phase,
                "total_bytes": max(dev_sent.values(), default=0),
                "total_time_ms": max(dev_cpu.values(), default=0.0) * 1000.0,
            }
        )
        out.append(
            {
                "unlearn_rate": unlearn_rate,
                "role": "server",
                "phase": phase,
                "total_bytes": server_sent,
                "total_time_ms": server_cpu * 1000.0,
            }
        )
    return out


def write_csv(ledger: MetricsLedger, path: str, unlearn_rate: float) -> None:
    """Per-(round, phase, role) CSV; cpu_ms is the only nondeterministic column."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "unlearn_rate",
                "round",
                "phase",
                "role",
                "bytes_sent",
                "bytes_received",
                "cpu_ms",
            ]
        )
        for row in ledger.rows():
            writer.writerow(
                [
                    unlearn_rate,
                    row["round"],
                    row["phase"],
                    row["role"],
                    row["bytes_sent"],
                    row["bytes_received"],
                    f"{row['cpu_ms']:.3f}",
                ]
            )
