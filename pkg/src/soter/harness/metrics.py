"""Traffic counters for a scenario run and their export."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field


@dataclass
class NodeCounters:
    sent: int = 0
    received: int = 0
    bytes_sent: int = 0
    bytes_received: int = 0

    @property
    def bytes(self) -> int:
        return self.bytes_sent + self.bytes_received

    @property
    def datagrams(self) -> int:
        return self.sent + self.received


@dataclass
class ScenarioMetrics:
    """Legitimate traffic per node and per link, plus what any adversary achieved."""

    nodes: dict[str, NodeCounters]
    links: dict[tuple[str, str], int] = field(default_factory=dict)
    rounds: int = 0
    outcome: str = "InProgress"
    delivered: int = 0
    rejected: int = 0
    dropped: int = 0
    # Disclosed credential-state entries in accepted legitimate messages.
    disclosed: int = 0
    adversary_sent: int = 0
    adversary_accepted: int = 0
    tampered_sent: int = 0
    tampered_accepted: int = 0
    leaks: list[str] = field(default_factory=list)

    @classmethod
    def empty(cls, node_order) -> "ScenarioMetrics":
        return cls({n: NodeCounters() for n in node_order})

    def link_count(self, a: str, b: str) -> int:
        return self.links.get(tuple(sorted((a, b))), 0)

    def record(self, src: str, dst: str, size: int) -> None:
        self.nodes[src].sent += 1
        self.nodes[src].bytes_sent += size
        self.nodes[dst].received += 1
        self.nodes[dst].bytes_received += size
        key = tuple(sorted((src, dst)))
        self.links[key] = self.links.get(key, 0) + 1

    def reconciles(self) -> bool:
        per_node = sum(c.datagrams for c in self.nodes.values())
        # Dropped datagrams never reached a receiver and are not counted per node.
        return 2 * sum(self.links.values()) == per_node and sum(self.links.values()) == (
            self.delivered + self.rejected
        )


HEADER = ("node", "sent", "received", "bytes", "rounds", "outcome")


def _rows(m: ScenarioMetrics) -> list[tuple]:
    return [(n, c.sent, c.received, c.bytes, m.rounds, m.outcome) for n, c in m.nodes.items()]


def export_metrics(metrics: ScenarioMetrics, format: str = "delimited") -> str:
    """``delimited``: CSV with a fixed header; ``table``: aligned text for humans."""
    rows = _rows(metrics)
    if format == "delimited":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(HEADER)
        w.writerows(rows)
        return buf.getvalue()
    if format == "table":
        cells = [HEADER] + [tuple(str(x) for x in r) for r in rows]
        widths = [max(len(r[i]) for r in cells) for i in range(len(HEADER))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown metrics format {format!r}")
