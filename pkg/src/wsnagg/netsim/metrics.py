"""Message, operation, energy and detection accounting."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..cpda import OpCounters
from .energy import EnergyLedger


@dataclass
class Metrics:
    """Network-level accounting for one simulation run.

    ``sent[type][node]`` counts logical messages; ``intended``/
    ``received``/``lost`` count per-recipient packet deliveries, so
    delivery_ratio = received / intended and conservation
    received + lost == intended holds per type.
    """

    seed: int
    mode: str
    node_count: int
    sink: int
    sent: dict[str, dict[int, int]] = field(default_factory=dict)
    intended: dict[str, int] = field(default_factory=dict)
    received: dict[str, int] = field(default_factory=dict)
    lost: dict[str, int] = field(default_factory=dict)
    op_counters: OpCounters = field(default_factory=OpCounters)
    energy: EnergyLedger | None = None
    sink_aggregate: int | None = None
    true_aggregate: int | None = None
    warnings: list[str] = field(default_factory=list)
    plaintext_clusters: int = 0
    aborted_clusters: int = 0
    cluster_sizes: list[int] = field(default_factory=list)
    participants: frozenset[int] = frozenset()

    def count_send(self, msg_type: str, node: int) -> None:
        per_node = self.sent.setdefault(msg_type, {})
        per_node[node] = per_node.get(node, 0) + 1

    def count_delivery(self, msg_type: str, delivered: bool) -> None:
        self.intended[msg_type] = self.intended.get(msg_type, 0) + 1
        if delivered:
            self.received[msg_type] = self.received.get(msg_type, 0) + 1
        else:
            self.lost[msg_type] = self.lost.get(msg_type, 0) + 1

    def messages_sent_by(self, node: int) -> int:
        return sum(per_node.get(node, 0) for per_node in self.sent.values())

    def avg_messages_per_node(self) -> float:
        """Average counted messages per participating sensor node.

        The sink is excluded (the query server is not a sensor), as are
        nodes outside the sink's component, which never take part in the
        run at all.
        """
        pool = self.participants or frozenset(range(self.node_count))
        sensors = [n for n in pool if n != self.sink]
        if not sensors:
            return 0.0
        return sum(self.messages_sent_by(n) for n in sensors) / len(sensors)

    def delivery_ratio(self) -> float:
        total = sum(self.intended.values())
        if total == 0:
            return 1.0
        return sum(self.received.values()) / total

    def energy_spent(self) -> float:
        return self.energy.total_spent() if self.energy is not None else 0.0

    def fingerprint(self) -> str:
        """Stable serialization for determinism checks."""
        parts = [
            f"seed={self.seed}", f"mode={self.mode}",
            f"sink={self.sink}", f"agg={self.sink_aggregate}",
            f"true={self.true_aggregate}",
            f"plaintext={self.plaintext_clusters}",
            f"aborted={self.aborted_clusters}",
            f"sizes={sorted(self.cluster_sizes)}",
            f"energy={self.energy_spent()!r}",
            f"ratio={self.delivery_ratio()!r}",
        ]
        for kind in sorted(self.sent):
            per_node = self.sent[kind]
            parts.append(f"sent[{kind}]={sorted(per_node.items())}")
        for name, table in (("intended", self.intended), ("received", self.received),
                            ("lost", self.lost)):
            parts.append(f"{name}={sorted(table.items())}")
        parts.append(f"ops={sorted(self.op_counters.as_dict().items())}")
        return "|".join(parts)


@dataclass
class DetectionMetrics:
    """Outcome of the fault-detection experiment (counts partition the node set)."""

    true_positive: int = 0
    false_positive: int = 0
    true_negative: int = 0
    false_negative: int = 0
    energy_with_security: float = 0.0
    energy_without_security: float = 0.0
    delivery_ratio_with: float = 1.0
    delivery_ratio_without: float = 1.0

    @property
    def detection_rate(self) -> float:
        faulty = self.true_positive + self.false_negative
        return self.true_positive / faulty if faulty else 1.0

    @property
    def fp_rate(self) -> float:
        honest = self.false_positive + self.true_negative
        return self.false_positive / honest if honest else 0.0

    @property
    def fn_rate(self) -> float:
        faulty = self.true_positive + self.false_negative
        return self.false_negative / faulty if faulty else 0.0

    @property
    def energy_increase_ratio(self) -> float:
        if self.energy_without_security == 0.0:
            return 0.0
        return (
            (self.energy_with_security - self.energy_without_security)
            / self.energy_without_security
        )
