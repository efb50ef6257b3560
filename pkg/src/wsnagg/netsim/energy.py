"""Per-node energy ledger."""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import SimConfig

EVENTS = ("tx", "rx", "sense")


@dataclass
class EnergyLedger:
    """Tracks energy spent per node; a drained node stops participating."""

    cfg: SimConfig
    spent: dict[int, float] = field(default_factory=dict)
    events: dict[str, int] = field(default_factory=lambda: {e: 0 for e in EVENTS})

    def remaining(self, node: int) -> float:
        return self.cfg.initial_energy - self.spent.get(node, 0.0)

    def alive(self, node: int) -> bool:
        return self.remaining(node) > 0.0

    def total_spent(self) -> float:
        return sum(self.spent.values())


def account_energy(event: str, node: int, ledger: EnergyLedger) -> None:
    """Deduct one event's energy from the node. Dead nodes spend nothing."""
    if event not in EVENTS:
        raise ValueError(f"unknown energy event {event!r}")
    if not ledger.alive(node):
        return
    cost = {"tx": ledger.cfg.e_tx, "rx": ledger.cfg.e_rx, "sense": ledger.cfg.e_sense}[event]
    ledger.spent[node] = ledger.spent.get(node, 0.0) + cost
    ledger.events[event] += 1
