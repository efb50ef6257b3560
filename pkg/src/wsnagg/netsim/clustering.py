"""Cluster formation by flooding from the query server.

The sink starts a HELLO flood. On first contact with the flood a node
elects itself cluster leader with probability p_c; a leader immediately
broadcasts its own HELLO, starting a new cluster. A non-leader waits one
round and joins the first leader it heard directly, falling back to the
cluster of the earliest membership announcement when no leader is in
range; announcing the join with the broadcast that also carries the
node's public seed. Equally early candidates are spread by a
deterministic per-pair hash so that clumped same-round leaders all
attract members instead of the lowest id taking everything. Because join
announcements extend the flood, every node in the sink's component ends
up a leader or a member; no re-election escalation is needed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable

from .topology import Topology

HELLO = "hello"
JOIN = "join"


def _spread(node: int, sender: int) -> int:
    """Deterministic tie-break mixing both ids (Knuth multiplicative hash)."""
    return ((sender * 2654435761) ^ (node * 40503)) & 0xFFFFFFFF


@dataclass
class ClusterAssignment:
    leader_of: dict[int, int]
    leaders: set[int]
    message_log: list[tuple[int, int, str]] = field(default_factory=list)

    def members_of(self, leader: int) -> list[int]:
        return sorted(n for n, ld in self.leader_of.items() if ld == leader)

    def clusters(self) -> dict[int, list[int]]:
        """leader -> sorted member list (leader first)."""
        out: dict[int, list[int]] = {ld: [ld] for ld in self.leaders}
        for node, ld in sorted(self.leader_of.items()):
            if node != ld:
                out[ld].append(node)
        return out


def form_clusters(
    topology: Topology,
    p_c: float,
    seed: int,
    election: Callable[[int], bool] | None = None,
) -> ClusterAssignment:
    """Run the formation flood until every reachable node is assigned.

    ``election`` overrides the coin flip (used to reproduce hand-built
    cluster layouts); by default a node elects with probability p_c from
    a dedicated generator. The sink is always a leader and flips no coin.
    """
    rng = random.Random(seed)
    sink = topology.sink

    def elects(node: int) -> bool:
        if election is not None:
            return election(node)
        return rng.random() < p_c

    leader_of: dict[int, int] = {sink: sink}
    leaders = {sink}
    log: list[tuple[int, int, str]] = []
    # best_heard[node] = (0 for direct HELLO else 1, round, spread, cluster)
    best_heard: dict[int, tuple[int, int, int, int]] = {}
    decided = {sink}
    pending_join: dict[int, int] = {}  # node -> round it will announce

    sends: list[tuple[int, int, str, int]] = [(0, sink, HELLO, sink)]
    log.append((0, sink, HELLO))
    round_no = 0
    while sends or pending_join:
        round_no += 1
        delivered = [s for s in sends if s[0] == round_no - 1]
        sends = [s for s in sends if s[0] != round_no - 1]

        # Deliveries: track the best join candidate each node has heard.
        for _, sender, kind, cluster in sorted(delivered, key=lambda s: s[1]):
            priority = 0 if kind == HELLO else 1
            for nbr in sorted(topology.adjacency[sender]):
                candidate = (priority, round_no, _spread(nbr, sender), cluster)
                if nbr not in best_heard or candidate < best_heard[nbr]:
                    best_heard[nbr] = candidate

        # First-contact nodes flip their coin now.
        for node in sorted(best_heard):
            if node in decided:
                continue
            decided.add(node)
            if elects(node):
                leader_of[node] = node
                leaders.add(node)
                log.append((round_no, node, HELLO))
                sends.append((round_no, node, HELLO, node))
            else:
                pending_join[node] = round_no + 1

        # Waited-one-round nodes pick the best candidate heard so far.
        for node in sorted(n for n, r in pending_join.items() if r == round_no):
            del pending_join[node]
            cluster = best_heard[node][3]
            leader_of[node] = cluster
            log.append((round_no, node, JOIN))
            sends.append((round_no, node, JOIN, cluster))

    return ClusterAssignment(leader_of=leader_of, leaders=leaders, message_log=log)
