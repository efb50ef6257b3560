"""Node placement and radio adjacency."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .config import SimConfig


@dataclass
class Topology:
    positions: dict[int, tuple[float, float]]
    adjacency: dict[int, set[int]]
    sink: int
    connected: bool = True
    sink_component: frozenset[int] = field(default_factory=frozenset)

    def neighbors(self, node: int) -> set[int]:
        return self.adjacency[node]


def place_nodes(cfg: SimConfig) -> Topology:
    """Scatter nodes uniformly over the square; link pairs within radio range.

    The sink (query server) is the node nearest the area center. If the
    graph is disconnected the simulation proceeds on the sink's component
    and a warning is recorded by the callers.
    """
    rng = random.Random(cfg.rng_seed)
    positions = {
        i: (rng.uniform(0.0, cfg.area_side), rng.uniform(0.0, cfg.area_side))
        for i in range(cfg.node_count)
    }
    adjacency: dict[int, set[int]] = {i: set() for i in positions}
    limit = cfg.radio_range**2
    nodes = sorted(positions)
    for idx, u in enumerate(nodes):
        ux, uy = positions[u]
        for v in nodes[idx + 1:]:
            vx, vy = positions[v]
            if (ux - vx) ** 2 + (uy - vy) ** 2 <= limit:
                adjacency[u].add(v)
                adjacency[v].add(u)

    center = cfg.area_side / 2.0
    sink = min(
        positions,
        key=lambda n: (math.dist(positions[n], (center, center)), n),
    )
    component = _component_of(adjacency, sink)
    return Topology(
        positions=positions,
        adjacency=adjacency,
        sink=sink,
        connected=len(component) == cfg.node_count,
        sink_component=frozenset(component),
    )


def _component_of(adjacency: dict[int, set[int]], start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        node = stack.pop()
        for nxt in adjacency[node]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def build_routing_tree(topology: Topology, sink: int | None = None) -> dict[int, int]:
    """Breadth-first converge-cast tree on the sink's component.

    Returns child -> parent (the sink has no entry). Ties between equal
    depth parents break to the lowest node id, keeping trees reproducible.
    """
    root = topology.sink if sink is None else sink
    parent: dict[int, int] = {}
    visited = {root}
    frontier = [root]
    while frontier:
        next_frontier = []
        for node in sorted(frontier):
            for nxt in sorted(topology.adjacency[node]):
                if nxt not in visited:
                    visited.add(nxt)
                    parent[nxt] = node
                    next_frontier.append(nxt)
        frontier = next_frontier
    return parent
