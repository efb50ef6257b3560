"""Random key predistribution: key pools, key rings, secure-link discovery.

Every node draws a ring of ``k`` keys from a global pool of ``K``. Radio
neighbors sharing at least one key get a direct secure link; neighbors
without a shared key but connected through a multi-hop chain of direct
links are assigned a synthetic path key. Closed-form connectivity and
overhearing probabilities are evaluated exactly over the rationals.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ConfigError, MissingRingError

Adjacency = dict[int, set[int]]


@dataclass(frozen=True)
class KeyPoolConfig:
    """Key pool of ``pool_size`` keys, ``ring_size`` keys drawn per node.

    ``ring_size == 0`` is permitted so the boundary cases of the
    probability formulas can be evaluated; drawing rings with it simply
    yields empty rings.
    """

    pool_size: int
    ring_size: int

    def __post_init__(self):
        if self.pool_size < 1:
            raise ConfigError(f"pool_size must be >= 1, got {self.pool_size}")
        if not 0 <= self.ring_size <= self.pool_size:
            raise ConfigError(
                f"ring_size must be in [0, {self.pool_size}], got {self.ring_size}"
            )


@dataclass(frozen=True)
class KeyRing:
    node_id: int
    key_ids: frozenset[int]


@dataclass(frozen=True)
class SecureLinkGraph:
    """Secure links over a radio adjacency.

    ``direct_links`` pairs share a pool key, ``path_links`` pairs hold a
    synthetic path key. ``link_key`` maps each linked pair to its key id.
    Pairs are canonical ``(min, max)`` tuples.
    """

    direct_links: frozenset[tuple[int, int]]
    path_links: frozenset[tuple[int, int]]
    link_key: dict[tuple[int, int], int] = field(compare=True)
    path_key_start: int = 0


def _pair(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def draw_key_rings(config: KeyPoolConfig, node_count: int, seed: int) -> list[KeyRing]:
    """Draw one uniform-without-replacement key ring per node.

    Deterministic for a given seed: rings are drawn for node 0, 1, ...
    from a single generator stream.
    """
    if node_count < 1:
        raise ConfigError(f"node_count must be >= 1, got {node_count}")
    rng = random.Random(seed)
    pool = range(config.pool_size)
    return [
        KeyRing(node_id=i, key_ids=frozenset(rng.sample(pool, config.ring_size)))
        for i in range(node_count)
    ]


def discover_shared_keys(rings: list[KeyRing], radio_adjacency: Adjacency) -> SecureLinkGraph:
    """Find direct secure links: adjacent pairs whose rings intersect.

    The stored link key is the smallest common key id (deterministic
    tie-break). Raises MissingRingError if the adjacency mentions a node
    without a ring.
    """
    ring_of = {r.node_id: r.key_ids for r in rings}
    for node in radio_adjacency:
        if node not in ring_of:
            raise MissingRingError(f"node {node} has no key ring")
    direct = set()
    link_key = {}
    for u in sorted(radio_adjacency):
        for v in sorted(radio_adjacency[u]):
            if v <= u:
                continue
            if v not in ring_of:
                raise MissingRingError(f"node {v} has no key ring")
            common = ring_of[u] & ring_of[v]
            if common:
                p = _pair(u, v)
                direct.add(p)
                link_key[p] = min(common)
    max_key = max((max(r.key_ids) for r in rings if r.key_ids), default=-1)
    return SecureLinkGraph(
        direct_links=frozenset(direct),
        path_links=frozenset(),
        link_key=link_key,
        path_key_start=max_key + 1,
    )


def establish_path_keys(
    graph: SecureLinkGraph,
    radio_adjacency: Adjacency,
    pool_size: int | None = None,
) -> SecureLinkGraph:
    """Assign path keys to adjacent pairs joined only by multi-hop direct links.

    Synthetic key ids start at ``pool_size`` when given (so they can never
    collide with pool keys), otherwise just past the largest key id seen
    during discovery. Pairs with no secure path remain unkeyed. Idempotent.
    """
    component = _direct_components(graph)
    start = max(graph.path_key_start, pool_size or 0)
    next_id = max(
        [start] + [k + 1 for p, k in graph.link_key.items() if p in graph.path_links]
    )
    path_links = set(graph.path_links)
    link_key = dict(graph.link_key)
    for u in sorted(radio_adjacency):
        for v in sorted(radio_adjacency[u]):
            if v <= u:
                continue
            p = _pair(u, v)
            if p in graph.direct_links or p in path_links:
                continue
            cu, cv = component.get(u), component.get(v)
            if cu is not None and cu == cv:
                path_links.add(p)
                link_key[p] = next_id
                next_id += 1
    return SecureLinkGraph(
        direct_links=graph.direct_links,
        path_links=frozenset(path_links),
        link_key=link_key,
        path_key_start=graph.path_key_start,
    )


def _direct_components(graph: SecureLinkGraph) -> dict[int, int]:
    """Connected components of the direct-link graph, as node -> root id."""
    neighbors: dict[int, set[int]] = {}
    for u, v in graph.direct_links:
        neighbors.setdefault(u, set()).add(v)
        neighbors.setdefault(v, set()).add(u)
    component = {}
    for start in sorted(neighbors):
        if start in component:
            continue
        stack = [start]
        component[start] = start
        while stack:
            node = stack.pop()
            for nxt in neighbors[node]:
                if nxt not in component:
                    component[nxt] = start
                    stack.append(nxt)
    return component


def connectivity_probability(config: KeyPoolConfig) -> Fraction:
    """Probability that two independently drawn rings share at least one key.

    Evaluated exactly as 1 - prod_{i<k} (K-k-i)/(K-i); the factorial form
    is undefined when 2k > K, where overlap is forced (pigeonhole) and the
    result is 1.
    """
    K, k = config.pool_size, config.ring_size
    if 2 * k > K:
        return Fraction(1)
    miss = Fraction(1)
    for i in range(k):
        miss *= Fraction(K - k - i, K - i)
    return 1 - miss


def overhear_probability(config: KeyPoolConfig) -> Fraction:
    """Probability that a third node holds the key securing a given message."""
    return Fraction(config.ring_size, config.pool_size)
