"""One-shot aggregation runs: plain tree aggregation and the CPDA modes.

Message accounting follows the per-role schedule of the protocols'
published overhead analysis: in plain tree aggregation every sensor sends
one tree-forming HELLO and one data message; in the cluster modes a
leader sends HELLO, its public seed, one shares message and the cluster
result (leaders skip the shares message in efficient mode), while a
member's join announcement doubles as its seed broadcast, followed by its
shares message and, in the original and hardened modes, its aggregate
value. A triggered hardened validation round adds two messages per
cluster node. Cluster results travel to the query server over the
converge-cast tree; in-network aggregation keeps that at one counted
result message per cluster.
"""

from __future__ import annotations

import math
import random
from typing import Callable

from .. import cpda
from ..attack import pick_malicious_seed
from ..errors import ProtocolAbort
from .clustering import HELLO, ClusterAssignment, form_clusters
from .config import SimConfig
from .energy import EnergyLedger, account_energy
from .metrics import Metrics
from .topology import build_routing_tree, place_nodes

MSG_HELLO = "hello"
MSG_SEED = "seed"
MSG_SHARES = "shares"
MSG_FVAL = "fval"
MSG_RESULT = "result"
MSG_DATA = "data"
MSG_VALIDATE = "validate"


class _Net:
    """Shared send/deliver bookkeeping for one run."""

    def __init__(self, cfg: SimConfig, metrics: Metrics):
        self.cfg = cfg
        self.metrics = metrics
        self.loss_rng = random.Random(f"loss:{cfg.rng_seed}")

    def send(self, msg_type: str, sender: int, recipients) -> set[int]:
        """Count one logical send; return the recipients actually reached."""
        self.metrics.count_send(msg_type, sender)
        account_energy("tx", sender, self.metrics.energy)
        reached = set()
        for r in sorted(recipients):
            delivered = (
                self.cfg.link_loss_probability == 0.0
                or self.loss_rng.random() >= self.cfg.link_loss_probability
            )
            self.metrics.count_delivery(msg_type, delivered)
            if delivered:
                account_energy("rx", r, self.metrics.energy)
                reached.add(r)
        return reached


def run_cpda_sim(
    cfg: SimConfig,
    mode: str | None = None,
    force_validation_round: bool = False,
    election: Callable[[int], bool] | None = None,
) -> Metrics:
    """Place a network, form clusters, aggregate once, account everything.

    ``mode`` is one of tag_plain, original, efficient, hardened
    (defaulting to cfg.mode). ``force_validation_round`` models the
    hardened worst case in which every cluster runs its validation
    exchange. Deterministic for a given (cfg, seed).
    """
    mode = mode or cfg.mode
    topology = place_nodes(cfg)
    metrics = Metrics(
        seed=cfg.rng_seed,
        mode=mode,
        node_count=cfg.node_count,
        sink=topology.sink,
        energy=EnergyLedger(cfg),
    )
    if not topology.connected:
        metrics.warnings.append(
            f"topology disconnected; simulating the sink component "
            f"({len(topology.sink_component)} of {cfg.node_count} nodes)"
        )
    net = _Net(cfg, metrics)
    component = sorted(topology.sink_component)
    metrics.participants = frozenset(component)

    value_rng = random.Random(f"values:{cfg.rng_seed}")
    values = {n: value_rng.randrange(cfg.value_bound) for n in component}
    for n in component:
        account_energy("sense", n, metrics.energy)

    if mode == "tag_plain":
        _run_tag_plain(topology, component, values, metrics, net)
    else:
        _run_clustered(
            cfg, topology, component, values, metrics, net, mode,
            force_validation_round, election,
        )
    return metrics


def _run_tag_plain(topology, component, values, metrics, net) -> None:
    sink = topology.sink
    tree = build_routing_tree(topology)
    in_component = set(component)
    for n in component:
        net.send(MSG_HELLO, n, topology.adjacency[n] & in_component)

    def depth(n: int) -> int:
        d = 0
        while n != sink:
            n = tree[n]
            d += 1
        return d

    # Converge-cast: children before parents, one data message each.
    subtree_sum = {n: values[n] for n in component}
    arrived = {n: True for n in component}
    for n in sorted(tree, key=lambda x: (-depth(x), x)):
        parent = tree[n]
        if parent in net.send(MSG_DATA, n, [parent]) and arrived[n]:
            subtree_sum[parent] += subtree_sum[n]
        else:
            arrived[n] = False

    participating = set()
    for n in component:
        node, ok = n, True
        while node != sink:
            if not arrived[node]:
                ok = False
                break
            node = tree[node]
        if ok:
            participating.add(n)
    metrics.sink_aggregate = subtree_sum[sink]
    metrics.true_aggregate = sum(values[n] for n in participating)


def _draw_cluster_seeds(mode: str, m: int, cfg: SimConfig, rng: random.Random) -> cpda.ClusterSeeds:
    """Per-mode seed draws; magnitudes stay small so the exact share
    algebra of large clusters stays affordable."""
    if mode == "efficient":
        leader_seed = pick_malicious_seed(cfg.value_bound, cfg.coeff_bound, m)
        rest = rng.sample(range(1, max(4 * m, 64)), m - 1)
        return cpda.ClusterSeeds(seeds=(leader_seed, *rest))
    if mode == "hardened":
        # Seeds from [B, 2B) always satisfy the triangle rule; B large
        # enough that upper-half coefficients pass the share check too.
        base = max(2 * m, 64, math.isqrt(cfg.value_bound) + 1)
        return cpda.ClusterSeeds(seeds=tuple(rng.sample(range(base, 2 * base), m)))
    return cpda.ClusterSeeds(seeds=tuple(rng.sample(range(1, max(4 * m, 100)), m)))


def _draw_coefficient(mode: str, cfg: SimConfig, rng: random.Random) -> int:
    if mode == "hardened":
        # Hardened nodes must pick coefficients the share check will
        # accept; the upper half of the range provably always passes.
        return rng.randrange(max(cfg.coeff_bound // 2, 1), cfg.coeff_bound)
    return rng.randrange(1, cfg.coeff_bound)


def _run_clustered(
    cfg, topology, component, values, metrics, net, mode,
    force_validation_round, election,
) -> None:
    sink = topology.sink
    in_component = set(component)
    assignment: ClusterAssignment = form_clusters(
        topology, cfg.p_c, seed=f"clusters:{cfg.rng_seed}", election=election
    )
    for _, node, kind in assignment.message_log:
        if kind == HELLO:
            net.send(MSG_HELLO, node, topology.adjacency[node] & in_component)

    cluster_map = assignment.clusters()
    metrics.cluster_sizes = sorted(len(v) for v in cluster_map.values())

    proto_rng = random.Random(f"protocol:{cfg.rng_seed}")
    sink_total = 0
    participating: set[int] = set()

    for leader in sorted(cluster_map):
        members = cluster_map[leader]  # leader first
        m = len(members)

        # One seed broadcast per node; for members it is also the join
        # announcement, so it is counted exactly once. A leader announces
        # its seed before it can know whether anyone joined, so lone
        # leaders still send one.
        for node in members:
            net.send(MSG_SEED, node, topology.adjacency[node] & in_component)

        if m == 1:
            metrics.plaintext_clusters += 1
            if _deliver_result(leader, sink, net):
                sink_total += values[leader]
                participating.add(leader)
            continue

        seeds = _draw_cluster_seeds(mode, m, cfg, proto_rng)
        secrets = [
            cpda.NodeSecret(
                private_value=values[n],
                coefficients=tuple(
                    _draw_coefficient(mode, cfg, proto_rng) for _ in range(m - 1)
                ),
            )
            for n in members
        ]

        ok = True
        if mode == "efficient":
            for node in members[1:]:
                if leader not in net.send(MSG_SHARES, node, [leader]):
                    ok = False
        else:
            peers = set(members)
            for node in members:
                if net.send(MSG_SHARES, node, peers - {node}) != peers - {node}:
                    ok = False
            for node in members[1:]:
                if leader not in net.send(MSG_FVAL, node, [leader]):
                    ok = False

        aborted = False
        result = None
        if ok:
            try:
                result = cpda.run_cluster(secrets, seeds, mode, counters=cpda.OpCounters())
            except ProtocolAbort as exc:
                aborted = True
                metrics.aborted_clusters += 1
                metrics.warnings.append(f"cluster {leader}: aborted by {exc.check} check")
        else:
            metrics.aborted_clusters += 1
            metrics.warnings.append(f"cluster {leader}: exchange message lost")

        if mode == "hardened" and (aborted or force_validation_round):
            peers = set(members)
            for node in members:
                for _ in range(2):
                    net.send(MSG_VALIDATE, node, peers - {node})

        if result is None:
            continue
        metrics.op_counters.merge(result.counters)
        if _deliver_result(leader, sink, net):
            sink_total += result.recovered_sum
            participating.update(members)

    metrics.sink_aggregate = sink_total
    metrics.true_aggregate = sum(values[n] for n in participating)


def _deliver_result(leader: int, sink: int, net: _Net) -> bool:
    """The leader's single counted result message toward the query server."""
    if leader == sink:
        return True
    return sink in net.send(MSG_RESULT, leader, [sink])
