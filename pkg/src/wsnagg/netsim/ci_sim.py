"""Round-based estimate-diffusion simulation with fault detection.

Each sampling period every node senses the temperature process, folds the
reading into its Gaussian belief about the network maximum, and processes
the previous round's broadcasts. A broadcast goes out when the raw
reading moved beyond the relative change trigger since the node last
transmitted AND the new estimate differs from some neighbor's last-known
estimate by more than the broadcast threshold (round zero is a discovery
round: everyone announces once so neighbor tables exist at all). A
broadcast prompted by another node's broadcast is additionally subject to
two-hop suppression.

With the security module enabled, a received estimate deviating from the
receiver's own by more than the detection multiplier times its standard
deviation makes the receiver query its neighborhood; the replies (plus
the detector's own estimate) vote, and a strict majority of deviating
replies condemns the suspect, which is isolated by a broadcast and
ignored from then on. Suspect estimates are held out of fusion until
cleared. Compromised nodes are modeled as sensing the true process
shifted by a configurable number of standard deviations.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from ..ciagg import (
    CiConfig,
    GaussianEstimate,
    NeighborTable,
    TwoHopTable,
    Verdict,
    ci_fuse,
    classify_received,
    fuse_local_batch,
    isolate,
    majority_verdict,
    should_broadcast,
    suppress_rebroadcast,
)
from .config import SimConfig
from .energy import EnergyLedger, account_energy
from .metrics import DetectionMetrics, Metrics
from .topology import place_nodes

MSG_ESTIMATE = "estimate"
MSG_QUERY = "query"
MSG_REPLY = "reply"
MSG_ISOLATE = "isolate"


def inject_faults(nodes, fraction: float, offset_sigmas: float, seed) -> set[int]:
    """Choose floor(fraction * N) nodes to report a shifted process."""
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"fraction must be in [0, 1), got {fraction}")
    del offset_sigmas  # recorded by the caller; the draw only picks nodes
    population = sorted(nodes)
    count = int(fraction * len(population))
    return set(random.Random(seed).sample(population, count))


@dataclass
class _Broadcast:
    sender: int
    estimate: GaussianEstimate


@dataclass
class _Query:
    detector: int
    suspect: int
    suspect_estimate: GaussianEstimate


@dataclass
class _NodeState:
    estimate: GaussianEstimate
    prev_reading: float
    last_sent_reading: float | None = None
    table: NeighborTable = field(default_factory=NeighborTable)
    pending_suspects: set[int] = field(default_factory=set)


def run_ci_sim(
    cfg: SimConfig,
    fault_fraction: float | None = None,
    security_enabled: bool = True,
) -> tuple[DetectionMetrics, Metrics]:
    """Run one arm of the detection experiment.

    Returns detection counts (meaningful in the security arm) plus the
    usual message/energy metrics. Deterministic per (cfg, seed).
    """
    fraction = cfg.fault_fraction if fault_fraction is None else fault_fraction
    ci_cfg = CiConfig(
        broadcast_threshold=cfg.broadcast_threshold,
        fall_threshold=cfg.fall_threshold,
        detection_multiplier=cfg.detection_multiplier,
    )
    topology = place_nodes(cfg)
    metrics = Metrics(
        seed=cfg.rng_seed,
        mode="ci-secure" if security_enabled else "ci-plain",
        node_count=cfg.node_count,
        sink=topology.sink,
        energy=EnergyLedger(cfg),
    )
    if not topology.connected:
        metrics.warnings.append("topology disconnected; all nodes still sense and fuse")

    nodes = sorted(topology.positions)
    compromised = inject_faults(
        nodes, fraction, cfg.fault_offset_sigmas, seed=f"faults:{cfg.rng_seed}"
    )
    offset = cfg.fault_offset_sigmas * cfg.temp_sigma
    reading_rng = np.random.default_rng(cfg.rng_seed)
    loss_rng = random.Random(f"ci-loss:{cfg.rng_seed}")

    mu = np.full(len(nodes), cfg.temp_mean)
    mu[[n in compromised for n in nodes]] += offset

    states: dict[int, _NodeState] = {}
    neighbor_tables: dict[int, NeighborTable] = {}
    two_hop_tables: dict[int, TwoHopTable] = {
        n: TwoHopTable(
            entries={
                nbr: frozenset(topology.adjacency[nbr]) for nbr in topology.adjacency[n]
            }
        )
        for n in nodes
    }
    isolated: set[int] = set()
    condemned: set[int] = set()  # malicious verdicts are absorbing
    queue: list[_Broadcast] = []
    pending_queries: list[_Query] = []

    def alive(n: int) -> bool:
        return metrics.energy.alive(n)

    def broadcast_targets(sender: int) -> list[int]:
        return sorted(
            n for n in topology.adjacency[sender]
            if n not in isolated and alive(n)
        )

    def transmit(msg_type: str, sender: int, recipients) -> set[int]:
        metrics.count_send(msg_type, sender)
        account_energy("tx", sender, metrics.energy)
        reached = set()
        for r in recipients:
            delivered = (
                cfg.link_loss_probability == 0.0
                or loss_rng.random() >= cfg.link_loss_probability
            )
            metrics.count_delivery(msg_type, delivered)
            if delivered:
                account_energy("rx", r, metrics.energy)
                reached.add(r)
        return reached

    for round_no in range(cfg.rounds):
        readings = reading_rng.normal(mu, cfg.temp_sigma)

        # Local sensing and fusion, batched across nodes.
        for n in nodes:
            if alive(n):
                account_energy("sense", n, metrics.energy)
        if round_no == 0:
            for i, n in enumerate(nodes):
                states[n] = _NodeState(
                    estimate=GaussianEstimate(float(readings[i]), cfg.temp_sigma**2),
                    prev_reading=float(readings[i]),
                )
                neighbor_tables[n] = states[n].table
        else:
            live = [i for i, n in enumerate(nodes) if alive(n)]
            if live:
                means, variances = fuse_local_batch(
                    [states[nodes[i]].estimate.mean for i in live],
                    [states[nodes[i]].estimate.variance for i in live],
                    readings[live],
                    [cfg.temp_sigma**2] * len(live),
                    [states[nodes[i]].prev_reading for i in live],
                    ci_cfg,
                )
                for j, i in enumerate(live):
                    st = states[nodes[i]]
                    st.estimate = GaussianEstimate(float(means[j]), float(variances[j]))
                    st.prev_reading = float(readings[i])

        # Resolve last round's suspicion queries.
        to_resolve = pending_queries
        pending_queries = []
        for q in sorted(to_resolve, key=lambda q: (q.detector, q.suspect)):
            det_state = states[q.detector]
            det_state.pending_suspects.discard(q.suspect)
            if q.suspect in condemned or not alive(q.detector):
                continue
            repliers = [
                n for n in broadcast_targets(q.detector) if n != q.suspect
            ]
            replies = [states[q.detector].estimate]
            for n in repliers:
                if q.detector in transmit(MSG_REPLY, n, [q.detector]):
                    replies.append(states[n].estimate)
            verdict = majority_verdict(q.suspect_estimate, replies, ci_cfg)
            if verdict is Verdict.MALICIOUS:
                condemned.add(q.suspect)
                isolate(q.suspect, neighbor_tables, two_hop_tables)
                isolated.add(q.suspect)
                transmit(MSG_ISOLATE, q.detector, broadcast_targets(q.detector))
            elif verdict is Verdict.NORMAL:
                det_state.estimate = ci_fuse(det_state.estimate, q.suspect_estimate)

        # Deliver last round's estimate broadcasts.
        received_from: dict[int, list[int]] = {}
        for b in sorted(queue, key=lambda b: b.sender):
            if b.sender in isolated:
                continue
            for r in transmit(MSG_ESTIMATE, b.sender, broadcast_targets(b.sender)):
                st = states[r]
                st.table.update(b.sender, b.estimate, round_no)
                received_from.setdefault(r, []).append(b.sender)
                if b.sender in condemned:
                    continue
                if security_enabled and (
                    classify_received(st.estimate, b.estimate, ci_cfg)
                    is Verdict.SUSPECT
                ):
                    if b.sender not in st.pending_suspects:
                        st.pending_suspects.add(b.sender)
                        pending_queries.append(_Query(r, b.sender, b.estimate))
                        transmit(MSG_QUERY, r, broadcast_targets(r))
                    continue
                st.estimate = ci_fuse(st.estimate, b.estimate)
        queue = []

        # Broadcast decisions.
        for i, n in enumerate(nodes):
            if n in isolated or not alive(n):
                continue
            st = states[n]
            reading = float(readings[i])
            if round_no == 0:
                st.last_sent_reading = reading
                queue.append(_Broadcast(n, st.estimate))
                continue
            moved = (
                st.last_sent_reading is None
                or abs(reading - st.last_sent_reading)
                > cfg.change_trigger * abs(st.last_sent_reading)
            )
            if not moved:
                continue
            if not should_broadcast(st.estimate, st.table, ci_cfg):
                continue
            origins = received_from.get(n, [])
            if origins and all(
                suppress_rebroadcast(o, n, True, two_hop_tables[n]) for o in origins
            ):
                continue
            st.last_sent_reading = reading
            queue.append(_Broadcast(n, st.estimate))

    det = DetectionMetrics()
    for n in nodes:
        faulty = n in compromised
        flagged = n in condemned
        if faulty and flagged:
            det.true_positive += 1
        elif faulty:
            det.false_negative += 1
        elif flagged:
            det.false_positive += 1
        else:
            det.true_negative += 1
    if security_enabled:
        det.energy_with_security = metrics.energy.total_spent()
        det.delivery_ratio_with = metrics.delivery_ratio()
    else:
        det.energy_without_security = metrics.energy.total_spent()
        det.delivery_ratio_without = metrics.delivery_ratio()
    return det, metrics


def run_detection_experiment(
    cfg: SimConfig, fault_fraction: float | None = None
) -> tuple[DetectionMetrics, Metrics, Metrics]:
    """Run both arms (security on and off) and merge the energy ledgers."""
    det_on, metrics_on = run_ci_sim(cfg, fault_fraction, security_enabled=True)
    det_off, metrics_off = run_ci_sim(cfg, fault_fraction, security_enabled=False)
    det_on.energy_without_security = det_off.energy_without_security
    det_on.delivery_ratio_without = det_off.delivery_ratio_without
    return det_on, metrics_on, metrics_off
