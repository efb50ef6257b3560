"""Secure max aggregation by covariance intersection and mixture fusion.

Every node carries a Gaussian belief (mean, variance) about the network
maximum. Beliefs from neighbors are merged by scalar covariance
intersection (which degenerates to keeping the lower-variance operand);
a node's own reading is merged through a step-weighted Gaussian mixture
that discounts mass below the plausible range of the larger-mean
component, then moment-matched back to a Gaussian. Broadcast gating,
two-hop rebroadcast suppression, deviation-based suspicion and a
neighborhood majority verdict round out the protocol.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class GaussianEstimate:
    """Scalar estimate: mean in sensed units, strictly positive variance."""

    mean: float
    variance: float

    def __post_init__(self):
        if not math.isfinite(self.mean):
            raise ValueError(f"mean must be finite, got {self.mean}")
        if not (self.variance > 0 and math.isfinite(self.variance)):
            raise ValueError(f"variance must be positive, got {self.variance}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class CiConfig:
    """Fusion, broadcast and detection parameters."""

    broadcast_threshold: float = 0.5
    fall_threshold: float = 2.0
    detection_multiplier: float = 3.0
    grid_points: int = 2048
    grid_span_sigmas: float = 4.0

    def __post_init__(self):
        for name in ("broadcast_threshold", "fall_threshold", "detection_multiplier",
                     "grid_points", "grid_span_sigmas"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class Verdict(enum.Enum):
    NORMAL = "normal"
    SUSPECT = "suspect"
    MALICIOUS = "malicious"


@dataclass
class NeighborTable:
    """Last estimate received from each current neighbor, with round stamp."""

    entries: dict[int, tuple[GaussianEstimate, int]] = field(default_factory=dict)

    def update(self, neighbor: int, estimate: GaussianEstimate, round_no: int) -> None:
        self.entries[neighbor] = (estimate, round_no)

    def drop(self, neighbor: int) -> None:
        self.entries.pop(neighbor, None)


@dataclass
class TwoHopTable:
    """For each neighbor, the set of that neighbor's neighbors."""

    entries: dict[int, frozenset[int]] = field(default_factory=dict)

    def drop(self, node: int) -> None:
        self.entries.pop(node, None)
        self.entries = {k: v - {node} for k, v in self.entries.items()}


def ci_fuse(a: GaussianEstimate, b: GaussianEstimate) -> GaussianEstimate:
    """Covariance intersection of two scalar estimates.

    The convex inverse-variance combination is minimized at an endpoint,
    so the result is whichever operand has the lower variance; ties keep
    the first operand.
    """
    return a if a.variance <= b.variance else b


def step_weight_w1(t: float, local: GaussianEstimate) -> int:
    """0 below (and at) the local mean minus three sigma, else 1."""
    return 0 if t <= local.mean - 3.0 * local.sigma else 1


def step_weight_w2(t: float, local: GaussianEstimate, global_est: GaussianEstimate) -> int:
    """0 up to the larger of the two three-sigma lower edges, else 1."""
    cutoff = max(local.mean - 3.0 * local.sigma, global_est.mean - 3.0 * global_est.sigma)
    return 0 if t <= cutoff else 1


def _mixture_moments_batch(
    base_mean, base_var, wtd_mean, wtd_var, cutoff, grid_points: int, span: float
):
    """Moments of m(t) = N(base) + 1[t > cutoff] * N(wtd), vectorized.

    Integration window is the union of both components' span-sigma
    ranges. Each component is integrated by trapezoid on its own uniform
    grid; the weighted component starts exactly at the cutoff, so the
    step never lands inside a trapezoid cell.
    """
    base_mean = np.asarray(base_mean, dtype=float)
    base_var = np.asarray(base_var, dtype=float)
    wtd_mean = np.asarray(wtd_mean, dtype=float)
    wtd_var = np.asarray(wtd_var, dtype=float)
    cutoff = np.asarray(cutoff, dtype=float)

    base_sig = np.sqrt(base_var)
    wtd_sig = np.sqrt(wtd_var)
    lo = np.minimum(base_mean - span * base_sig, wtd_mean - span * wtd_sig)
    hi = np.maximum(base_mean + span * base_sig, wtd_mean + span * wtd_sig)

    ticks = np.linspace(0.0, 1.0, grid_points)

    def segment_moments(a, b, mean, sig):
        # trapezoid of (pdf, t*pdf, t^2*pdf) over [a, b] per row
        t = a[:, None] + (b - a)[:, None] * ticks[None, :]
        pdf = np.exp(-0.5 * ((t - mean[:, None]) / sig[:, None]) ** 2)
        pdf /= sig[:, None] * math.sqrt(2.0 * math.pi)
        m0 = _trapezoid(pdf, t, axis=1)
        m1 = _trapezoid(t * pdf, t, axis=1)
        m2 = _trapezoid(t * t * pdf, t, axis=1)
        return m0, m1, m2

    b0, b1, b2 = segment_moments(lo, hi, base_mean, base_sig)
    wlo = np.clip(cutoff, lo, hi)
    w0, w1m, w2m = segment_moments(wlo, hi, wtd_mean, wtd_sig)

    mass = b0 + w0
    mean = (b1 + w1m) / mass
    var = (b2 + w2m) / mass - mean**2
    return mean, np.maximum(var, 1e-12)


def fuse_local_batch(
    global_means,
    global_vars,
    local_means,
    local_vars,
    prev_local_means,
    cfg: CiConfig,
):
    """Vectorized fuse_local across many nodes; returns (means, variances)."""
    gm = np.asarray(global_means, dtype=float)
    gv = np.asarray(global_vars, dtype=float)
    lm = np.asarray(local_means, dtype=float)
    lv = np.asarray(local_vars, dtype=float)
    prev = np.asarray(prev_local_means, dtype=float)

    ls = np.sqrt(lv)
    gs = np.sqrt(gv)
    local_cut = lm - 3.0 * ls
    both_cut = np.maximum(local_cut, gm - 3.0 * gs)

    # Local-dominant weighting applies when the local mean leads, or when
    # the previous local reading tracked the global estimate closely
    # enough that a drop in the maximum is believed (fall branch).
    local_dominant = (lm >= gm) | (np.abs(gm - prev) <= cfg.fall_threshold)

    base_mean = np.where(local_dominant, lm, gm)
    base_var = np.where(local_dominant, lv, gv)
    wtd_mean = np.where(local_dominant, gm, lm)
    wtd_var = np.where(local_dominant, gv, lv)
    cutoff = np.where(local_dominant, local_cut, both_cut)

    return _mixture_moments_batch(
        base_mean, base_var, wtd_mean, wtd_var, cutoff,
        cfg.grid_points, cfg.grid_span_sigmas,
    )


def fuse_local(
    global_est: GaussianEstimate,
    local: GaussianEstimate,
    prev_local_mean: float,
    cfg: CiConfig,
) -> GaussianEstimate:
    """Merge a local observation into the global estimate.

    When the local mean leads (or a fall in the maximum is believed
    because the previous local reading tracked the global estimate within
    fall_threshold), the mixture keeps the local density at unit weight
    and step-discounts the global density below the local three-sigma
    edge. Otherwise the roles flip and the cutoff is the larger of the
    two three-sigma edges. The mixture is normalized and moment-matched
    to a Gaussian by trapezoid integration on grid_points points.
    """
    means, variances = fuse_local_batch(
        [global_est.mean], [global_est.variance],
        [local.mean], [local.variance],
        [prev_local_mean], cfg,
    )
    return GaussianEstimate(mean=float(means[0]), variance=float(variances[0]))


def should_broadcast(new: GaussianEstimate, table: NeighborTable, cfg: CiConfig) -> bool:
    """Broadcast iff the new mean differs from some neighbor's last-known
    mean by more than the threshold. No neighbors, no broadcast."""
    return any(
        abs(new.mean - est.mean) > cfg.broadcast_threshold
        for est, _ in table.entries.values()
    )


def suppress_rebroadcast(
    origin: int, self_id: int, own_estimate_changed: bool, two_hop: TwoHopTable
) -> bool:
    """Decide whether to suppress relaying a just-processed broadcast.

    Relay only if the broadcast changed this node's estimate AND some
    neighbor (other than the originator) was not already covered by the
    originator's broadcast. Returns True to suppress.
    """
    if not own_estimate_changed:
        return True
    origin_neighbors = two_hop.entries.get(origin, frozenset())
    for neighbor in two_hop.entries:
        if neighbor == origin or neighbor == self_id:
            continue
        if neighbor not in origin_neighbors:
            return False
    return True


def classify_received(
    own: GaussianEstimate, received: GaussianEstimate, cfg: CiConfig
) -> Verdict:
    """Suspect a received estimate deviating from our own mean by more
    than the multiplier times our own standard deviation (strict)."""
    if abs(received.mean - own.mean) > cfg.detection_multiplier * own.sigma:
        return Verdict.SUSPECT
    return Verdict.NORMAL


def majority_verdict(
    suspect_estimate: GaussianEstimate,
    neighbor_replies: list[GaussianEstimate],
    cfg: CiConfig,
) -> Verdict:
    """Confirm or clear a suspect against the neighborhood's replies.

    Malicious iff a strict majority of replies deviates from the suspect
    by more than the multiplier times the replier's own sigma. The
    detector's own estimate counts as one reply (the caller includes it).
    With no replies the verdict stays SUSPECT.
    """
    if not neighbor_replies:
        return Verdict.SUSPECT
    deviating = sum(
        1
        for r in neighbor_replies
        if abs(suspect_estimate.mean - r.mean) > cfg.detection_multiplier * r.sigma
    )
    if 2 * deviating > len(neighbor_replies):
        return Verdict.MALICIOUS
    return Verdict.NORMAL


def isolate(
    node_id: int,
    neighbor_tables: dict[int, NeighborTable],
    two_hop_tables: dict[int, TwoHopTable],
) -> None:
    """Remove a node from every neighbor and two-hop table. Idempotent;
    unknown nodes are a no-op."""
    for table in neighbor_tables.values():
        table.drop(node_id)
    for table in two_hop_tables.values():
        table.drop(node_id)
    neighbor_tables.pop(node_id, None)
    two_hop_tables.pop(node_id, None)
