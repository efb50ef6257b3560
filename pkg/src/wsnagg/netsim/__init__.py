"""Deterministic round-based sensor network simulator."""

from .ci_sim import inject_faults, run_ci_sim, run_detection_experiment
from .clustering import ClusterAssignment, form_clusters
from .config import SimConfig
from .cpda_sim import run_cpda_sim
from .energy import EnergyLedger, account_energy
from .metrics import DetectionMetrics, Metrics
from .topology import Topology, build_routing_tree, place_nodes

__all__ = [
    "ClusterAssignment",
    "DetectionMetrics",
    "EnergyLedger",
    "Metrics",
    "SimConfig",
    "Topology",
    "account_energy",
    "build_routing_tree",
    "form_clusters",
    "inject_faults",
    "place_nodes",
    "run_ci_sim",
    "run_cpda_sim",
    "run_detection_experiment",
]
