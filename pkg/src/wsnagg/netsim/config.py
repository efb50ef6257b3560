"""Simulation configuration with the published experiment defaults."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigError


@dataclass(frozen=True)
class SimConfig:
    """Network, energy, protocol and fault-injection parameters.

    Physical defaults follow the reference experiment: 160 stationary
    nodes uniform over a 120 m square, 15 m radio range, 200 s simulated
    at a 0.5 s sampling period, 5 J per node, temperature process
    N(25, 1). Transmit/receive powers are kept as printed in that
    experiment table (0.75 W vs 0.25 mW, an asymmetry preserved as
    configurable defaults); per-message energy is power times the 1 ms
    nominal airtime, per-sample sensing energy is power times the
    sampling period.
    """

    node_count: int = 160
    area_side: float = 120.0
    radio_range: float = 15.0
    sim_time: float = 200.0
    sampling_period: float = 0.5
    initial_energy: float = 5.0
    airtime: float = 0.001
    tx_power_w: float = 0.75
    rx_power_w: float = 0.00025
    sense_power_w: float = 0.010
    p_c: float = 0.1
    change_trigger: float = 0.02
    temp_mean: float = 25.0
    temp_sigma: float = 1.0
    link_loss_probability: float = 0.0
    rng_seed: int = 0
    mode: str = "original"
    fault_fraction: float = 0.0
    fault_offset_sigmas: float = 10.0
    key_pool_size: int = 1000
    key_ring_size: int = 50
    value_bound: int = 1000
    coeff_bound: int = 1000
    broadcast_threshold: float = 0.5
    fall_threshold: float = 2.0
    detection_multiplier: float = 3.0

    def __post_init__(self):
        positive = (
            "node_count", "area_side", "radio_range", "sim_time", "sampling_period",
            "initial_energy", "airtime", "tx_power_w", "rx_power_w", "sense_power_w",
            "temp_sigma", "key_pool_size", "key_ring_size", "value_bound",
            "coeff_bound", "broadcast_threshold", "fall_threshold",
            "detection_multiplier", "change_trigger",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 <= self.p_c <= 1.0:
            raise ConfigError(f"p_c must be in [0, 1], got {self.p_c}")
        if not 0.0 <= self.link_loss_probability < 1.0:
            raise ConfigError(
                f"link_loss must be in [0, 1), got {self.link_loss_probability}"
            )
        if not 0.0 <= self.fault_fraction < 1.0:
            raise ConfigError(
                f"fault_fraction must be in [0, 1), got {self.fault_fraction}"
            )
        if self.fault_offset_sigmas <= 0:
            raise ConfigError("fault_offset_sigmas must be positive")
        if self.key_ring_size > self.key_pool_size:
            raise ConfigError("k cannot exceed K")
        if self.mode not in ("tag_plain", "original", "efficient", "hardened"):
            raise ConfigError(f"unknown mode {self.mode!r}")

    @property
    def e_tx(self) -> float:
        return self.tx_power_w * self.airtime

    @property
    def e_rx(self) -> float:
        return self.rx_power_w * self.airtime

    @property
    def e_sense(self) -> float:
        return self.sense_power_w * self.sampling_period

    @property
    def rounds(self) -> int:
        return int(self.sim_time / self.sampling_period)
