"""First-order radio energy model."""

from __future__ import annotations

from dataclasses import dataclass

from .instance import FleetParams, RadioParams


@dataclass(frozen=True)
class EnergyBreakdown:
    rx_joules: float = 0.0
    tx_tree_joules: float = 0.0
    tx_uav_joules: float = 0.0

    @property
    def total_joules(self) -> float:
        return self.rx_joules + self.tx_tree_joules + self.tx_uav_joules


def tx_per_bit(distance: float, radio: RadioParams) -> float:
    if distance < radio.d0:
        return radio.e_elec + radio.eps_fs * distance**2
    return radio.e_elec + radio.eps_mp * distance**4


def tx_energy(bits: float, distance: float, radio: RadioParams) -> float:
    """Energy to send ``bits`` over ``distance`` metres (d^2 below d0, d^4 above)."""
    return bits * tx_per_bit(distance, radio)


def rx_energy(bits: float, radio: RadioParams) -> float:
    return bits * radio.e_elec


def uav_tx_per_bit(radio: RadioParams, fleet: FleetParams) -> float:
    # the UAV hovers straight above the cluster head, so the link length is h
    return tx_per_bit(fleet.altitude, radio)


def node_round_consumption(
    relayed_bits: float,
    own_bits: float,
    parent_distance: float | None,
    radio: RadioParams,
    fleet: FleetParams,
) -> EnergyBreakdown:
    """Per-round consumption of one sensor.

    ``parent_distance=None`` marks a cluster head, which uploads everything it
    holds to the UAV instead of forwarding it along the tree.
    """
    rx = rx_energy(relayed_bits, radio)
    out = relayed_bits + own_bits
    if parent_distance is None:
        return EnergyBreakdown(rx, 0.0, out * uav_tx_per_bit(radio, fleet))
    return EnergyBreakdown(rx, tx_energy(out, parent_distance, radio), 0.0)
