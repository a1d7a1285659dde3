"""Per-slot energy accounting.

A slot is charged according to the (previous mode, new mode) pair:

=============  ===============================================================
Sleep->Sleep   ``slot_ms * e0``
Sleep->Active  ``e01 + (slot_ms - t01) * c + alpha * served``
Active->Active ``slot_ms * c + alpha * served``
Active->Sleep  ``e10 + (slot_ms - t10) * e0``
=============  ===============================================================

Totals are always summed in the fixed order sleep, active, transmission,
switching, broadcast so that decision weights computed from
:class:`EnergyTable` agree bit-for-bit with the breakdowns charged by the
engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .model import EnergyParams, Mode, SimConfig


class InvalidTransmit(ValueError):
    pass


def _total(sleep: float, active: float, tx: float, switching: float, bcast: float) -> float:
    return sleep + active + tx + switching + bcast


@dataclass(frozen=True, slots=True)
class EnergyBreakdown:
    sleep_j: float = 0.0
    active_circuit_j: float = 0.0
    transmission_j: float = 0.0
    switching_j: float = 0.0
    broadcast_j: float = 0.0
    total_j: float = 0.0

    @classmethod
    def of(cls, sleep=0.0, active=0.0, tx=0.0, switching=0.0, bcast=0.0) -> "EnergyBreakdown":
        return cls(sleep, active, tx, switching, bcast, _total(sleep, active, tx, switching, bcast))

    def with_broadcast(self, bcast: float) -> "EnergyBreakdown":
        return EnergyBreakdown.of(self.sleep_j, self.active_circuit_j, self.transmission_j,
                                  self.switching_j, self.broadcast_j + bcast)


ZERO = EnergyBreakdown()


class EnergyTable:
    """Precomputed slot-energy components for one (EnergyParams, slot length)."""

    def __init__(self, p: EnergyParams, slot_ms: float):
        self.p = p
        self.slot_ms = slot_ms
        self.alpha = p.alpha_j_per_packet
        self.ss_sleep = slot_ms * p.e0_rate_j_per_ms
        self.sa_active = (slot_ms - p.t01_ms) * p.c_rate_j_per_ms
        self.sa_switch = p.e01_j if p.include_e01_on_wake else 0.0
        self.aa_active = slot_ms * p.c_rate_j_per_ms
        self.as_sleep = (slot_ms - p.t10_ms) * p.e0_rate_j_per_ms
        self.as_switch = p.e10_j
        half = slot_ms / 2
        self.per_sleep = half * p.e0_rate_j_per_ms
        self.per_active = max(half - p.t01_ms, 0.0) * p.c_rate_j_per_ms
        self.per_switch = self.sa_switch + p.e10_j
        self.broadcast = p.broadcast_bits_per_weight_msg * p.eb_j_per_bit

    # Totals, same summation order as EnergyBreakdown.of
    def sleep_sleep(self) -> float:
        return _total(self.ss_sleep, 0.0, 0.0, 0.0, 0.0)

    def sleep_active(self, served: int) -> float:
        return _total(0.0, self.sa_active, self.alpha * served, self.sa_switch, 0.0)

    def active_active(self, served: int) -> float:
        return _total(0.0, self.aa_active, self.alpha * served, 0.0, 0.0)

    def active_sleep(self) -> float:
        return _total(self.as_sleep, 0.0, 0.0, self.as_switch, 0.0)

    def breakdown(self, prev: Mode, new: Mode, served: int) -> EnergyBreakdown:
        if new == Mode.SLEEP:
            if prev == Mode.SLEEP:
                return EnergyBreakdown.of(sleep=self.ss_sleep)
            return EnergyBreakdown.of(sleep=self.as_sleep, switching=self.as_switch)
        if prev == Mode.SLEEP:
            return EnergyBreakdown.of(active=self.sa_active, tx=self.alpha * served,
                                      switching=self.sa_switch)
        return EnergyBreakdown.of(active=self.aa_active, tx=self.alpha * served)

    def periodic(self, served: int) -> EnergyBreakdown:
        """Half-slot sleep, wake-up, half-slot active, and the switch back to sleep."""
        return EnergyBreakdown.of(sleep=self.per_sleep, active=self.per_active,
                                  tx=self.alpha * served, switching=self.per_switch)


@lru_cache(maxsize=64)
def energy_table(p: EnergyParams, slot_ms: float) -> EnergyTable:
    return EnergyTable(p, slot_ms)


def served_packets(rate: int, waking: bool, p: EnergyParams, slot_ms: float,
                   scale_wake: bool) -> int:
    """Packets a transmitter moves this slot.

    With ``scale_wake`` a node that spends ``t01`` of the slot switching on
    only serves ``floor(rate * (slot_ms - t01) / slot_ms)``.
    """
    if waking and scale_wake:
        return math.floor(rate * (slot_ms - p.t01_ms) / slot_ms)
    return rate


def slot_energy(prev_mode: Mode, new_mode: Mode, served_packets: int, transmitting: bool,
                p: EnergyParams, slot_ms: float) -> EnergyBreakdown:
    if served_packets < 0:
        raise InvalidTransmit("served_packets must be non-negative")
    if (transmitting or served_packets > 0) and new_mode != Mode.ACTIVE:
        raise InvalidTransmit(f"cannot transmit in a {Mode(prev_mode).name}->SLEEP slot")
    if served_packets > 0 and not transmitting:
        raise InvalidTransmit("served packets require transmitting=True")
    return energy_table(p, slot_ms).breakdown(prev_mode, new_mode, served_packets)


def network_slot_energy(breakdowns: Sequence[EnergyBreakdown]) -> float:
    total = 0.0
    for b in breakdowns:
        total += b.total_j
    return total


def h_max(cfg: SimConfig) -> float:
    """Per-slot network energy ceiling: every node at its worst transmit slot."""
    table = energy_table(cfg.energy, cfg.slot_ms)
    mu = cfg.channel.mu_max
    wake = served_packets(mu, True, cfg.energy, cfg.slot_ms, cfg.wake_slot_rate_scaling)
    worst = max(table.sleep_active(wake), table.active_active(mu))
    return cfg.node_count * worst
