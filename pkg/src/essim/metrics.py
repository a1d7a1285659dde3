"""Fold traces into the time-averaged quantities plotted against V.

:class:`MetricsAccumulator` consumes slot records one at a time so long runs
can be summarized without keeping the trace.  Feeding the same records in
any chunking gives the same report.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

from .engine import SlotRecord, Trace
from .model import Mode


class EmptyTrace(ValueError):
    pass


@dataclass(frozen=True)
class MetricsReport:
    slots: int
    avg_energy_active_j_per_slot: float
    avg_energy_sleep_j_per_slot: float
    avg_energy_switching_j_per_slot: float
    avg_energy_broadcast_j_per_slot: float
    avg_total_energy_j_per_slot: float
    avg_queue_backlog_packets: float
    node_avg_queue_backlog_packets: tuple[float, ...]
    duty_cycle_fraction: float
    node_duty_cycle_fraction: tuple[float, ...]
    burst_count: int
    mean_burst_length: float
    idle_slot_fraction: float
    node_throughput_packets_per_slot: tuple[float, ...]
    first_death_slot: Optional[int]
    network_death_slot: Optional[int]

    def as_row(self) -> dict:
        """Flat dict: per-node tuples become ``name_<node>`` columns."""
        row = {}
        for k, v in asdict(self).items():
            if isinstance(v, tuple):
                for i, x in enumerate(v):
                    row[f"{k}_{i}"] = x
            else:
                row[k] = v
        return row


@dataclass
class MetricsAccumulator:
    node_count: int
    slots: int = 0
    idle_slots: int = 0
    alive_slots: list = field(default_factory=list)
    active_slots: list = field(default_factory=list)
    q_alive: list = field(default_factory=list)
    q_all: list = field(default_factory=list)
    served: list = field(default_factory=list)
    e_sleep: list = field(default_factory=list)
    e_circuit: list = field(default_factory=list)
    e_tx: list = field(default_factory=list)
    e_switch: list = field(default_factory=list)
    e_bcast: list = field(default_factory=list)
    burst_count: int = 0
    burst_slots: int = 0
    _run_node: Optional[int] = None
    _run_len: int = 0

    def __post_init__(self):
        n = self.node_count
        for name in ("alive_slots", "active_slots", "q_alive", "q_all", "served"):
            setattr(self, name, [0] * n)
        for name in ("e_sleep", "e_circuit", "e_tx", "e_switch", "e_bcast"):
            setattr(self, name, [0.0] * n)

    def update(self, records: Iterable[SlotRecord]) -> "MetricsAccumulator":
        for r in records:
            self.add(r)
        return self

    def add(self, r: SlotRecord) -> None:
        self.slots += 1
        for i in range(self.node_count):
            q = r.queues_before[i]
            self.q_all[i] += q
            if not r.alive_before[i]:
                continue
            self.alive_slots[i] += 1
            self.q_alive[i] += q
            self.served[i] += r.served[i]
            if r.modes[i] == Mode.ACTIVE:
                self.active_slots[i] += 1
            e = r.energy[i]
            self.e_sleep[i] += e.sleep_j
            self.e_circuit[i] += e.active_circuit_j
            self.e_tx[i] += e.transmission_j
            self.e_switch[i] += e.switching_j
            self.e_bcast[i] += e.broadcast_j
        tx = r.transmitter
        if tx is None:
            self.idle_slots += 1
        self.push_transmitter(tx)

    def push_transmitter(self, tx: Optional[int]) -> None:
        if tx is not None and tx == self._run_node:
            self._run_len += 1
            return
        self._close_run()
        self._run_node = tx
        self._run_len = 0 if tx is None else 1

    def _close_run(self) -> None:
        if self._run_len >= 2:
            self.burst_count += 1
            self.burst_slots += self._run_len

    def report(self, death_slots: Optional[Sequence[Optional[int]]] = None) -> MetricsReport:
        if self.slots == 0:
            raise EmptyTrace("cannot aggregate an empty trace")
        from .engine import lifetime
        n, T = self.node_count, self.slots
        bursts, burst_slots = self.burst_count, self.burst_slots
        if self._run_len >= 2:
            bursts += 1
            burst_slots += self._run_len
        net = lambda xs: sum(xs) / T
        active = net([c + t for c, t in zip(self.e_circuit, self.e_tx)])
        sleep, switching, bcast = net(self.e_sleep), net(self.e_switch), net(self.e_bcast)
        duty = tuple(a / s if s else 0.0 for a, s in zip(self.active_slots, self.alive_slots))
        first, network = lifetime(death_slots if death_slots is not None else [None] * n)
        return MetricsReport(
            slots=T,
            avg_energy_active_j_per_slot=active,
            avg_energy_sleep_j_per_slot=sleep,
            avg_energy_switching_j_per_slot=switching,
            avg_energy_broadcast_j_per_slot=bcast,
            avg_total_energy_j_per_slot=active + sleep + switching + bcast,
            avg_queue_backlog_packets=sum(self.q_all) / T,
            node_avg_queue_backlog_packets=tuple(
                q / s if s else 0.0 for q, s in zip(self.q_alive, self.alive_slots)),
            duty_cycle_fraction=sum(duty) / n,
            node_duty_cycle_fraction=duty,
            burst_count=bursts,
            mean_burst_length=burst_slots / bursts if bursts else 0.0,
            idle_slot_fraction=self.idle_slots / T,
            node_throughput_packets_per_slot=tuple(x / T for x in self.served),
            first_death_slot=first,
            network_death_slot=network,
        )


def aggregate(trace: Trace) -> MetricsReport:
    acc = MetricsAccumulator(trace.config.node_count)
    acc.update(trace.records)
    return acc.report(trace.death_slots)


SUMMARY_KEY = "v_param"


def sweep_summary(reports: Sequence[tuple[float, MetricsReport]]) -> list[dict]:
    """Rows ordered by V, one column per report field."""
    rows = []
    for v, rep in sorted(reports, key=lambda x: x[0]):
        row = {SUMMARY_KEY: v}
        row.update(rep.as_row())
        rows.append(row)
    return rows


def mean_ci95(values: Sequence[float]) -> tuple[float, float]:
    """Mean and normal-approximation 95% half-width."""
    vals = [float(v) for v in values]
    m = sum(vals) / len(vals)
    if len(vals) < 2:
        return m, 0.0
    var = sum((v - m) ** 2 for v in vals) / (len(vals) - 1)
    return m, 1.96 * math.sqrt(var / len(vals))


def monotone_with_tolerance(means: Sequence[float], halfwidths: Sequence[float],
                            direction: str = "nonincreasing", strict: bool = False,
                            allowed_inversions: int = 1) -> tuple[bool, list[int]]:
    """Check a sequence is monotone, forgiving inversions inside overlapping CIs.

    Returns ``(ok, inversions)`` where ``inversions`` lists the indices ``i``
    at which step ``i -> i+1`` goes the wrong way.  The check passes when the
    number of inversions is at most ``allowed_inversions`` and every one of
    them has overlapping 95% intervals.
    """
    sign = -1.0 if direction == "nonincreasing" else 1.0
    bad = []
    for i in range(len(means) - 1):
        d = sign * (means[i + 1] - means[i])
        if d < 0 or (strict and d == 0):
            bad.append(i)
    overlapping = all(abs(means[i + 1] - means[i]) <= halfwidths[i] + halfwidths[i + 1]
                      for i in bad)
    return len(bad) <= allowed_inversions and overlapping, bad
