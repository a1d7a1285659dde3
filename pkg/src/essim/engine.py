"""The slot loop.

Within a slot the order is fixed: sample channels, sample arrivals, ask the
policy (it sees ``Q(t)`` before this slot's arrivals), serve, add arrivals,
debit batteries.  A node that cannot afford the energy of its decided slot
is frozen before acting: it serves nothing, pays nothing and is dead from
that slot on, with its residual charge left in ``battery_j``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .energy import ZERO, EnergyBreakdown, energy_table, served_packets
from .model import (Mode, NodeState, Policy, SimConfig, initial_states, validate_config)
from .policies import (SlotDecision, benchmark_decide, distributed_decide, ess_decide,
                       periodic_decide, rnd_decide)
from .stochastic import Environment, RngStream


class InconsistentDecision(ValueError):
    pass


class Termination(str, enum.Enum):
    HORIZON_REACHED = "HorizonReached"
    NETWORK_DEAD = "NetworkDead"
    FIRST_DEATH = "FirstDeath"


@dataclass(frozen=True, slots=True)
class SlotRecord:
    slot: int
    channel_states: tuple[int, ...]
    rates: tuple[int, ...]
    prev_modes: tuple[Mode, ...]
    modes: tuple[Mode, ...]
    transmitters: frozenset
    served: tuple[int, ...]
    arrivals: tuple[int, ...]
    queues_before: tuple[int, ...]
    queues: tuple[int, ...]
    battery: tuple[float, ...]
    energy: tuple[EnergyBreakdown, ...]
    alive_before: tuple[bool, ...]
    alive: tuple[bool, ...]

    @property
    def idle(self) -> bool:
        return not self.transmitters

    @property
    def transmitter(self) -> Optional[int]:
        return next(iter(self.transmitters), None)

    @property
    def switched(self) -> tuple[bool, ...]:
        return tuple(a != b for a, b in zip(self.prev_modes, self.modes))

    @property
    def total_energy_j(self) -> float:
        total = 0.0
        for e in self.energy:
            total += e.total_j
        return total


@dataclass
class RunSummary:
    termination: Termination
    slots: int
    final_states: list[NodeState]
    death_slots: list[Optional[int]]


@dataclass
class Trace:
    config: SimConfig
    records: list[SlotRecord] = field(default_factory=list)
    termination: Termination = Termination.HORIZON_REACHED
    death_slots: list[Optional[int]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def step(states: Sequence[NodeState], decision: SlotDecision, rates: Sequence[int],
         arrivals: Sequence[int], p, slot_ms: float, *, t: int = 0,
         channel_states: Optional[Sequence[int]] = None, periodic: bool = False,
         scale_wake: bool = False) -> tuple[list[NodeState], SlotRecord]:
    """Apply one slot's decision: serve, enqueue arrivals, debit batteries."""
    n = len(states)
    for i in decision.transmitters:
        if not states[i].alive or decision.modes[i] != Mode.ACTIVE:
            raise InconsistentDecision(f"node {i} cannot transmit (dead or not active)")
    table = energy_table(p, slot_ms)
    bcast = decision.broadcast or (False,) * n
    new_states, served_out, arr_out, energy, tx = [], [], [], [], set()
    for i, s in enumerate(states):
        if not s.alive:
            new_states.append(NodeState(i, s.mode, s.mode, s.queue_packets, s.battery_j, False))
            served_out.append(0)
            arr_out.append(0)
            energy.append(ZERO)
            continue
        new_mode = decision.modes[i]
        sending = i in decision.transmitters
        if periodic:
            served = 0
            if sending:
                served = (math.floor(rates[i] * max(slot_ms / 2 - p.t01_ms, 0.0) / slot_ms)
                          if scale_wake else rates[i])
            e = table.periodic(served)
        else:
            served = served_packets(rates[i], s.mode == Mode.SLEEP, p, slot_ms, scale_wake) \
                if sending else 0
            e = table.breakdown(s.mode, new_mode, served)
        if bcast[i]:
            e = e.with_broadcast(table.broadcast)
        battery = s.battery_j - e.total_j
        if battery < 0:
            new_states.append(NodeState(i, s.mode, s.mode, s.queue_packets, s.battery_j, False))
            served_out.append(0)
            arr_out.append(0)
            energy.append(ZERO)
            continue
        q = max(s.queue_packets - served, 0) + arrivals[i]
        new_states.append(NodeState(i, new_mode, s.mode, q, battery, battery > 0))
        served_out.append(served)
        arr_out.append(arrivals[i])
        energy.append(e)
        if sending:
            tx.add(i)
    record = SlotRecord(
        slot=t,
        channel_states=tuple(channel_states) if channel_states is not None else (),
        rates=tuple(rates),
        prev_modes=tuple(s.mode for s in states),
        modes=tuple(s.mode for s in new_states),
        transmitters=frozenset(tx),
        served=tuple(served_out),
        arrivals=tuple(arr_out),
        queues_before=tuple(s.queue_packets for s in states),
        queues=tuple(s.queue_packets for s in new_states),
        battery=tuple(s.battery_j for s in new_states),
        energy=tuple(energy),
        alive_before=tuple(s.alive for s in states),
        alive=tuple(s.alive for s in new_states),
    )
    return new_states, record


class PolicyRunner:
    """Binds a config's policy choice to the per-slot decide call."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.policy = cfg.policy
        if cfg.policy is Policy.RND:
            n = cfg.node_count
            self.mode_streams = [RngStream(cfg.seed, "rnd_mode", i) for i in range(n)]
            self.tx_streams = [RngStream(cfg.seed, "rnd_tx", i) for i in range(n)]

    def decide(self, t: int, states: Sequence[NodeState], chan: Sequence[int],
               rates: Sequence[int]) -> SlotDecision:
        cfg = self.cfg
        queues = [s.queue_packets for s in states]
        modes = [s.mode for s in states]
        alive = [s.alive for s in states]
        pol = self.policy
        if pol is Policy.ESS:
            return ess_decide(queues, modes, rates, cfg.v_param, cfg.energy, cfg.slot_ms,
                              alive, cfg.wake_slot_rate_scaling)
        if pol is Policy.BENCHMARK:
            return benchmark_decide(queues, modes, rates, cfg.v_param, cfg.energy,
                                    cfg.slot_ms, alive, cfg.wake_slot_rate_scaling)
        if pol is Policy.PERIODIC:
            return periodic_decide(t, queues, rates, cfg.v_param, cfg.energy, alive)
        if pol is Policy.DISTRIBUTED:
            return distributed_decide(queues, modes, rates, cfg.v_param, cfg.energy,
                                      cfg.slot_ms, alive, cfg.wake_slot_rate_scaling)
        mode_u = [s.uniform(t) for s in self.mode_streams]
        tx_u = [s.uniform(t) for s in self.tx_streams]
        return rnd_decide(cfg.rnd_params, modes, chan, mode_u, tx_u, alive)


def simulate(cfg: SimConfig, on_record: Callable[[SlotRecord], None]) -> RunSummary:
    """Run ``cfg`` slot by slot, handing each record to ``on_record``."""
    validate_config(cfg)
    horizon = cfg.horizon_slots
    if horizon is None and cfg.infinite_battery:
        raise ValueError("an infinite-battery run needs a finite horizon_slots")
    env = Environment(cfg)
    runner = PolicyRunner(cfg)
    rates_of = cfg.channel.rates
    periodic = cfg.policy is Policy.PERIODIC
    states = initial_states(cfg)
    deaths: list[Optional[int]] = [None] * cfg.node_count
    t = 0
    termination = Termination.HORIZON_REACHED
    while horizon is None or t < horizon:
        chan = env.channel_states(t).tolist()
        rates = [rates_of[k] for k in chan]
        arrivals = env.arrivals(t).tolist()
        decision = runner.decide(t, states, chan, rates)
        new_states, record = step(states, decision, rates, arrivals, cfg.energy, cfg.slot_ms,
                                  t=t, channel_states=chan, periodic=periodic,
                                  scale_wake=cfg.wake_slot_rate_scaling)
        on_record(record)
        for i, (old, new) in enumerate(zip(states, new_states)):
            if old.alive and not new.alive:
                # Paid-to-zero nodes completed slot t; frozen nodes never ran it.
                deaths[i] = t + 1 if new.battery_j <= 0 else t
        states = new_states
        t += 1
        if not any(s.alive for s in states):
            termination = Termination.NETWORK_DEAD
            break
        if cfg.stop_at_first_death and any(d is not None for d in deaths):
            termination = Termination.FIRST_DEATH
            break
    return RunSummary(termination, t, states, deaths)


def run(cfg: SimConfig) -> Trace:
    trace = Trace(cfg)
    summary = simulate(cfg, trace.records.append)
    trace.termination = summary.termination
    trace.death_slots = summary.death_slots
    return trace


def lifetime(trace_or_deaths) -> tuple[Optional[int], Optional[int]]:
    """``(first_death_slot, network_death_slot)``; ``None`` when it did not happen.

    A node's death slot is the first slot it did not operate in.
    """
    deaths = getattr(trace_or_deaths, "death_slots", trace_or_deaths)
    seen = [d for d in deaths if d is not None]
    first = min(seen) if seen else None
    network = max(seen) if seen and len(seen) == len(deaths) else None
    return first, network


def battery_ledger(trace: Trace, node: int) -> float:
    """Initial battery minus every charge to ``node``, subtracted in slot order."""
    battery = trace.config.initial_battery_j
    if trace.config.infinite_battery:
        battery = math.inf
    for r in trace.records:
        battery = battery - r.energy[node].total_j
    return battery
