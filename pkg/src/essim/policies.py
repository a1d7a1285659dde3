"""Sleep/active scheduling policies.

Every policy is a pure function from what the scheduler observes in slot
``t`` (backlogs ``Q(t)``, the modes the nodes ended slot ``t-1`` in, the
channel rates) to a :class:`SlotDecision`.  Randomized policies take their
uniforms as arguments so that the functions themselves stay pure.

ESS, Benchmark and Distributed score each node with two numbers:

* transmit weight ``Q*mu - V*E_tx`` where ``E_tx`` is the full energy of a
  transmitting slot from the node's current mode (wake-up cost included for
  a sleeping node);
* idle weight ``-V*E_idle`` where ``E_idle`` is the energy of the cheapest
  non-transmitting slot (stay asleep, or pay ``e10`` to fall asleep).

A node "wins" when its transmit weight strictly exceeds its idle weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .energy import EnergyTable, energy_table, served_packets
from .model import EnergyParams, Mode, RndPolicyParams

NEG_INF = -math.inf


@dataclass(frozen=True, slots=True)
class SlotDecision:
    modes: tuple[Mode, ...]
    transmitters: frozenset = frozenset()
    broadcast: tuple[bool, ...] = ()

    @property
    def transmitter(self) -> Optional[int]:
        return next(iter(self.transmitters), None)

    @property
    def idle(self) -> bool:
        return not self.transmitters


def _alive(alive, n):
    return [True] * n if alive is None else list(alive)


def node_weights(queue: int, prev_mode: Mode, rate: int, V: float, table: EnergyTable,
                 scale_wake: bool = False) -> tuple[float, float]:
    """``(transmit_weight, idle_weight)`` for one node.

    A node on a zero-rate channel has no transmit option (weight ``-inf``).
    """
    if prev_mode == Mode.ACTIVE:
        idle = -V * table.active_sleep()
        if rate <= 0:
            return NEG_INF, idle
        return queue * rate - V * table.active_active(rate), idle
    idle = -V * table.sleep_sleep()
    served = served_packets(rate, True, table.p, table.slot_ms, scale_wake)
    if served <= 0:
        return NEG_INF, idle
    return queue * served - V * table.sleep_active(served), idle


def ess_decide(queues: Sequence[int], prev_modes: Sequence[Mode], rates: Sequence[int],
               V: float, p: EnergyParams, slot_ms: float,
               alive: Optional[Sequence[bool]] = None,
               scale_wake: bool = False) -> SlotDecision:
    """Centralized energy-aware switching and scheduling.

    The transmitter is the winning node with the largest transmit weight
    (lowest id on ties); every other live node takes its idle action, i.e.
    sleeps.  With no winner the slot is idle.
    """
    n = len(queues)
    live = _alive(alive, n)
    table = energy_table(p, slot_ms)
    best, best_w = None, NEG_INF
    for i in range(n):
        if not live[i]:
            continue
        tx_w, idle_w = node_weights(queues[i], prev_modes[i], rates[i], V, table, scale_wake)
        if tx_w > idle_w and tx_w > best_w:
            best, best_w = i, tx_w
    modes = tuple(Mode.ACTIVE if i == best else (Mode.SLEEP if live[i] else prev_modes[i])
                  for i in range(n))
    return SlotDecision(modes, frozenset() if best is None else frozenset((best,)))


def _without_switching(p: EnergyParams) -> EnergyParams:
    return replace(p, e01_j=0.0, e10_j=0.0)


def benchmark_decide(queues, prev_modes, rates, V, p: EnergyParams, slot_ms,
                     alive=None, scale_wake=False) -> SlotDecision:
    """ESS with switching energies removed from its weights (still charged by the engine)."""
    return ess_decide(queues, prev_modes, rates, V, _without_switching(p), slot_ms,
                      alive, scale_wake)


def active_stay_threshold(V: float, mu: int, p: EnergyParams, slot_ms: float) -> float:
    """Backlog above which an active node prefers transmitting to falling asleep."""
    if mu <= 0:
        return math.inf
    t = energy_table(p, slot_ms)
    return V * (t.active_active(mu) - t.active_sleep()) / mu


def sleep_stay_threshold(V: float, mu: int, p: EnergyParams, slot_ms: float,
                         scale_wake: bool = False) -> float:
    """Backlog below which a sleeping node stays asleep."""
    t = energy_table(p, slot_ms)
    served = served_packets(mu, True, p, slot_ms, scale_wake)
    if served <= 0:
        return math.inf
    return V * (t.sleep_active(served) - t.sleep_sleep()) / served


def periodic_decide(t: int, queues, rates, V: float, p: EnergyParams,
                    alive=None) -> SlotDecision:
    """S-MAC style fixed schedule: asleep for the first half slot, active for the second.

    Every live node is reported Active; the engine charges the split slot.
    The transmitter maximizes ``Q*mu - V*alpha*mu`` when that is positive.
    """
    n = len(queues)
    live = _alive(alive, n)
    best, best_w = None, 0.0
    for i in range(n):
        if not live[i] or rates[i] <= 0:
            continue
        w = queues[i] * rates[i] - V * p.alpha_j_per_packet * rates[i]
        if w > best_w:
            best, best_w = i, w
    modes = tuple(Mode.ACTIVE if live[i] else Mode.SLEEP for i in range(n))
    return SlotDecision(modes, frozenset() if best is None else frozenset((best,)))


def distributed_decide(queues, prev_modes, rates, V: float, p: EnergyParams, slot_ms: float,
                       alive=None, scale_wake=False) -> SlotDecision:
    """Each node applies its own stay/wake threshold; active nodes broadcast weights.

    Several nodes may be active; the one with the largest transmit weight
    sends.
    """
    n = len(queues)
    live = _alive(alive, n)
    table = energy_table(p, slot_ms)
    modes = list(prev_modes)
    best, best_w = None, NEG_INF
    for i in range(n):
        if not live[i]:
            continue
        tx_w, idle_w = node_weights(queues[i], prev_modes[i], rates[i], V, table, scale_wake)
        if tx_w > idle_w:
            modes[i] = Mode.ACTIVE
            if tx_w > best_w:
                best, best_w = i, tx_w
        else:
            modes[i] = Mode.SLEEP
    broadcast = tuple(live[i] and modes[i] == Mode.ACTIVE for i in range(n))
    return SlotDecision(tuple(modes), frozenset() if best is None else frozenset((best,)),
                        broadcast)


def rnd_decide(params: RndPolicyParams, prev_modes, channel_states, mode_draws, tx_draws,
               alive=None) -> SlotDecision:
    """Stationary randomized policy.

    Node ``i`` in channel state ``k`` flips Sleep->Active when
    ``mode_draws[i] < p01[i][k]`` and Active->Sleep when
    ``mode_draws[i] < p10[i][k]``.  Active nodes are then offered the
    channel in id order; the first with ``tx_draws[i] < pi_tr[i][k]`` sends.
    """
    n = len(prev_modes)
    live = _alive(alive, n)
    modes = list(prev_modes)
    for i in range(n):
        if not live[i]:
            continue
        k = channel_states[i]
        if prev_modes[i] == Mode.SLEEP:
            modes[i] = Mode.ACTIVE if mode_draws[i] < params.p01[i][k] else Mode.SLEEP
        else:
            modes[i] = Mode.SLEEP if mode_draws[i] < params.p10[i][k] else Mode.ACTIVE
    tx = frozenset()
    for i in range(n):
        if live[i] and modes[i] == Mode.ACTIVE and tx_draws[i] < params.pi_tr[i][channel_states[i]]:
            tx = frozenset((i,))
            break
    return SlotDecision(tuple(modes), tx)
