"""Vectorized runner for many replicas of one experiment.

Sweeps (several V values times several seeds) are run as one batch: the
state of every replica lives in ``(replicas, nodes)`` numpy arrays and the
slot loop advances them together.  Arithmetic mirrors the scalar engine
operation for operation, so each replica's :class:`MetricsReport` is
identical to ``aggregate(run(cfg))``; the test-suite holds the two routes
to that.

RND is not supported here; its randomness is consumed per node by the
scalar engine only.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Optional, Sequence

import numpy as np

from .energy import energy_table
from .engine import Termination
from .metrics import MetricsAccumulator, MetricsReport
from .model import Mode, Policy, SimConfig, validate_config
from .stochastic import BLOCK, Environment

_SHARED = ("node_count", "slot_ms", "initial_battery_j", "policy", "energy", "channel",
           "arrivals", "wake_slot_rate_scaling", "infinite_battery", "stop_at_first_death")


def _check_batch(cfgs: Sequence[SimConfig]) -> None:
    base = cfgs[0]
    for c in cfgs:
        validate_config(c)
        for name in _SHARED:
            if getattr(c, name) != getattr(base, name):
                raise ValueError(f"ensemble members must share {name}")
        if c.horizon_slots is None and c.infinite_battery:
            raise ValueError("an infinite-battery run needs a finite horizon_slots")
    if base.policy is Policy.RND:
        raise ValueError("RND runs use engine.run")


class _Accumulators:
    """Per-replica counterparts of MetricsAccumulator fields."""

    def __init__(self, R: int, N: int):
        z_i = lambda: np.zeros((R, N), dtype=np.int64)
        z_f = lambda: np.zeros((R, N), dtype=np.float64)
        self.alive_slots, self.active_slots, self.q_alive, self.q_all, self.served = (
            z_i(), z_i(), z_i(), z_i(), z_i())
        self.e_sleep, self.e_circuit, self.e_tx, self.e_switch, self.e_bcast = (
            z_f(), z_f(), z_f(), z_f(), z_f())
        self.slots = np.zeros(R, dtype=np.int64)
        self.idle = np.zeros(R, dtype=np.int64)
        self.run_node = np.full(R, -1, dtype=np.int64)
        self.run_len = np.zeros(R, dtype=np.int64)
        self.bursts = np.zeros(R, dtype=np.int64)
        self.burst_slots = np.zeros(R, dtype=np.int64)


def run_ensemble(cfgs: Sequence[SimConfig]) -> list[tuple[MetricsReport, list[Optional[int]], Termination]]:
    """Run every config; return ``(report, death_slots, termination)`` per config."""
    cfgs = list(cfgs)
    if not cfgs:
        return []
    _check_batch(cfgs)
    base = cfgs[0]
    R, N = len(cfgs), base.node_count
    p = base.energy
    tab = energy_table(p, base.slot_ms)
    scale = base.wake_slot_rate_scaling
    policy = base.policy
    rate_of = np.asarray(base.channel.rates, dtype=np.int64)

    seeds = sorted({c.seed for c in cfgs})
    envs = {s: Environment(replace(base, seed=s)) for s in seeds}
    seed_row = np.array([seeds.index(c.seed) for c in cfgs])
    V = np.array([float(c.v_param) for c in cfgs])[:, None]
    horizon = np.array([np.iinfo(np.int64).max if c.horizon_slots is None else c.horizon_slots
                        for c in cfgs])

    Q = np.zeros((R, N), dtype=np.int64)
    mode = np.zeros((R, N), dtype=np.int8)
    battery = np.full((R, N), np.inf if base.infinite_battery else float(base.initial_battery_j))
    alive = np.ones((R, N), dtype=bool)
    running = horizon > 0
    deaths = np.full((R, N), -1, dtype=np.int64)
    termination = [Termination.HORIZON_REACHED] * R
    acc = _Accumulators(R, N)
    rows = np.arange(R)
    wake_served = lambda mu: (np.floor(mu * (base.slot_ms - p.t01_ms) / base.slot_ms).astype(np.int64)
                              if scale else mu)
    decide_tab = energy_table(replace(p, e01_j=0.0, e10_j=0.0), base.slot_ms) \
        if policy is Policy.BENCHMARK else tab

    t = 0
    block_id, chan_blk, arr_blk = -1, None, None
    while running.any():
        b, off = divmod(t, BLOCK)
        if b != block_id:
            per_seed = [envs[s].block(b) for s in seeds]
            chan_blk = np.stack([per_seed[i][0] for i in range(len(seeds))])[seed_row]
            arr_blk = np.stack([per_seed[i][1] for i in range(len(seeds))])[seed_row]
            block_id = b
        chan = chan_blk[:, off, :]
        mu = rate_of[chan]
        arrivals = arr_blk[:, off, :]
        live = alive & running[:, None]
        active_prev = mode == Mode.ACTIVE

        bcast = np.zeros((R, N), dtype=bool)
        if policy is Policy.PERIODIC:
            w = Q * mu - V * p.alpha_j_per_packet * mu
            w = np.where(live & (mu > 0), w, -np.inf)
            best = np.argmax(w, axis=1)
            has = w[rows, best] > 0.0
            new_mode = np.where(live, Mode.ACTIVE, mode).astype(np.int8)
        else:
            served_w = wake_served(mu)
            tx_w = np.where(active_prev,
                            Q * mu - V * (decide_tab.aa_active + decide_tab.alpha * mu),
                            Q * served_w - V * ((decide_tab.sa_active + decide_tab.alpha * served_w)
                                                + decide_tab.sa_switch))
            can = np.where(active_prev, mu > 0, served_w > 0)
            tx_w = np.where(can, tx_w, -np.inf)
            idle_w = np.where(active_prev, -V * (decide_tab.as_sleep + decide_tab.as_switch),
                              -V * decide_tab.ss_sleep)
            wins = live & (tx_w > idle_w)
            masked = np.where(wins, tx_w, -np.inf)
            best = np.argmax(masked, axis=1)
            has = wins[rows, best]
            if policy is Policy.DISTRIBUTED:
                new_mode = np.where(live, np.where(wins, Mode.ACTIVE, Mode.SLEEP), mode).astype(np.int8)
                bcast = live & wins
            else:
                new_mode = np.where(live, Mode.SLEEP, mode).astype(np.int8)
                new_mode[rows[has], best[has]] = Mode.ACTIVE
        sending = np.zeros((R, N), dtype=bool)
        sending[rows[has], best[has]] = True

        # energy components, summed in the scalar engine's order
        if policy is Policy.PERIODIC:
            per_served = (np.floor(mu * max(base.slot_ms / 2 - p.t01_ms, 0.0) / base.slot_ms)
                          .astype(np.int64) if scale else mu)
            served = np.where(sending, per_served, 0)
            e_sleep = np.full((R, N), tab.per_sleep)
            e_circ = np.full((R, N), tab.per_active)
            e_tx = tab.alpha * served
            e_sw = np.full((R, N), tab.per_switch)
        else:
            waking = ~active_prev & (new_mode == Mode.ACTIVE)
            served = np.where(sending, np.where(~active_prev, wake_served(mu), mu), 0)
            to_sleep = new_mode == Mode.SLEEP
            e_sleep = np.where(to_sleep, np.where(active_prev, tab.as_sleep, tab.ss_sleep), 0.0)
            e_circ = np.where(to_sleep, 0.0, np.where(active_prev, tab.aa_active, tab.sa_active))
            e_tx = np.where(to_sleep, 0.0, tab.alpha * served)
            e_sw = np.where(to_sleep, np.where(active_prev, tab.as_switch, 0.0),
                            np.where(waking, tab.sa_switch, 0.0))
        e_b = np.where(bcast, 0.0 + tab.broadcast, 0.0)
        total = e_sleep + e_circ + e_tx + e_sw + e_b

        new_batt = battery - total
        frozen = live & (new_batt < 0)
        ok = live & ~frozen
        z = lambda x: np.where(ok, x, 0)

        # accumulate metrics on pre-slot state
        r_mask = running[:, None]
        acc.slots += running
        acc.q_all += np.where(r_mask, Q, 0)
        acc.alive_slots += live
        acc.q_alive += np.where(live, Q, 0)
        final_mode = np.where(ok, new_mode, mode)
        acc.active_slots += live & (final_mode == Mode.ACTIVE)
        acc.e_sleep += z(e_sleep)
        acc.e_circuit += z(e_circ)
        acc.e_tx += z(e_tx)
        acc.e_switch += z(e_sw)
        acc.e_bcast += z(e_b)
        actual_tx = sending & ok
        has_tx = actual_tx.any(axis=1)
        tx_node = np.where(has_tx, np.argmax(actual_tx, axis=1), -1)
        acc.idle += running & ~has_tx
        same = running & has_tx & (tx_node == acc.run_node)
        change = running & ~same
        close = change & (acc.run_len >= 2)
        acc.bursts += close
        acc.burst_slots += np.where(close, acc.run_len, 0)
        acc.run_len = np.where(same, acc.run_len + 1,
                               np.where(change, np.where(has_tx, 1, 0), acc.run_len))
        acc.run_node = np.where(change, tx_node, acc.run_node)

        # state update
        served_ok = np.where(ok, served, 0)
        acc.served += served_ok
        Q = np.where(ok, np.maximum(Q - served_ok, 0) + arrivals, Q)
        battery = np.where(ok, new_batt, battery)
        mode = final_mode.astype(np.int8)
        died_paid = ok & ~(new_batt > 0)
        newly_dead = died_paid | frozen
        deaths = np.where(died_paid, t + 1, np.where(frozen, t, deaths))
        alive = alive & ~newly_dead

        t += 1
        done_h = running & (t >= horizon)
        all_dead = running & ~alive.any(axis=1)
        first = running & (newly_dead.any(axis=1) | (deaths >= 0).any(axis=1)) \
            if base.stop_at_first_death else np.zeros(R, dtype=bool)
        for r in np.flatnonzero(all_dead):
            termination[r] = Termination.NETWORK_DEAD
        for r in np.flatnonzero(first & ~all_dead):
            termination[r] = Termination.FIRST_DEATH
        running = running & ~(done_h | all_dead | first)

    out = []
    for r in range(R):
        m = MetricsAccumulator(N)
        m.slots = int(acc.slots[r])
        m.idle_slots = int(acc.idle[r])
        for name in ("alive_slots", "active_slots", "q_alive", "q_all", "served"):
            setattr(m, name, [int(x) for x in getattr(acc, name)[r]])
        for name in ("e_sleep", "e_circuit", "e_tx", "e_switch", "e_bcast"):
            setattr(m, name, [float(x) for x in getattr(acc, name)[r]])
        m.burst_count = int(acc.bursts[r])
        m.burst_slots = int(acc.burst_slots[r])
        m._run_node = int(acc.run_node[r]) if acc.run_node[r] >= 0 else None
        m._run_len = int(acc.run_len[r])
        d = [int(x) if x >= 0 else None for x in deaths[r]]
        out.append((m.report(d), d, termination[r]))
    return out
