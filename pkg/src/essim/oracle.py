"""Brute-force minimum-energy stationary randomized policy.

Each node runs a two-state sleep/active chain whose transition
probabilities are picked by the channel state it observes in the slot;
because channels are i.i.d. the mode sequence is itself a Markov chain
with ``P(S->A) = sum_k pi_k p01_k`` and ``P(A->S) = sum_k pi_k p10_k``.
Active nodes are offered the channel in id order and transmit with
probability ``pi_tr``.  Nodes' chains are independent, so energy and
throughput have a closed form for any node count; :func:`evaluate_rnd`
can also estimate them by simulation as a cross-check.

:func:`minimize_energy` evaluates that closed form at every point of a
regular grid over all ``(p01, p10, pi_tr)`` entries and keeps the cheapest
point that serves the target rates.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .energy import energy_table, served_packets
from .engine import simulate
from .metrics import MetricsAccumulator
from .model import Policy, RndPolicyParams, SimConfig, validate_config

GRID_STEPS = (0.1, 0.05, 0.02, 0.01)
MAX_GRID_POINTS = 100_000_000
CHUNK = 1 << 18
RATE_TOL = 1e-9


class InfeasibleRate(ValueError):
    pass


class OracleTooLarge(ValueError):
    pass


class EvalMode(str, enum.Enum):
    CLOSED_FORM = "ClosedForm"
    SIMULATED = "Simulated"


@dataclass(frozen=True)
class OracleResult:
    h_star_j_per_slot: float
    best_params: RndPolicyParams
    achieved_rates: tuple[float, ...]
    grid_step: float
    evaluation_mode: EvalMode = EvalMode.CLOSED_FORM

    def to_dict(self) -> dict:
        return {
            "h_star_j_per_slot": self.h_star_j_per_slot,
            "best_params": {k: [list(r) for r in getattr(self.best_params, k)]
                            for k in ("p01", "p10", "pi_tr")},
            "achieved_rates": list(self.achieved_rates),
            "grid_step": self.grid_step,
            "evaluation_mode": self.evaluation_mode.value,
        }


def _closed_form(p01, p10, pi_tr, cfg: SimConfig):
    """Vectorized steady-state energy and rates.

    ``p01``, ``p10``, ``pi_tr`` have shape ``(..., nodes, states)``; returns
    ``(energy[...], rates[..., nodes])``.
    """
    tab = energy_table(cfg.energy, cfg.slot_ms)
    probs = np.asarray(cfg.channel.probabilities, dtype=float)
    mu = np.asarray(cfg.channel.rates, dtype=float)
    mu_wake = np.asarray([served_packets(r, True, cfg.energy, cfg.slot_ms,
                                         cfg.wake_slot_rate_scaling)
                          for r in cfg.channel.rates], dtype=float)
    a = (p01 * probs).sum(-1)
    b = (p10 * probs).sum(-1)
    s = a + b
    safe = np.where(s > 0, s, 1.0)
    pa = np.where(s > 0, a / safe, 0.0)
    ps = np.where(s > 0, b / safe, 1.0)
    pa_k, ps_k = pa[..., None], ps[..., None]
    wake = ps_k * p01
    stay = pa_k * (1.0 - p10)
    mode_energy = (probs * (ps_k * (p01 * (tab.sa_active + tab.sa_switch)
                                    + (1.0 - p01) * tab.ss_sleep)
                            + pa_k * (p10 * (tab.as_sleep + tab.as_switch)
                                      + (1.0 - p10) * tab.aa_active))).sum(-1)
    attempt = (probs * (wake + stay) * pi_tr).sum(-1)
    offered = (probs * pi_tr * (wake * mu_wake + stay * mu)).sum(-1)
    # node n only gets the channel if every lower id stayed silent
    free = np.cumprod(1.0 - attempt, axis=-1)
    free = np.concatenate([np.ones_like(free[..., :1]), free[..., :-1]], axis=-1)
    rates = free * offered
    energy = (mode_energy + tab.alpha * rates).sum(-1)
    return energy, rates


def evaluate_rnd(params: RndPolicyParams, cfg: SimConfig,
                 eval_mode: EvalMode = EvalMode.CLOSED_FORM,
                 slots: int = 100_000) -> tuple[float, tuple[float, ...]]:
    """Average network energy per slot and per-node service rate under RND."""
    issues = params.issues(cfg.node_count, len(cfg.channel.states))
    if issues:
        raise ValueError("; ".join(str(i) for i in issues))
    if EvalMode(eval_mode) is EvalMode.CLOSED_FORM:
        arr = lambda x: np.asarray(x, dtype=float)
        energy, rates = _closed_form(arr(params.p01), arr(params.p10), arr(params.pi_tr), cfg)
        return float(energy), tuple(float(r) for r in rates)
    sim_cfg = cfg.with_(policy=Policy.RND, rnd_params=params, infinite_battery=True,
                        horizon_slots=max(int(slots), 1), stop_at_first_death=False)
    acc = MetricsAccumulator(cfg.node_count)
    summary = simulate(sim_cfg, acc.add)
    rep = acc.report(summary.death_slots)
    return rep.avg_total_energy_j_per_slot, rep.node_throughput_packets_per_slot


def _grid(step: float) -> np.ndarray:
    count = int(round(1.0 / step))
    if not math.isclose(count * step, 1.0, rel_tol=1e-9):
        raise ValueError(f"grid_step {step} does not divide 1")
    return np.linspace(0.0, 1.0, count + 1)


class _GridScan:
    """Chunked enumeration of every (p01, p10, pi_tr) grid point."""

    def __init__(self, cfg: SimConfig, grid_step: float, max_points: int):
        if cfg.node_count > 2 or len(cfg.channel.states) > 3:
            raise OracleTooLarge("the oracle handles at most 2 nodes and 3 channel states")
        self.cfg = cfg
        self.values = _grid(grid_step)
        self.N, self.K = cfg.node_count, len(cfg.channel.states)
        self.dims = 3 * self.N * self.K
        self.total = len(self.values) ** self.dims
        if self.total > max_points:
            raise OracleTooLarge(
                f"{self.total:.3g} grid points exceed max_points={max_points:.3g}; "
                "use a coarser grid_step")

    def chunks(self):
        G, shape = len(self.values), (len(self.values),) * self.dims
        for start in range(0, self.total, CHUNK):
            idx = np.arange(start, min(start + CHUNK, self.total), dtype=np.int64)
            digits = np.stack(np.unravel_index(idx, shape), axis=-1)
            v = self.values[digits].reshape(len(idx), 3, self.N, self.K)
            energy, rates = _closed_form(v[:, 0], v[:, 1], v[:, 2], self.cfg)
            # pi_tr must sum to at most 1 over nodes in every channel state
            ok = (v[:, 2].sum(axis=1) <= 1.0 + 1e-12).all(axis=-1)
            yield v, energy, rates, ok

    @staticmethod
    def params(v: np.ndarray) -> RndPolicyParams:
        t = lambda m: tuple(tuple(float(x) for x in row) for row in m)
        return RndPolicyParams(t(v[0]), t(v[1]), t(v[2]))


def _target(cfg: SimConfig, target_rates: Optional[Sequence[float]]) -> np.ndarray:
    lam = cfg.arrival_rates if target_rates is None else tuple(target_rates)
    if len(lam) != cfg.node_count:
        raise ValueError("need one target rate per node")
    return np.asarray(lam, dtype=float)


def minimize_energy(cfg: SimConfig, target_rates: Optional[Sequence[float]] = None,
                    grid_step: float = 0.05,
                    max_points: int = MAX_GRID_POINTS) -> OracleResult:
    """Cheapest grid policy whose per-node service rate covers ``target_rates``.

    ``target_rates`` defaults to the config's mean arrival rates.
    """
    validate_config(cfg)
    lam = _target(cfg, target_rates)
    scan = _GridScan(cfg, grid_step, max_points)
    best_e, best = math.inf, None
    for v, energy, rates, ok in scan.chunks():
        feasible = ok & (rates >= lam - RATE_TOL).all(axis=-1)
        if not feasible.any():
            continue
        e = np.where(feasible, energy, np.inf)
        # exact ties go to the last grid point, so absorbing corners report p01 = 1
        i = len(e) - 1 - int(np.argmin(e[::-1]))
        if e[i] <= best_e:
            best_e, best = float(e[i]), (v[i], rates[i])
    if best is None:
        raise InfeasibleRate(f"no grid policy at step {grid_step} serves rates {lam.tolist()}")
    return OracleResult(best_e, scan.params(best[0]), tuple(float(r) for r in best[1]),
                        grid_step)


def stability_margin(cfg: SimConfig, target_rates: Optional[Sequence[float]] = None,
                     grid_step: float = 0.05, max_points: int = MAX_GRID_POINTS) -> float:
    """Largest ``eps`` such that some grid policy serves ``target_rates + eps`` on every node."""
    validate_config(cfg)
    lam = _target(cfg, target_rates)
    scan = _GridScan(cfg, grid_step, max_points)
    best = -math.inf
    for _, _, rates, ok in scan.chunks():
        slack = np.where(ok, (rates - lam).min(axis=-1), -np.inf)
        best = max(best, float(slack.max()))
    if best < -RATE_TOL:
        raise InfeasibleRate(f"rates {lam.tolist()} are outside the grid-feasible region")
    return max(best, 0.0)
