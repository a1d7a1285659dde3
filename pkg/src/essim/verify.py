"""Check measured energy and backlog against the drift-plus-penalty bounds.

For a stabilizable rate vector the scheduler should satisfy

* time-average energy  <= h* + B/V
* time-average total backlog <= (B + V*h_max) / eps

where ``h*`` and ``eps`` come from :mod:`essim.oracle`.  Both sides carry a
relative slack to absorb grid and sampling error.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Sequence

from .energy import h_max
from .engine import simulate
from .metrics import MetricsAccumulator, MetricsReport
from .model import SimConfig, compute_B, validate_config
from .oracle import minimize_energy, stability_margin

DEFAULT_SLACK = 0.05


@dataclass(frozen=True)
class BoundCheck:
    name: str
    v_param: float
    bound: Optional[float]
    measured: float
    passed: Optional[bool]  # None means skipped
    notice: str = ""

    @property
    def verdict(self) -> str:
        return "SKIP" if self.passed is None else ("PASS" if self.passed else "FAIL")

    def line(self) -> str:
        b = "n/a" if self.bound is None else f"{self.bound:.6g}"
        tail = f" ({self.notice})" if self.notice else ""
        return f"{self.verdict} {self.name} V={self.v_param:g} measured={self.measured:.6g} bound={b}{tail}"


@dataclass(frozen=True)
class VerifyReport:
    h_star_j_per_slot: float
    stability_margin: float
    B: float
    h_max_j_per_slot: float
    checks: tuple[BoundCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["checks"] = [dict(asdict(c), verdict=c.verdict) for c in self.checks]
        d["ok"] = self.ok
        return d


def measure(cfg: SimConfig) -> MetricsReport:
    acc = MetricsAccumulator(cfg.node_count)
    summary = simulate(cfg, acc.add)
    return acc.report(summary.death_slots)


def energy_check(v: float, measured: float, h_star: float, B: float,
                 slack: float = DEFAULT_SLACK) -> BoundCheck:
    if v <= 0:
        return BoundCheck("energy", v, None, measured, None, "B/V undefined at V=0; skipped")
    bound = (h_star + B / v) * (1 + slack)
    return BoundCheck("energy", v, bound, measured, measured <= bound)


def backlog_check(v: float, measured: float, eps: float, B: float, hmax: float,
                  slack: float = DEFAULT_SLACK) -> BoundCheck:
    if eps <= 0:
        return BoundCheck("backlog", v, None, measured, None,
                          "stability margin is 0; bound is infinite")
    bound = (B + v * hmax) / eps * (1 + slack)
    return BoundCheck("backlog", v, bound, measured, measured <= bound)


def verify_bounds(cfg: SimConfig, v_list: Sequence[float], horizon_slots: int = 1_000_000,
                  grid_step: float = 0.02, slack: float = DEFAULT_SLACK,
                  target_rates: Optional[Sequence[float]] = None) -> VerifyReport:
    """Simulate ``cfg`` (infinite battery) at each V and test both bounds.

    Raises :class:`essim.oracle.InfeasibleRate` when the arrival rates are not
    grid-feasible.
    """
    validate_config(cfg)
    oracle = minimize_energy(cfg, target_rates, grid_step)
    eps = stability_margin(cfg, target_rates, grid_step)
    B, hmax = compute_B(cfg), h_max(cfg)
    checks = []
    for v in v_list:
        run_cfg = cfg.with_(v_param=float(v), infinite_battery=True,
                            horizon_slots=int(horizon_slots), stop_at_first_death=False)
        rep = measure(run_cfg)
        checks.append(energy_check(v, rep.avg_total_energy_j_per_slot,
                                   oracle.h_star_j_per_slot, B, slack))
        checks.append(backlog_check(v, rep.avg_queue_backlog_packets, eps, B, hmax, slack))
    return VerifyReport(oracle.h_star_j_per_slot, eps, B, hmax, tuple(checks))
