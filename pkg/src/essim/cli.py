"""Command-line front end: ``essim {run,sweep,oracle,verify}``.

Configs are JSON files mirroring :class:`essim.model.SimConfig`; missing keys
take default values.  Floats in CSV output are written with 12
significant digits in scientific notation so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

from .engine import Termination, simulate
from .ensemble import run_ensemble
from .metrics import MetricsAccumulator, MetricsReport
from .model import (SWEEP_V_LIST, ChannelModel, ConfigError, ConfigErrorKind, ConfigIssue,
                    Mode, Policy, SimConfig, config_from_dict, config_to_dict, default_config,
                    validate_config)
from .oracle import GRID_STEPS, InfeasibleRate, OracleTooLarge, minimize_energy, stability_margin
from .verify import verify_bounds

SLOT_COLUMNS = ("slot", "node", "mode", "switch", "served", "arrivals", "queue", "battery_j",
                "e_sleep", "e_active", "e_tx", "e_switch", "e_bcast", "idle_flag")
BOUND_V_LIST = (1e3, 1e4, 1e5)


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """CSV cell text: floats as 12-significant-digit scientific notation."""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.11e}"
    if x is None:
        return ""
    if isinstance(x, Policy):
        return x.value
    return str(x)


def _json_default(o):
    if isinstance(o, (Policy, Termination)):
        return o.value
    raise TypeError(type(o).__name__)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default)


def bound_instance() -> SimConfig:
    """Default desk instance for ``oracle``/``verify``: one node, one 20-packet channel."""
    return default_config(node_count=1, channel=ChannelModel.single(20))


def load_config(path: Optional[str], default: Optional[SimConfig] = None) -> SimConfig:
    if path is None:
        return default if default is not None else default_config()
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError([ConfigIssue(ConfigErrorKind.BAD_VALUE,
                                       "config file must hold a JSON object")])
    return config_from_dict(data)


def _floats(text: str, what: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}")
    if not vals:
        raise UsageError(f"{what} must not be empty")
    return vals


def parse_v_list(text: str) -> list[float]:
    vals = _floats(text, "--v-list")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise UsageError("--v-list must be strictly increasing")
    if any(v < 0 for v in vals):
        raise UsageError("--v-list values must be non-negative")
    return vals


def parse_policies(text: str) -> list[Policy]:
    names = [x.strip() for x in text.split(",") if x.strip()]
    if not names:
        raise UsageError("--policies must not be empty")
    try:
        return [Policy.parse(n) for n in names]
    except ValueError as e:
        raise UsageError(str(e))


def _overrides(cfg: SimConfig, args) -> SimConfig:
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "horizon", None) is not None:
        changes["horizon_slots"] = args.horizon
    if getattr(args, "infinite_battery", False):
        changes["infinite_battery"] = True
    return cfg.with_(**changes) if changes else cfg


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- run ---------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = _overrides(load_config(args.config), args)
    if args.policies:
        pols = parse_policies(args.policies)
        if len(pols) != 1:
            raise UsageError("run takes a single policy")
        cfg = cfg.with_(policy=pols[0])
    if args.v_list:
        vs = parse_v_list(args.v_list)
        if len(vs) != 1:
            raise UsageError("run takes a single V")
        cfg = cfg.with_(v_param=vs[0])
    validate_config(cfg)
    out = _out_dir(args)
    acc = MetricsAccumulator(cfg.node_count)
    with open(out / "slots.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SLOT_COLUMNS)

        def emit(r):
            acc.add(r)
            idle = r.idle
            for n in range(cfg.node_count):
                e = r.energy[n]
                w.writerow([fmt(v) for v in (
                    r.slot, n, Mode(r.modes[n]).name.capitalize(),
                    r.prev_modes[n] != r.modes[n], r.served[n], r.arrivals[n], r.queues[n],
                    float(r.battery[n]), float(e.sleep_j), float(e.active_circuit_j),
                    float(e.transmission_j), float(e.switching_j), float(e.broadcast_j), idle)])

        summary = simulate(cfg, emit)
    report = acc.report(summary.death_slots)
    doc = {"config": config_to_dict(cfg), "termination": summary.termination.value,
           "slots": summary.slots, "death_slots": summary.death_slots,
           "metrics": asdict(report)}
    (out / "metrics.json").write_text(_json(doc) + "\n", encoding="utf-8")
    print(f"wrote {out / 'slots.csv'} and {out / 'metrics.json'} ({summary.slots} slots, "
          f"{summary.termination.value})")
    return 0


# -- sweep -------------------------------------------------------------------

def _run_group(cfgs: list[SimConfig]) -> list[tuple[MetricsReport, Termination]]:
    if cfgs[0].policy is Policy.RND:
        out = []
        for c in cfgs:
            acc = MetricsAccumulator(c.node_count)
            s = simulate(c, acc.add)
            out.append((acc.report(s.death_slots), s.termination))
        return out
    return [(rep, term) for rep, _, term in run_ensemble(cfgs)]


def sweep_rows(base: SimConfig, policies: Sequence[Policy], v_list: Sequence[float],
               seeds: Sequence[int], jobs: int = 1) -> list[dict]:
    """One row per (policy, V, seed) in that order; seeds are shared across policies."""
    groups = [[base.with_(policy=p, v_param=float(v), seed=s) for v in v_list for s in seeds]
              for p in policies]
    for g in groups:
        for c in g:
            validate_config(c)
    if jobs > 1 and len(groups) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_group, groups))
    else:
        results = [_run_group(g) for g in groups]
    rows = []
    for g, res in zip(groups, results):
        for c, (rep, term) in zip(g, res):
            row = {"policy": c.policy.value, "v_param": c.v_param, "seed": c.seed,
                   "termination": term.value}
            row.update(rep.as_row())
            rows.append(row)
    return rows


def cmd_sweep(args) -> int:
    base = _overrides(load_config(args.config), args)
    v_list = parse_v_list(args.v_list) if args.v_list is not None else list(SWEEP_V_LIST)
    policies = parse_policies(args.policies) if args.policies is not None else [base.policy]
    if args.seeds < 1:
        raise UsageError("--seeds must be at least 1")
    seeds = [base.seed + i for i in range(args.seeds)]
    rows = sweep_rows(base, policies, v_list, seeds, args.jobs)
    out = _out_dir(args)
    with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        cols = list(rows[0])
        w.writerow(cols)
        for r in rows:
            w.writerow([fmt(r[c]) for c in cols])
    print(f"wrote {out / 'sweep.csv'} ({len(rows)} rows)")
    return 0


# -- oracle / verify -----------------------------------------------------------

def _targets(args) -> Optional[list[float]]:
    return None if args.target is None else _floats(args.target, "--lambda")


def cmd_oracle(args) -> int:
    cfg = load_config(args.config, bound_instance())
    lam = _targets(args)
    res = minimize_energy(cfg, lam, args.grid_step)
    doc = res.to_dict()
    doc["stability_margin"] = stability_margin(cfg, lam, args.grid_step)
    text = _json(doc)
    print(text)
    if args.out:
        (_out_dir(args) / "oracle.json").write_text(text + "\n", encoding="utf-8")
    return 0


def cmd_verify(args) -> int:
    cfg = _overrides(load_config(args.config, bound_instance()), args)
    v_list = parse_v_list(args.v_list) if args.v_list is not None else list(BOUND_V_LIST)
    horizon = args.horizon if args.horizon is not None else 1_000_000
    rep = verify_bounds(cfg, v_list, horizon, args.grid_step, target_rates=_targets(args))
    print(f"h*={rep.h_star_j_per_slot:.6g} J/slot  eps={rep.stability_margin:.6g}  "
          f"B={rep.B:.6g}  h_max={rep.h_max_j_per_slot:.6g} J/slot")
    for c in rep.checks:
        print(c.line())
    if args.out:
        (_out_dir(args) / "verify.json").write_text(_json(rep.to_dict()) + "\n",
                                                    encoding="utf-8")
    return 0 if rep.ok else 1


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="essim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", help="JSON config (defaults apply to missing keys)")
        p.add_argument("--out", required=out_required, help="output directory")
        p.add_argument("--seed", type=int, help="base seed (u64)")
        p.add_argument("--horizon", type=int, help="slots to simulate")
        p.add_argument("--infinite-battery", action="store_true",
                       help="disable battery depletion (needs --horizon)")

    p = sub.add_parser("run", help="one run: slots.csv and metrics.json")
    common(p)
    p.add_argument("--policies", help="policy to run (one name)")
    p.add_argument("--v-list", help="V to run (one value)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="metrics for every (policy, V, seed)")
    common(p)
    p.add_argument("--v-list", help="comma-separated, strictly increasing")
    p.add_argument("--policies", help="comma-separated policy names")
    p.add_argument("--seeds", type=int, default=1, help="number of paired seeds")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    for name, func, help_ in (("oracle", cmd_oracle, "minimum-energy randomized policy"),
                              ("verify", cmd_verify, "check energy and backlog bounds")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON config (default: 1 node, 20-packet channel)")
        p.add_argument("--out", help="also write JSON here")
        p.add_argument("--lambda", dest="target", help="comma-separated per-node rates")
        p.add_argument("--grid-step", type=float, default=0.02, choices=GRID_STEPS)
        if name == "verify":
            p.add_argument("--v-list", help="comma-separated V values")
            p.add_argument("--horizon", type=int, help="slots per V (default 1e6)")
            p.add_argument("--seed", type=int)
        p.set_defaults(func=func)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        ap.error(str(e))
    except (ConfigError, InfeasibleRate, OracleTooLarge, ValueError, OSError) as e:
        print(f"essim {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
