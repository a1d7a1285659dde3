"""Acceptance harness: one PASS/FAIL line per criterion.

Each test records its verdict (with the measured numbers) before asserting,
so the summary printed at the end of the session lists every criterion even
when some of them fail.  Expected values come from ``reference`` or from the
hand arithmetic written out below, never from the package under test.
"""

import csv
import io
import math
import time
from contextlib import redirect_stdout
from dataclasses import replace

import pytest

from conftest import ACCEPTANCE_LINES
from essim.cli import bound_instance, main
from essim.energy import h_max, slot_energy
from essim.engine import run, step
from essim.ensemble import run_ensemble
from essim.metrics import mean_ci95, monotone_with_tolerance
from essim.model import (COMPARISON_V_LIST, SWEEP_V_LIST, ArrivalModel, ChannelModel, Mode,
                         NodeState, Policy, compute_B, default_config)
from essim.policies import SlotDecision
from essim.verify import verify_bounds

import reference as ref

SEEDS = range(10)
ULP = 1e-14  # a few units in the last place


def _letter(m):
    return "A" if m == Mode.ACTIVE else "S"


def _record(k, name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  #{k:<2} {name}: {detail}"
    ACCEPTANCE_LINES[k] = line
    print(line)
    return ok


def _stat(reports, field):
    return mean_ci95([getattr(r, field) for r in reports])


def _series(by_v, field):
    pairs = [_stat(by_v[v], field) for v in sorted(by_v)]
    return [m for m, _ in pairs], [h for _, h in pairs]


# -- 1: exactness --------------------------------------------------------------

def test_1_exactness():
    t0 = time.perf_counter()
    fails = []
    p, slot = default_config().energy, 2.0

    def near(label, got, want):
        if not math.isclose(got, want, rel_tol=ULP, abs_tol=0.0):
            fails.append(f"{label} {got!r} != {want!r}")

    S, A = Mode.SLEEP, Mode.ACTIVE
    near("sleep slot", slot_energy(S, S, 0, False, p, slot).total_j, 3.0e-8)
    near("drain slot", slot_energy(A, S, 0, False, p, slot).total_j, 2.87985e-6)
    near("active slot mu=20", slot_energy(A, A, 20, True, p, slot).total_j, 6.72e-4)
    near("wake slot mu=20", slot_energy(S, A, 20, True, p, slot).total_j,
         25.2e-6 + 1.3 * 36e-6 + 20 * 30e-6)
    near("idle active slot", slot_energy(A, A, 0, False, p, slot).total_j, 72e-6)
    for mu in (0, 5, 12, 20):
        for prev in (S, A):
            got = slot_energy(prev, A, mu, mu > 0, p, slot).total_j
            near(f"{prev}->A mu={mu}", got, ref.slot_cost(_letter(prev), "A", mu))

    for n, mu, r in ((5, 20, 8), (1, 20, 8), (3, 12, 0)):
        want = ref.drift_B(n, mu, r)
        got = compute_B(default_config(node_count=n, channel=ChannelModel.single(mu),
                                       arrivals=ArrivalModel.constant(r)))
        if got != want:
            fails.append(f"B n={n}: {got} != {want}")
    if compute_B(default_config()) != 5 * (20 ** 2 + 8 ** 2) / 2:
        fails.append("B default")

    # queue update max(Q - mu, 0) + R on a hand-built slot
    states = [NodeState(0, A, A, 7, 1.0), NodeState(1, S, S, 30, 1.0), NodeState(2, A, A, 3, 1.0)]
    dec = SlotDecision((A, S, A), frozenset({2}))
    new, _ = step(states, dec, (20, 20, 5), (8, 0, 1), p, slot)
    if [s.queue_packets for s in new] != [7 + 8, 30, max(3 - 5, 0) + 1]:
        fails.append(f"queue update {[s.queue_packets for s in new]}")
    dec = SlotDecision((A, S, A), frozenset({0}))
    new, _ = step(states, dec, (20, 20, 5), (8, 0, 1), p, slot)
    if [s.queue_packets for s in new] != [0 + 8, 30, 3 + 1]:
        fails.append(f"queue update {[s.queue_packets for s in new]}")

    dt = time.perf_counter() - t0
    ok = not fails and dt < 1.0
    _record(1, "exactness suite", ok, f"{len(fails)} mismatches, {dt:.3f} s" +
            (f" ({'; '.join(fails)})" if fails else ""))
    assert ok, fails


# -- 2 and 3: time-average bounds ----------------------------------------------

@pytest.fixture(scope="module")
def bound_report():
    cfg = bound_instance()
    t0 = time.perf_counter()
    rep = verify_bounds(cfg, [1e3, 1e4, 1e5], horizon_slots=1_000_000, grid_step=0.02, slack=0.05)
    return cfg, rep, time.perf_counter() - t0


def test_2_energy_bound(bound_report):
    cfg, rep, dt = bound_report
    assert rep.B == ref.drift_B(1, 20, 8)
    assert math.isclose(h_max(cfg), ref.slot_cost("S", "A", 20), rel_tol=ULP)
    checks = [c for c in rep.checks if c.name == "energy"]
    ok = len(checks) == 3 and all(c.passed for c in checks)
    detail = ", ".join(f"V={c.v_param:g} {c.measured:.4e} <= {c.bound:.4e}" for c in checks)
    _record(2, "energy <= (h* + B/V)*1.05", ok, f"h*={rep.h_star_j_per_slot:.6e}; {detail}; {dt:.0f} s for #2+#3")
    assert ok


def test_3_backlog_bound(bound_report):
    _, rep, _ = bound_report
    checks = [c for c in rep.checks if c.name == "backlog"]
    ok = len(checks) == 3 and all(c.passed for c in checks)
    detail = ", ".join(f"V={c.v_param:g} {c.measured:.2f} <= {c.bound:.4g}" for c in checks)
    _record(3, "backlog <= (B + V*h_max)/eps*1.05", ok, f"eps={rep.stability_margin:g}; {detail}")
    assert ok


# -- 4, 5, 6: V sweep to network death -------------------------------------------

@pytest.fixture(scope="module")
def sweep():
    base = default_config()
    cfgs = [base.with_(v_param=float(v), seed=s) for v in SWEEP_V_LIST for s in SEEDS]
    t0 = time.perf_counter()
    out = run_ensemble(cfgs)
    by_v = {}
    for cfg, (rep, _, _) in zip(cfgs, out):
        by_v.setdefault(cfg.v_param, []).append(rep)
    return by_v, time.perf_counter() - t0


def test_4_tradeoff_monotone(sweep):
    by_v, dt = sweep
    e_m, e_h = _series(by_v, "avg_total_energy_j_per_slot")
    q_m, q_h = _series(by_v, "avg_queue_backlog_packets")
    e_ok, e_inv = monotone_with_tolerance(e_m, e_h, "nonincreasing")
    q_ok, q_inv = monotone_with_tolerance(q_m, q_h, "nondecreasing")
    ok = e_ok and q_ok and dt < 300
    _record(4, "energy nonincreasing / backlog nondecreasing in V", ok,
            f"energy {['%.5e' % m for m in e_m]} inversions {e_inv}; "
            f"backlog {['%.1f' % m for m in q_m]} inversions {q_inv}; {dt:.0f} s")
    assert ok


def test_5_duty_cycle(sweep):
    by_v, _ = sweep
    d_m, d_h = _series(by_v, "duty_cycle_fraction")
    mono, inv = monotone_with_tolerance(d_m, d_h, "nonincreasing", strict=True)
    top = d_m[-1]
    ok = mono and top <= 0.16
    _record(5, "duty cycle <= 0.16 at V=80000, strictly decreasing", ok,
            f"duty {['%.4f' % m for m in d_m]} inversions {inv}")
    assert ok


def _trace_burst_violations(trace, V):
    """Active transmitter that clears the stay threshold and has the strictly
    largest weight must transmit again."""
    bad = checked = 0
    recs = trace.records
    for prev, r in zip(recs, recs[1:]):
        n = prev.transmitter
        if n is None or not r.alive_before[n]:
            continue
        q, mu = r.queues_before, r.rates
        modes = [_letter(m) for m in r.prev_modes]
        if not ref.wins(q[n], modes[n], mu[n], V):
            continue
        wn = ref.tx_weight(q[n], modes[n], mu[n], V)
        if all(wn > ref.tx_weight(q[j], modes[j], mu[j], V)
               for j in range(len(q)) if j != n and r.alive_before[j]):
            checked += 1
            bad += r.transmitter != n
    return bad, checked


@pytest.fixture(scope="module")
def ess_traces():
    base = default_config(infinite_battery=True, horizon_slots=20_000)
    return [(v, run(base.with_(v_param=v, seed=s))) for v in (1000.0, 80000.0) for s in (0, 1)]


def test_6_burstiness(sweep, ess_traces):
    by_v, _ = sweep
    b_m, b_h = _series(by_v, "mean_burst_length")
    mono, inv = monotone_with_tolerance(b_m, b_h, "nondecreasing")
    bad = checked = 0
    for v, t in ess_traces:
        b, c = _trace_burst_violations(t, v)
        bad, checked = bad + b, checked + c
    ok = mono and bad == 0 and checked > 0
    _record(6, "burst length nondecreasing in V; stay rule holds", ok,
            f"burst {['%.3f' % m for m in b_m]} inversions {inv}; "
            f"trace {bad} violations in {checked} qualifying slots")
    assert ok


# -- 7: idle characterization ---------------------------------------------------

def _idle_violations(trace, V):
    bad = 0
    for r in trace.records:
        modes = [_letter(m) for m in r.prev_modes]
        anyone = any(r.alive_before[i] and ref.wins(r.queues_before[i], modes[i], r.rates[i], V)
                     for i in range(len(modes)))
        bad += r.idle == anyone
    return bad


def _idle_witness(V, max_seeds=5000, horizon=20):
    base = default_config(infinite_battery=True, horizon_slots=horizon, v_param=V)
    for s in range(max_seeds):
        for r in run(base.with_(seed=s)).records:
            if r.idle and any(q > 0 for q, a in zip(r.queues_before, r.alive_before) if a):
                return s, r
    return None, None


def test_7_idle_iff_no_winner(ess_traces):
    bad = sum(_idle_violations(t, v) for v, t in ess_traces)
    slots = sum(len(t) for _, t in ess_traces)
    seed, rec = _idle_witness(80000.0)
    ok = bad == 0 and rec is not None
    wit = (f"witness seed {seed} slot {rec.slot} queues {rec.queues_before}"
           if rec is not None else "no witness found")
    _record(7, "idle iff no node wins; non-work-conserving witness", ok,
            f"{bad} violations in {slots} slots; {wit}")
    assert ok


# -- 8: lifetimes -----------------------------------------------------------------

def _first_death(policy):
    base = default_config(policy=policy, stop_at_first_death=True)
    cfgs = [base.with_(v_param=float(v), seed=s) for v in COMPARISON_V_LIST for s in SEEDS]
    by_v = {}
    for cfg, (rep, _, _) in zip(cfgs, run_ensemble(cfgs)):
        by_v.setdefault(cfg.v_param, []).append(rep.first_death_slot)
    return [mean_ci95(by_v[float(v)])[0] for v in COMPARISON_V_LIST]


def test_8_lifetime_ordering():
    ess, bench, per = (_first_death(p) for p in (Policy.ESS, Policy.BENCHMARK, Policy.PERIODIC))
    ordered = all(a > b for a, b in zip(ess, bench))
    spread = (max(per) - min(per)) / (sum(per) / len(per))
    ok = ordered and spread < 0.01
    _record(8, "ESS outlives Benchmark at every V; Periodic flat", ok,
            f"ESS {['%.1f' % x for x in ess]} Benchmark {['%.1f' % x for x in bench]} "
            f"Periodic spread {spread:.4%}")
    assert ok


# -- 9: coincidence -----------------------------------------------------------------

def test_9_benchmark_equals_ess_without_switching_cost():
    base = default_config(initial_battery_j=0.5)
    base = base.with_(energy=replace(base.energy, e01_j=0.0, e10_j=0.0))
    diffs = []
    for v in (500.0, 5000.0, 80000.0):
        for s in (0, 1, 2):
            a = run(base.with_(v_param=v, seed=s, policy=Policy.ESS))
            b = run(base.with_(v_param=v, seed=s, policy=Policy.BENCHMARK))
            if a.records != b.records or a.death_slots != b.death_slots:
                diffs.append((v, s))
    ok = not diffs
    _record(9, "ESS == Benchmark when e01 = e10 = 0", ok, f"{9 - len(diffs)}/9 traces identical")
    assert ok


# -- 10: determinism -------------------------------------------------------------------

def test_10_cli_determinism(tmp_path):
    runs = {
        "run": (["run", "--horizon", "300", "--seed", "4", "--v-list", "2000"], "slots.csv"),
        "sweep": (["sweep", "--horizon", "200", "--seeds", "2", "--v-list", "500,80000",
                   "--policies", "ESS,Benchmark,Periodic,Distributed"], "sweep.csv"),
        "oracle": (["oracle", "--grid-step", "0.05"], "oracle.json"),
    }
    mismatched = []
    for name, (args, fname) in runs.items():
        blobs = []
        for k in range(2):
            out = tmp_path / f"{name}{k}"
            with redirect_stdout(io.StringIO()):
                assert main(args + ["--out", str(out)]) == 0
            blobs.append((out / fname).read_bytes())
        if blobs[0] != blobs[1]:
            mismatched.append(name)
        if fname.endswith(".csv"):
            assert len(list(csv.reader(io.StringIO(blobs[0].decode())))) > 1
    ok = not mismatched
    _record(10, "byte-identical reruns", ok,
            f"{len(runs) - len(mismatched)}/{len(runs)} subcommands identical")
    assert ok
