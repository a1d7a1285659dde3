"""How long until the first battery runs flat, per policy.

Small batteries keep the run short. ESS accounts for switching energy
when deciding whether to wake a node. Benchmark ignores it. Periodic keeps
every radio on all the time. Distributed wakes every node that wants to
send and pays for a broadcast each time.
"""
from essim import Policy, default_config, run_ensemble
from essim.metrics import mean_ci95

base = default_config(initial_battery_j=0.5, stop_at_first_death=True)
for policy in (Policy.ESS, Policy.BENCHMARK, Policy.PERIODIC, Policy.DISTRIBUTED):
    cfgs = [base.with_(policy=policy, v_param=v, seed=s) for v in (400.0, 2500.0) for s in range(5)]
    out = run_ensemble(cfgs)
    for k, v in enumerate((400.0, 2500.0)):
        life = [rep.first_death_slot for rep, _, _ in out[k * 5:(k + 1) * 5]]
        m, h = mean_ci95(life)
        print(f"{policy.value:<12} V={v:6.0f}  first death at slot {m:9.1f} +/- {h:.1f}")
