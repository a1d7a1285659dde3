"""Energy versus backlog as V grows, under a load the network can carry.

With the default arrivals (8 packets per node with probability 0.5) the
five nodes together offer more traffic than the channel can serve, so
queues grow without bound and V barely matters. Halving the arrival
probability makes the load feasible, and the expected trade-off appears
once V is large enough for the thresholds to exceed typical queue sizes:
energy per slot falls as V rises while the backlog climbs.
"""
from essim import ArrivalModel, default_config, run_ensemble
from essim.metrics import mean_ci95

base = default_config(arrivals=ArrivalModel(((0, 0.75), (8, 0.25))),
                      infinite_battery=True, horizon_slots=20_000)
v_list = (1e3, 1e4, 1e5, 3e5, 1e6, 3e6)
seeds = range(4)
cfgs = [base.with_(v_param=v, seed=s) for v in v_list for s in seeds]
reports = [rep for rep, _, _ in run_ensemble(cfgs)]

print(f"{'V':>8}  {'energy J/slot':>22}  {'backlog pkts':>18}  {'duty':>6}")
for i, v in enumerate(v_list):
    chunk = reports[i * len(seeds):(i + 1) * len(seeds)]
    e, eh = mean_ci95([r.avg_total_energy_j_per_slot for r in chunk])
    q, qh = mean_ci95([r.avg_queue_backlog_packets for r in chunk])
    d, _ = mean_ci95([r.duty_cycle_fraction for r in chunk])
    print(f"{v:8.0f}  {e:.4e} +/- {eh:.1e}  {q:8.2f} +/- {qh:6.2f}  {d:6.3f}")
