"""The best randomized policy, and how ESS compares with it.

For a single node on one 20-packet channel with 4 packets arriving per
slot on average, the oracle searches the randomized wake/sleep/transmit
policies on a grid for the cheapest one that still keeps up. Its energy h*
and the spare service rate eps feed the two performance bounds, which are
then checked against short ESS runs.
"""
from essim import ChannelModel, default_config, minimize_energy, stability_margin, verify_bounds

cfg = default_config(node_count=1, channel=ChannelModel.single(20))

res = minimize_energy(cfg, grid_step=0.05)
print(f"h* = {res.h_star_j_per_slot:.6e} J/slot at grid 0.05")
print(f"   wake p01={res.best_params.p01}  sleep p10={res.best_params.p10}  "
      f"transmit pi={res.best_params.pi_tr}")
print(f"   rate achieved {res.achieved_rates[0]:.3f} packets/slot")
print(f"stability margin eps = {stability_margin(cfg, grid_step=0.05):g}")

rep = verify_bounds(cfg, [1e3, 1e4, 1e5], horizon_slots=50_000, grid_step=0.05)
for c in rep.checks:
    print(c.line())
