"""Where the joules go in a single slot.

Every slot is one of four mode transitions. This script prints the energy
of each one with the default radio parameters, then charges a short
five-node run and checks that the per-category totals add up.
"""
from essim import Mode, aggregate, default_config, run, slot_energy

cfg = default_config()
p = cfg.energy
S, A = Mode.SLEEP, Mode.ACTIVE

# The four transitions, with a transmitter moving a full 20-packet slot
for prev, new, served in ((S, S, 0), (S, A, 20), (A, A, 20), (A, S, 0)):
    e = slot_energy(prev, new, served, served > 0, p, cfg.slot_ms)
    print(f"{prev.name:>6} -> {new.name:<6} served={served:2d}  total={e.total_j:.6e} J"
          f"  (switch {e.switching_j:.3e}, tx {e.transmission_j:.3e})")

# A short run, broken down by category
trace = run(cfg.with_(horizon_slots=2000, v_param=5000.0, seed=7))
rep = aggregate(trace)
parts = (rep.avg_energy_sleep_j_per_slot, rep.avg_energy_active_j_per_slot,
         rep.avg_energy_switching_j_per_slot, rep.avg_energy_broadcast_j_per_slot)
print("\nper-slot network energy over 2000 slots:")
for name, v in zip(("sleep", "active+tx", "switching", "broadcast"), parts):
    print(f"  {name:<10} {v:.6e} J")
print(f"  {'total':<10} {rep.avg_total_energy_j_per_slot:.6e} J")
