"""ESS in action: bursts and deliberate idling.

Once a node is awake the switching cost is already paid, so ESS keeps it
transmitting for several slots in a row. When every queue is small relative
to V, nobody clears the transmit threshold and the channel stays idle even
though packets are waiting.
"""
from essim import Mode, default_config, run

cfg = default_config(infinite_battery=True, horizon_slots=40, v_param=80000.0)

# Seed 335 has an idle slot with a nonempty queue very early on.
trace = run(cfg.with_(seed=335))
for r in trace.records[:12]:
    tx = "-" if r.transmitter is None else str(r.transmitter)
    modes = "".join("A" if m == Mode.ACTIVE else "s" for m in r.modes)
    note = "  <- idle with packets waiting" if r.idle and any(r.queues_before) else ""
    print(f"slot {r.slot:3d}  rates={r.rates}  queues={r.queues_before}  modes={modes}  tx={tx}{note}")

# Run lengths of the same transmitter over a longer window
trace = run(cfg.with_(horizon_slots=5000, v_param=1000.0, seed=1))
runs, cur, last = [], 0, None
for r in trace.records:
    t = r.transmitter
    if t is not None and t == last:
        cur += 1
    else:
        if cur > 1:
            runs.append(cur)
        cur = 1 if t is not None else 0
    last = t
print(f"\nV=1000: {len(runs)} bursts longer than one slot, longest {max(runs)} slots")
