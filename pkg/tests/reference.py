"""Independent reference computations for the test-suite.

Nothing here imports the package's energy, policy or oracle code.  Values
are derived from first principles: the slot-energy case table written out
by hand, ESS decisions in threshold form, and RND evaluation by exact
enumeration of the joint Markov chain over all node modes.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

SLOT_MS = 2.0
E0 = 0.015e-6      # J/ms asleep
C = 36e-6          # J/ms active circuit
ALPHA = 30e-6      # J/packet
E01 = 25.2e-6
E10 = 2.85e-6
T01 = 0.7
T10 = 0.01
EB = 8.33e-8       # J/bit
BCAST_BITS = 128

S, A = "S", "A"


def slot_cost(prev: str, new: str, served: int = 0, e01: float = E01, e10: float = E10) -> float:
    """Energy of one slot for a (prev, new) mode pair."""
    if prev == S and new == S:
        return SLOT_MS * E0
    if prev == S and new == A:
        return e01 + (SLOT_MS - T01) * C + ALPHA * served
    if prev == A and new == A:
        return SLOT_MS * C + ALPHA * served
    return e10 + (SLOT_MS - T10) * E0


def drift_B(n: int, mu_max: float, r_max: float) -> float:
    return n * (mu_max ** 2 + r_max ** 2) / 2


# -- ESS in threshold form ----------------------------------------------------

def wins(q: int, mode: str, mu: int, V: float, e01: float = E01, e10: float = E10) -> bool:
    """Transmit beats idling: Q*mu exceeds V times the extra energy of a transmit slot."""
    if mu <= 0:
        return False
    if mode == A:
        return q * mu > V * (slot_cost(A, A, mu, e01, e10) - slot_cost(A, S, 0, e01, e10))
    return q * mu > V * (slot_cost(S, A, mu, e01, e10) - slot_cost(S, S))


def tx_weight(q: int, mode: str, mu: int, V: float, e01: float = E01, e10: float = E10) -> float:
    if mu <= 0:
        return -math.inf
    return q * mu - V * slot_cost(mode, A, mu, e01, e10)


def ess_choice(queues, modes, rates, V, alive=None, e01=E01, e10=E10):
    """Transmitter index or None."""
    n = len(queues)
    alive = alive or [True] * n
    best, best_w = None, -math.inf
    for i in range(n):
        if alive[i] and wins(queues[i], modes[i], rates[i], V, e01, e10):
            w = tx_weight(queues[i], modes[i], rates[i], V, e01, e10)
            if w > best_w:
                best, best_w = i, w
    return best


def replay_ess(records, V, n, battery0, e01=E01, e10=E10):
    """Re-run ESS on a trace's channel rates and arrivals (no battery deaths)."""
    q = [0] * n
    modes = [S] * n
    bat = [battery0] * n
    out = []
    for r in records:
        tx = ess_choice(q, modes, list(r.rates), V, None, e01, e10)
        new_modes = [A if i == tx else S for i in range(n)]
        served = [r.rates[i] if i == tx else 0 for i in range(n)]
        for i in range(n):
            bat[i] -= slot_cost(modes[i], new_modes[i], served[i], e01, e10)
        q = [max(q[i] - served[i], 0) + r.arrivals[i] for i in range(n)]
        modes = new_modes
        out.append((tx, tuple(modes), tuple(q), tuple(bat)))
    return out


# -- exact RND evaluation over the joint chain ---------------------------------

def rnd_exact(p01, p10, pi_tr, rates, probs, e01=E01, e10=E10):
    """(energy per slot, per-node rate) for the RND policy, nodes starting asleep.

    Enumerates joint modes (2**N) and channel vectors (K**N).  The long-run
    distribution is the limit of the lazy chain started from all-asleep,
    which equals the Cesaro average of the original chain even when it is
    periodic or reducible.
    """
    n, k = len(p01), len(rates)
    states = list(itertools.product((S, A), repeat=n))
    index = {s: i for i, s in enumerate(states)}
    P = np.zeros((len(states), len(states)))
    energy_from = np.zeros(len(states))
    rate_from = np.zeros((len(states), n))
    for s in states:
        for chans in itertools.product(range(k), repeat=n):
            pc = math.prod(probs[c] for c in chans)
            for new in itertools.product((S, A), repeat=n):
                pt = pc
                for i in range(n):
                    c = chans[i]
                    if s[i] == S:
                        pt *= p01[i][c] if new[i] == A else 1 - p01[i][c]
                    else:
                        pt *= p10[i][c] if new[i] == S else 1 - p10[i][c]
                if pt == 0:
                    continue
                P[index[s], index[new]] += pt
                base = sum(slot_cost(s[i], new[i], 0, e01, e10) for i in range(n))
                energy_from[index[s]] += pt * base
                blocked = 1.0
                for i in range(n):
                    if new[i] != A:
                        continue
                    p_send = blocked * pi_tr[i][chans[i]]
                    mu = rates[chans[i]]
                    energy_from[index[s]] += pt * p_send * ALPHA * mu
                    rate_from[index[s], i] += pt * p_send * mu
                    blocked *= 1 - pi_tr[i][chans[i]]
    lazy = (P + np.eye(len(states))) / 2
    x = np.zeros(len(states))
    x[index[tuple([S] * n)]] = 1.0
    for _ in range(40):  # lazy^(2**40), renormalized so rounding cannot compound
        lazy = lazy @ lazy
        lazy /= lazy.sum(axis=1, keepdims=True)
    limit = x @ lazy
    return float(limit @ energy_from), tuple(float(v) for v in limit @ rate_from)


def grid_min_energy(rates, probs, lam, step):
    """Brute force over a 1-node grid with plain loops."""
    g = [i * step for i in range(int(round(1 / step)) + 1)]
    best = (math.inf, None)
    k = len(rates)
    for p01 in itertools.product(g, repeat=k):
        for p10 in itertools.product(g, repeat=k):
            for pi in itertools.product(g, repeat=k):
                e, r = rnd_exact([p01], [p10], [pi], rates, probs)
                if r[0] >= lam - 1e-9 and e < best[0]:
                    best = (e, (p01, p10, pi))
    return best
