"""Counter-based sampling of channel states and packet arrivals.

Every (seed, label, node) triple owns an independent PCG64 stream.  The
draw used at slot ``t`` is the ``t``-th double of that stream, obtained by
jumping the generator ahead, so a sample never depends on simulation
history, on the order nodes are visited, or on how many slots were
generated before it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SimConfig

BLOCK = 4096

# Stable numeric codes; appending new labels never perturbs existing streams.
STREAM_LABELS = {"channel": 0, "arrival": 1, "rnd_mode": 2, "rnd_tx": 3}


class RngStream:
    """Deterministic uniform(0, 1) sequence addressed by slot index."""

    def __init__(self, seed: int, label: str, node_id: int):
        self.seed = int(seed)
        self.label = label
        self.node_id = int(node_id)
        self._seq = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(STREAM_LABELS[label], self.node_id))
        self._cache: dict[int, np.ndarray] = {}

    def block(self, index: int) -> np.ndarray:
        """Uniforms for slots ``[index*BLOCK, (index+1)*BLOCK)``."""
        cached = self._cache.get(index)
        if cached is None:
            bitgen = np.random.PCG64(self._seq)
            if index:
                bitgen.advance(index * BLOCK)
            cached = np.random.Generator(bitgen).random(BLOCK)
            self._cache = {index: cached}
        return cached

    def uniform(self, t: int) -> float:
        return float(self.block(t // BLOCK)[t % BLOCK])

    def uniforms(self, start: int, count: int) -> np.ndarray:
        out = np.empty(count)
        pos = 0
        while pos < count:
            t = start + pos
            b, off = divmod(t, BLOCK)
            take = min(BLOCK - off, count - pos)
            out[pos:pos + take] = self.block(b)[off:off + take]
            pos += take
        return out


def _cumulative(probs) -> np.ndarray:
    cum = np.cumsum(np.asarray(probs, dtype=float))
    cum[-1] = 1.0
    return cum


def categorical(u: np.ndarray, cum: np.ndarray) -> np.ndarray:
    """Index of the first cumulative bucket strictly above each uniform."""
    return np.minimum(np.searchsorted(cum, u, side="right"), len(cum) - 1)


@dataclass(frozen=True)
class ChannelDraw:
    label: str
    rate: int
    state: int


class Environment:
    """Channel and arrival samples for every node of one seeded run."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        n = cfg.node_count
        self.channel_streams = [RngStream(cfg.seed, "channel", i) for i in range(n)]
        self.arrival_streams = [RngStream(cfg.seed, "arrival", i) for i in range(n)]
        self._chan_cum = _cumulative(cfg.channel.probabilities)
        self._arr = []
        for m in cfg.arrival_models:
            counts = np.array([k for k, _ in m.distribution], dtype=np.int64)
            self._arr.append((counts, _cumulative([p for _, p in m.distribution])))
        self._block_index = -1
        self._block = None

    def block(self, index: int) -> tuple[np.ndarray, np.ndarray]:
        """``(channel_state, arrivals)`` int arrays of shape (BLOCK, nodes)."""
        if index != self._block_index:
            chan = np.stack([categorical(s.block(index), self._chan_cum)
                             for s in self.channel_streams], axis=1)
            arr = np.stack([counts[categorical(s.block(index), cum)]
                            for s, (counts, cum) in zip(self.arrival_streams, self._arr)],
                           axis=1)
            self._block = (chan, arr)
            self._block_index = index
        return self._block

    def channel_states(self, t: int) -> np.ndarray:
        return self.block(t // BLOCK)[0][t % BLOCK]

    def arrivals(self, t: int) -> np.ndarray:
        return self.block(t // BLOCK)[1][t % BLOCK]


def sample_channels(env: Environment, t: int) -> list[ChannelDraw]:
    states = env.cfg.channel.states
    return [ChannelDraw(states[k].label, states[k].rate, int(k))
            for k in env.channel_states(t)]


def sample_arrivals(env: Environment, t: int) -> list[int]:
    return [int(r) for r in env.arrivals(t)]
