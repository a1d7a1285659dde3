"""Domain types, configuration validation and the drift constant.

Everything here is an immutable value: configs can be shared freely between
concurrent runs.  Configs round-trip through plain dicts (``to_dict`` /
``config_from_dict``) so the CLI can read and write them as JSON.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Optional, Sequence, Union

PROB_TOL = 1e-12


class Mode(enum.IntEnum):
    SLEEP = 0
    ACTIVE = 1


class Policy(str, enum.Enum):
    ESS = "ESS"
    BENCHMARK = "Benchmark"
    PERIODIC = "Periodic"
    DISTRIBUTED = "Distributed"
    RND = "RND"

    @classmethod
    def parse(cls, name: str) -> "Policy":
        for p in cls:
            if p.value.lower() == name.strip().lower():
                return p
        raise ValueError(f"unknown policy {name!r}")


class ConfigErrorKind(str, enum.Enum):
    NEGATIVE_ENERGY = "NegativeEnergy"
    BAD_PROBABILITY_SUM = "BadProbabilitySum"
    SWITCHING_EXCEEDS_SLOT = "SwitchingExceedsSlot"
    EMPTY_CHANNEL_SET = "EmptyChannelSet"
    BAD_VALUE = "BadValue"


@dataclass(frozen=True)
class ConfigIssue:
    kind: ConfigErrorKind
    message: str

    def __str__(self) -> str:
        return f"{self.kind.value}: {self.message}"


class ConfigError(ValueError):
    """Raised by :func:`validate_config`; ``issues`` lists every violation."""

    def __init__(self, issues: Sequence[ConfigIssue]):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))

    @property
    def kinds(self) -> set:
        return {i.kind for i in self.issues}


@dataclass(frozen=True)
class EnergyParams:
    """Per-node energy model shared by all nodes.

    Rates are per millisecond; switching and per-packet costs are one-shot.
    ``include_e01_on_wake`` controls whether a wake-up slot pays ``e01_j`` on
    top of its shortened active period.
    """

    e0_rate_j_per_ms: float = 0.015e-6
    c_rate_j_per_ms: float = 36e-6
    alpha_j_per_packet: float = 30e-6
    e01_j: float = 25.2e-6
    e10_j: float = 2.85e-6
    t01_ms: float = 0.7
    t10_ms: float = 0.01
    eb_j_per_bit: float = 8.33e-8
    broadcast_bits_per_weight_msg: int = 128
    include_e01_on_wake: bool = True


@dataclass(frozen=True)
class ChannelState:
    label: str
    rate: int
    probability: float


@dataclass(frozen=True)
class ChannelModel:
    """i.i.d. channel: one state drawn per node per slot."""

    states: tuple[ChannelState, ...]

    @property
    def mu_max(self) -> int:
        return max((s.rate for s in self.states), default=0)

    @property
    def rates(self) -> tuple[int, ...]:
        return tuple(s.rate for s in self.states)

    @property
    def probabilities(self) -> tuple[float, ...]:
        return tuple(s.probability for s in self.states)

    @classmethod
    def single(cls, rate: int, label: str = "Good") -> "ChannelModel":
        return cls((ChannelState(label, rate, 1.0),))


@dataclass(frozen=True)
class ArrivalModel:
    """Finite batch-size distribution of packets generated per slot."""

    distribution: tuple[tuple[int, float], ...]
    packet_size_bytes: int = 45

    @property
    def mean(self) -> float:
        return math.fsum(k * p for k, p in self.distribution)

    @property
    def r_max(self) -> int:
        return max((k for k, p in self.distribution if p > 0), default=0)

    @classmethod
    def constant(cls, count: int) -> "ArrivalModel":
        return cls(((count, 1.0),))


@dataclass(frozen=True)
class RndPolicyParams:
    """Stationary randomized policy, indexed ``[node][channel_state]``.

    ``p01``/``p10`` are the sleep->active and active->sleep transition
    probabilities used when the node observes that channel state;
    ``pi_tr`` is the probability an active node attempts to transmit.
    """

    p01: tuple[tuple[float, ...], ...]
    p10: tuple[tuple[float, ...], ...]
    pi_tr: tuple[tuple[float, ...], ...]

    @classmethod
    def uniform(cls, node_count: int, n_states: int, p01: float, p10: float,
                pi_tr: float) -> "RndPolicyParams":
        row = lambda v: tuple(tuple([v] * n_states) for _ in range(node_count))
        return cls(row(p01), row(p10), row(pi_tr))

    def issues(self, node_count: int, n_states: int) -> list[ConfigIssue]:
        out = []
        for name in ("p01", "p10", "pi_tr"):
            table = getattr(self, name)
            if len(table) != node_count or any(len(r) != n_states for r in table):
                out.append(ConfigIssue(ConfigErrorKind.BAD_VALUE,
                                       f"{name} must be {node_count}x{n_states}"))
                continue
            if any(not 0.0 <= v <= 1.0 for r in table for v in r):
                out.append(ConfigIssue(ConfigErrorKind.BAD_VALUE,
                                       f"{name} entries must lie in [0, 1]"))
        if not out:
            for k in range(n_states):
                total = math.fsum(self.pi_tr[n][k] for n in range(node_count))
                if total > 1.0 + PROB_TOL:
                    out.append(ConfigIssue(
                        ConfigErrorKind.BAD_PROBABILITY_SUM,
                        f"sum of pi_tr over nodes in channel state {k} is {total} > 1"))
        return out


@dataclass(frozen=True)
class SimConfig:
    """Full description of one experiment.

    ``horizon_slots=None`` runs until every node is dead (or until the first
    death when ``stop_at_first_death`` is set).  ``arrivals`` is either one
    model shared by every node or one model per node.
    """

    node_count: int = 5
    slot_ms: float = 2.0
    horizon_slots: Optional[int] = None
    initial_battery_j: float = 10.0
    v_param: float = 1000.0
    policy: Policy = Policy.ESS
    energy: EnergyParams = field(default_factory=EnergyParams)
    channel: ChannelModel = field(default_factory=lambda: DEFAULT_CHANNEL)
    arrivals: Union[ArrivalModel, tuple[ArrivalModel, ...]] = field(
        default_factory=lambda: DEFAULT_ARRIVALS)
    seed: int = 0
    wake_slot_rate_scaling: bool = False
    rnd_params: Optional[RndPolicyParams] = None
    infinite_battery: bool = False
    stop_at_first_death: bool = False

    def arrival_model(self, node: int) -> ArrivalModel:
        if isinstance(self.arrivals, ArrivalModel):
            return self.arrivals
        return self.arrivals[node]

    @property
    def arrival_models(self) -> tuple[ArrivalModel, ...]:
        return tuple(self.arrival_model(n) for n in range(self.node_count))

    @property
    def arrival_rates(self) -> tuple[float, ...]:
        return tuple(m.mean for m in self.arrival_models)

    @property
    def r_max(self) -> int:
        return max(m.r_max for m in self.arrival_models)

    def with_(self, **changes) -> "SimConfig":
        return replace(self, **changes)


DEFAULT_CHANNEL = ChannelModel((
    ChannelState("Good", 20, 1 / 3),
    ChannelState("Medium", 12, 1 / 3),
    ChannelState("Bad", 5, 1 / 3),
))
DEFAULT_ARRIVALS = ArrivalModel(((0, 0.5), (8, 0.5)), packet_size_bytes=45)
SWEEP_V_LIST = (500, 1000, 5000, 10000, 20000, 40000, 60000, 80000)
COMPARISON_V_LIST = (400, 800, 1200, 1800, 2500)


def default_config(**changes) -> SimConfig:
    """Five nodes, 10 J batteries, 2 ms slots and the CC1010-style energy costs."""
    return SimConfig(**changes)


def validate_config(cfg: SimConfig) -> SimConfig:
    """Return ``cfg`` unchanged if valid, else raise ConfigError listing all issues."""
    issues: list[ConfigIssue] = []
    bad = lambda msg: issues.append(ConfigIssue(ConfigErrorKind.BAD_VALUE, msg))

    if not isinstance(cfg.node_count, int) or cfg.node_count < 1:
        bad("node_count must be a positive integer")
    if not cfg.slot_ms > 0:
        bad("slot_ms must be positive")
    if cfg.horizon_slots is not None and (
            not isinstance(cfg.horizon_slots, int) or cfg.horizon_slots < 0):
        bad("horizon_slots must be a non-negative integer or None")
    if not cfg.initial_battery_j > 0:
        bad("initial_battery_j must be positive")
    if not cfg.v_param >= 0:
        bad("v_param must be non-negative")
    if not 0 <= cfg.seed < 2**64:
        bad("seed must be an unsigned 64-bit integer")

    e = cfg.energy
    for name, value in asdict(e).items():
        if isinstance(value, bool):
            continue
        if value < 0:
            issues.append(ConfigIssue(ConfigErrorKind.NEGATIVE_ENERGY,
                                      f"energy.{name} = {value} is negative"))
    if e.broadcast_bits_per_weight_msg < 1:
        bad("broadcast_bits_per_weight_msg must be a positive integer")
    if cfg.slot_ms > 0 and e.t01_ms + e.t10_ms >= cfg.slot_ms:
        issues.append(ConfigIssue(
            ConfigErrorKind.SWITCHING_EXCEEDS_SLOT,
            f"t01_ms + t10_ms = {e.t01_ms + e.t10_ms} must be below slot_ms = {cfg.slot_ms}"))

    states = cfg.channel.states
    if not states:
        issues.append(ConfigIssue(ConfigErrorKind.EMPTY_CHANNEL_SET,
                                  "channel model has no states"))
    else:
        if any(not 0.0 <= s.probability <= 1.0 for s in states):
            issues.append(ConfigIssue(ConfigErrorKind.BAD_PROBABILITY_SUM,
                                      "channel probabilities must lie in [0, 1]"))
        total = math.fsum(s.probability for s in states)
        if abs(total - 1.0) > PROB_TOL:
            issues.append(ConfigIssue(ConfigErrorKind.BAD_PROBABILITY_SUM,
                                      f"channel probabilities sum to {total}"))
        if any(not isinstance(s.rate, int) or s.rate < 0 for s in states):
            bad("channel rates must be non-negative integers")

    if not isinstance(cfg.arrivals, ArrivalModel) and len(cfg.arrivals) != cfg.node_count:
        bad("per-node arrival list must have node_count entries")
    else:
        for n, m in enumerate(cfg.arrival_models if cfg.node_count >= 1 else ()):
            if not m.distribution:
                issues.append(ConfigIssue(ConfigErrorKind.BAD_PROBABILITY_SUM,
                                          f"arrival model of node {n} is empty"))
                continue
            total = math.fsum(p for _, p in m.distribution)
            if abs(total - 1.0) > PROB_TOL or any(not 0.0 <= p <= 1.0 for _, p in m.distribution):
                issues.append(ConfigIssue(ConfigErrorKind.BAD_PROBABILITY_SUM,
                                          f"arrival probabilities of node {n} sum to {total}"))
            if any(not isinstance(k, int) or k < 0 for k, _ in m.distribution):
                bad(f"arrival counts of node {n} must be non-negative integers")
            if m.packet_size_bytes < 1:
                bad("packet_size_bytes must be positive")

    if cfg.policy is Policy.RND:
        if cfg.rnd_params is None:
            bad("policy RND requires rnd_params")
        elif states and isinstance(cfg.node_count, int):
            issues.extend(cfg.rnd_params.issues(cfg.node_count, len(states)))

    if issues:
        raise ConfigError(issues)
    return cfg


def compute_B(cfg: SimConfig) -> float:
    """Drift constant ``(N/2) * (mu_max**2 + R_max**2)``."""
    return cfg.node_count / 2 * (cfg.channel.mu_max ** 2 + cfg.r_max ** 2)


@dataclass(frozen=True, slots=True)
class NodeState:
    node_id: int
    mode: Mode
    prev_mode: Mode
    queue_packets: int
    battery_j: float
    alive: bool = True


def initial_states(cfg: SimConfig) -> list[NodeState]:
    battery = math.inf if cfg.infinite_battery else float(cfg.initial_battery_j)
    return [NodeState(n, Mode.SLEEP, Mode.SLEEP, 0, battery, True)
            for n in range(cfg.node_count)]


# -- dict / JSON round trip -------------------------------------------------

def _arrivals_to_dict(m: ArrivalModel) -> dict:
    return {"distribution": [[k, p] for k, p in m.distribution],
            "packet_size_bytes": m.packet_size_bytes}


def _arrivals_from_dict(d: dict) -> ArrivalModel:
    return ArrivalModel(tuple((int(k), float(p)) for k, p in d["distribution"]),
                        int(d.get("packet_size_bytes", 45)))


def config_to_dict(cfg: SimConfig) -> dict[str, Any]:
    arrivals = (_arrivals_to_dict(cfg.arrivals) if isinstance(cfg.arrivals, ArrivalModel)
                else [_arrivals_to_dict(m) for m in cfg.arrivals])
    out = {
        "node_count": cfg.node_count,
        "slot_ms": cfg.slot_ms,
        "horizon_slots": cfg.horizon_slots,
        "initial_battery_j": cfg.initial_battery_j,
        "v_param": cfg.v_param,
        "policy": cfg.policy.value,
        "energy": asdict(cfg.energy),
        "channel": {"states": [{"label": s.label, "rate": s.rate,
                                "probability": s.probability}
                               for s in cfg.channel.states]},
        "arrivals": arrivals,
        "seed": cfg.seed,
        "wake_slot_rate_scaling": cfg.wake_slot_rate_scaling,
        "infinite_battery": cfg.infinite_battery,
        "stop_at_first_death": cfg.stop_at_first_death,
    }
    if cfg.rnd_params is not None:
        out["rnd_params"] = {k: [list(r) for r in getattr(cfg.rnd_params, k)]
                             for k in ("p01", "p10", "pi_tr")}
    return out


def config_from_dict(d: dict[str, Any]) -> SimConfig:
    """Build a SimConfig from a JSON-style dict; missing keys take default values."""
    known = {f for f in SimConfig.__dataclass_fields__}
    unknown = set(d) - known
    if unknown:
        raise ConfigError([ConfigIssue(ConfigErrorKind.BAD_VALUE,
                                       f"unknown config keys: {sorted(unknown)}")])
    kw: dict[str, Any] = {k: d[k] for k in ("node_count", "slot_ms", "horizon_slots",
                                             "initial_battery_j", "v_param", "seed",
                                             "wake_slot_rate_scaling", "infinite_battery",
                                             "stop_at_first_death") if k in d}
    if "policy" in d:
        kw["policy"] = Policy.parse(d["policy"])
    if "energy" in d:
        kw["energy"] = EnergyParams(**d["energy"])
    if "channel" in d:
        kw["channel"] = ChannelModel(tuple(
            ChannelState(str(s["label"]), s["rate"], float(s["probability"]))
            for s in d["channel"]["states"]))
    if "arrivals" in d:
        a = d["arrivals"]
        kw["arrivals"] = (tuple(_arrivals_from_dict(x) for x in a) if isinstance(a, list)
                          else _arrivals_from_dict(a))
    if d.get("rnd_params") is not None:
        r = d["rnd_params"]
        kw["rnd_params"] = RndPolicyParams(
            *(tuple(tuple(float(v) for v in row) for row in r[k])
              for k in ("p01", "p10", "pi_tr")))
    return SimConfig(**kw)
