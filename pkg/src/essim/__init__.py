"""Energy-aware sleep/active scheduling simulator for low duty cycle sensor networks."""

from .model import (COMPARISON_V_LIST, SWEEP_V_LIST, ArrivalModel, ChannelModel, ChannelState,
                    ConfigError, EnergyParams, Mode, NodeState, Policy, RndPolicyParams,
                    SimConfig, compute_B, config_from_dict, config_to_dict, default_config,
                    validate_config)
from .energy import EnergyBreakdown, h_max, network_slot_energy, slot_energy
from .engine import Termination, Trace, lifetime, run, simulate, step
from .metrics import MetricsReport, aggregate, sweep_summary
from .ensemble import run_ensemble
from .oracle import (EvalMode, InfeasibleRate, OracleResult, evaluate_rnd, minimize_energy,
                     stability_margin)
from .verify import verify_bounds

__version__ = "0.1.0"
