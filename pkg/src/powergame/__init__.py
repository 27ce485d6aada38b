"""Noncooperative power control and receiver selection in multi-hop
DS-CDMA networks: SINR formulas for the matched filter, decorrelator and
MMSE receivers, per-user best responses, best-response dynamics to Nash
equilibrium, a chip-level Monte Carlo oracle, and the experiment harness.
"""
from .dynamics import (EquilibriumReport, ParetoProbe, PowerProfile,
                       allowed_receivers, pareto_probe,
                       run_best_response_dynamics, verify_equilibrium)
from .game import (EfficiencyFunction, Strategy, best_response_power,
                   best_response_strategy, solve_target_sinr, utility)
from .kernels import backend_name
from .montecarlo import (empirical_packet_success, empirical_sinr,
                         empirical_sinr_for_user)
from .receivers import (CodeBook, LinearFilter, ReceiverKind, gain_factor,
                        gain_factors, generate_codes, receiver_filter, sinr,
                        sinr_from_filter)
from .scenario import (ACCESS_POINT, GameConfig, Scenario, build_scenario,
                       compute_routing, generate_topology, load_instance,
                       sample_channel_gains, save_instance)

__version__ = "0.1.0"

__all__ = [
    "ACCESS_POINT", "CodeBook", "EfficiencyFunction", "EquilibriumReport",
    "GameConfig", "LinearFilter", "ParetoProbe", "PowerProfile",
    "ReceiverKind", "Scenario", "Strategy", "allowed_receivers",
    "backend_name", "best_response_power", "best_response_strategy",
    "build_scenario", "compute_routing", "empirical_packet_success",
    "empirical_sinr", "empirical_sinr_for_user", "gain_factor",
    "gain_factors", "generate_codes", "generate_topology", "load_instance",
    "pareto_probe", "receiver_filter", "run_best_response_dynamics",
    "sample_channel_gains", "save_instance", "sinr", "sinr_from_filter",
    "solve_target_sinr", "utility", "verify_equilibrium",
]
