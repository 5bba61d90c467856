"""Quantum-vs-classical mining race model.

Closed-form win probabilities for a quantum miner racing a classical
proof-of-work network, the optimal measurement schedule, mining
economics, and a Monte Carlo simulator that validates the closed forms.
"""

__version__ = "0.1.0"

from .economics import (
    AdvantageReport,
    EconomicParams,
    OutOfRegimeError,
    advantage_condition,
    classical_cost_per_block,
    effective_hash_rate,
    quantum_advantage_factor,
    quantum_cost_per_block,
)
from .model import (
    AGGRESSIVE,
    PEACEFUL,
    MiningParams,
    OptimalKResult,
    OptimizationError,
    RegimeClampWarning,
    RegimeReport,
    SuccessBreakdown,
    TransitionProbabilities,
    a_constant,
    grover_single_success,
    mu,
    nu_approx,
    nu_exact,
    optimal_k,
    optimal_y0,
    p14,
    p14_tilde_xy,
    p18,
    phi_approx,
    phi_exact,
    q_of_t,
    regime_check,
    success_probability,
    transition_probabilities,
)
from .numerics import QuadratureError, QuadratureSpec, integrate, lambert_w0
from .sim import (
    CycleCapError,
    SimConfig,
    SimResult,
    markov_absorption_oracle,
    simulate_race,
)

__all__ = [
    "AGGRESSIVE",
    "AdvantageReport",
    "CycleCapError",
    "EconomicParams",
    "MiningParams",
    "OptimalKResult",
    "OptimizationError",
    "OutOfRegimeError",
    "PEACEFUL",
    "QuadratureError",
    "QuadratureSpec",
    "RegimeClampWarning",
    "RegimeReport",
    "SimConfig",
    "SimResult",
    "SuccessBreakdown",
    "TransitionProbabilities",
    "a_constant",
    "advantage_condition",
    "classical_cost_per_block",
    "effective_hash_rate",
    "grover_single_success",
    "integrate",
    "lambert_w0",
    "markov_absorption_oracle",
    "mu",
    "nu_approx",
    "nu_exact",
    "optimal_k",
    "optimal_y0",
    "p14",
    "p14_tilde_xy",
    "p18",
    "phi_approx",
    "phi_exact",
    "q_of_t",
    "quantum_advantage_factor",
    "quantum_cost_per_block",
    "regime_check",
    "simulate_race",
    "success_probability",
    "transition_probabilities",
]
