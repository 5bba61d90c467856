"""Mining economics: effective hash rate, cost per block, advantage conditions.

Compares the quantum miner's cost per won block against a classical
miner's, in two forms: the general condition at an explicit win
probability P, and the simplified condition valid at the optimal
measurement schedule in the small-power regime, where the break-even
cost ratio collapses to (4 / a) * r / lambda0 independent of difficulty.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import (
    PEACEFUL,
    MiningParams,
    a_constant,
    optimal_y0,
    regime_check,
    success_probability,
)

GENERAL = "general"
SIMPLIFIED = "simplified"


class OutOfRegimeError(ValueError):
    """The simplified advantage condition was requested outside its regime."""


@dataclass(frozen=True)
class EconomicParams:
    """Unit costs: currency per Grover iteration and per classical hash."""

    grover_cost: float
    hash_cost: float

    def __post_init__(self) -> None:
        if self.grover_cost < 0.0:
            raise ValueError("grover_cost must be >= 0")
        if self.hash_cost < 0.0:
            raise ValueError("hash_cost must be >= 0")


@dataclass(frozen=True)
class AdvantageReport:
    """Cost comparison between quantum and classical mining.

    threshold_ratio is the largest grover_cost / hash_cost still
    advantageous; quantum_advantage_factor is the schedule-optimal ratio
    (4 / a) * r / lambda0, i.e. classical hashes per block over quantum
    iterations per won block.
    """

    quantum_cost_per_block: float
    classical_cost_per_block: float
    advantageous: bool
    threshold_ratio: float
    quantum_advantage_factor: float
    method: str


def effective_hash_rate(P: float, D: float, lambda0: float) -> float:
    """Classical hash rate winning the same expected block fraction, P * D * lambda0."""
    if not 0.0 <= P <= 1.0:
        raise ValueError("P must be in [0, 1]")
    if D < 1.0:
        raise ValueError("D must be >= 1")
    if not lambda0 > 0.0:
        raise ValueError("lambda0 must be > 0")
    return P * D * lambda0


def quantum_cost_per_block(
    econ: EconomicParams, m: int, r: float, lambda0: float, P: float
) -> float:
    """Expected spend per quantum-won block: grover_cost * m * r / (lambda0 * P)."""
    if P == 0.0:
        raise ZeroDivisionError(
            "cost per block is undefined at P = 0 (the quantum miner never wins)"
        )
    if not 0.0 < P <= 1.0:
        raise ValueError("P must be in (0, 1]")
    return econ.grover_cost * m * r / (lambda0 * P)


def classical_cost_per_block(econ: EconomicParams, D: float) -> float:
    """Expected spend per classically-won block: hash_cost * D."""
    if D < 1.0:
        raise ValueError("D must be >= 1")
    return econ.hash_cost * D


def quantum_advantage_factor(r: float, lambda0: float) -> float:
    """Break-even cost ratio at the optimal schedule, (4 / a) * r / lambda0."""
    return 4.0 / a_constant() * r / lambda0


def advantage_condition(
    params: MiningParams, econ: EconomicParams, method: str = GENERAL
) -> AdvantageReport:
    """Decide whether quantum mining beats classical mining on cost per block.

    method "general" evaluates the exact win probability at the caller's
    iteration count and compares costs directly. method "simplified"
    assumes a peaceful miner at the optimal schedule (y = y0) in the
    small-power regime and reduces to the difficulty-independent ratio
    test grover_cost < hash_cost * (4 / a) * r / lambda0; it refuses to
    run when regime_check fails, naming the failing flag.
    """
    qaf = quantum_advantage_factor(params.grover_rate, params.network_rate)

    if method == GENERAL:
        P = success_probability(params, "exact").total
        qc = quantum_cost_per_block(
            econ, params.registers, params.grover_rate, params.network_rate, P
        )
        cc = classical_cost_per_block(econ, params.difficulty)
        threshold = (
            params.difficulty
            * params.network_rate
            * P
            / (params.registers * params.grover_rate)
        )
        return AdvantageReport(
            quantum_cost_per_block=qc,
            classical_cost_per_block=cc,
            advantageous=qc < cc,
            threshold_ratio=threshold,
            quantum_advantage_factor=qaf,
            method=GENERAL,
        )

    if method == SIMPLIFIED:
        if params.mode != PEACEFUL:
            raise ValueError("the simplified condition assumes peaceful mode")
        report = regime_check(params)
        if not report.all_ok():
            raise OutOfRegimeError(
                "simplified advantage condition refused out of regime; "
                f"failing flags: {', '.join(report.failing())}"
            )
        # Win probability of the schedule-optimal peaceful miner with
        # lambda approximated by lambda0: x / a with x evaluated at lambda0.
        x0 = (
            4.0
            * params.registers
            * params.grover_rate**2
            / (params.network_rate**2 * params.difficulty)
        )
        p_simplified = x0 / a_constant()
        qc = quantum_cost_per_block(
            econ,
            params.registers,
            params.grover_rate,
            params.network_rate,
            p_simplified,
        )
        cc = classical_cost_per_block(econ, params.difficulty)
        return AdvantageReport(
            quantum_cost_per_block=qc,
            classical_cost_per_block=cc,
            advantageous=econ.grover_cost < econ.hash_cost * qaf,
            threshold_ratio=qaf,
            quantum_advantage_factor=qaf,
            method=SIMPLIFIED,
        )

    raise ValueError(f"method must be {GENERAL!r} or {SIMPLIFIED!r}")
