"""Monte Carlo race simulator and a term-summation absorption oracle.

simulate_race replays the block race per trial: each cycle draws a fresh
classical arrival (memorylessness makes a per-cycle redraw exact), then
either the classical block pre-empts the scheduled measurement (peaceful:
loss; aggressive: an interrupt measurement and possibly a fork) or the
scheduled measurement fires as a Bernoulli with the exact success
probability. Trials are simulated in fixed-size chunks, each with its own
counter-based random stream keyed by (seed, chunk index), so results are
bit-identical for a given (seed, trials, chunk_size, iteration_mode,
params) regardless of how many threads execute the chunks.

markov_absorption_oracle validates the closed-form win split by summing
the absorption probabilities of the race graph term by term instead of
using the geometric-series closed form.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import (
    AGGRESSIVE,
    MiningParams,
    TransitionProbabilities,
    nu_exact,
)

CONTINUOUS_RT = "continuous_rt"
FLOOR_RT = "floor_rt"
ITERATION_MODES = (CONTINUOUS_RT, FLOOR_RT)


class CycleCapError(RuntimeError):
    """A trial exceeded the per-trial cycle cap without absorbing."""


@dataclass(frozen=True)
class SimConfig:
    """Shape of one simulation run.

    iteration_mode selects the iteration count used for interrupt
    measurements: the continuous r*t of the closed-form model, or
    floor(r*t) for discretization sensitivity checks. chunk_size fixes the
    deterministic unit of work; changing it changes the random streams
    (but never the statistics).
    """

    trials: int
    seed: int
    iteration_mode: str = CONTINUOUS_RT
    chunk_size: int = 1_000_000
    cycle_cap: int = 1_000_000_000

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.iteration_mode not in ITERATION_MODES:
            raise ValueError(f"iteration_mode must be one of {ITERATION_MODES}")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")
        if self.cycle_cap < 1:
            raise ValueError("cycle_cap must be >= 1")


@dataclass(frozen=True)
class SimResult:
    """Aggregated outcome of all trials.

    stale_events counts interrupt measurements that produced a block (every
    fork, won or lost, strands one block); cycles_total counts measurement
    cycles consumed across all trials.
    """

    quantum_wins: int
    classical_wins: int
    stale_events: int
    empirical_p: float
    standard_error: float
    cycles_total: int


def _run_chunk(params: MiningParams, cfg: SimConfig, chunk_index: int, n: int):
    rng = np.random.Generator(
        np.random.Philox(key=np.array([cfg.seed, chunk_index], dtype=np.uint64))
    )
    lam = params.classical_rate
    T = params.measure_time
    theta = params.theta
    m = params.registers
    r = params.grover_rate
    nu = nu_exact(params)
    aggressive = params.mode == AGGRESSIVE
    gamma = params.tie_win_prob
    floor_mode = cfg.iteration_mode == FLOOR_RT

    quantum_wins = 0
    stale = 0
    cycles = 0
    active = n
    rounds = 0
    while active:
        rounds += 1
        if rounds > cfg.cycle_cap:
            raise CycleCapError(
                f"trial exceeded cycle cap {cfg.cycle_cap} without absorbing "
                f"(chunk {chunk_index})"
            )
        cycles += active
        t = rng.exponential(1.0 / lam, size=active)
        before = t < T
        n_before = int(before.sum())
        if aggressive and n_before:
            k_eff = r * t[before]
            if floor_mode:
                k_eff = np.floor(k_eff)
            s = np.sin(2.0 * (k_eff + 0.5) * theta) ** 2
            with np.errstate(divide="ignore"):
                q = -np.expm1(m * np.log1p(-np.minimum(s, 1.0)))
            q = np.where(s >= 1.0, 1.0, q)
            found = rng.random(n_before) < q
            n_found = int(found.sum())
            stale += n_found
            if n_found:
                quantum_wins += int((rng.random(n_found) < gamma).sum())
        # Classical arrivals before T absorb the trial either way; only the
        # trials that reach T and fail the scheduled measurement continue.
        n_at_t = active - n_before
        if n_at_t:
            won = rng.random(n_at_t) < nu
            n_won = int(won.sum())
            quantum_wins += n_won
            active = n_at_t - n_won
        else:
            active = 0
    return quantum_wins, stale, cycles


def simulate_race(
    params: MiningParams, cfg: SimConfig, threads: int = 1
) -> SimResult:
    """Run cfg.trials independent block races and aggregate the outcomes.

    threads caps chunk-level parallelism (0 means one thread per CPU); it
    never affects the result, only wall time. Raises CycleCapError if any
    trial fails to absorb within cfg.cycle_cap cycles, which is only
    reachable for degenerate parameters (nu and mu both ~ 0).
    """
    if params.iterations < 1:
        raise ValueError("simulation requires iterations >= 1")
    n_chunks = (cfg.trials + cfg.chunk_size - 1) // cfg.chunk_size
    sizes = [
        min(cfg.chunk_size, cfg.trials - i * cfg.chunk_size) for i in range(n_chunks)
    ]
    if threads == 0:
        threads = os.cpu_count() or 1
    if threads > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(
                    lambda i: _run_chunk(params, cfg, i, sizes[i]), range(n_chunks)
                )
            )
    else:
        results = [_run_chunk(params, cfg, i, sizes[i]) for i in range(n_chunks)]

    quantum_wins = sum(res[0] for res in results)
    stale = sum(res[1] for res in results)
    cycles = sum(res[2] for res in results)
    p_hat = quantum_wins / cfg.trials
    return SimResult(
        quantum_wins=quantum_wins,
        classical_wins=cfg.trials - quantum_wins,
        stale_events=stale,
        empirical_p=p_hat,
        standard_error=math.sqrt(p_hat * (1.0 - p_hat) / cfg.trials),
        cycles_total=cycles,
    )


def markov_absorption_oracle(
    tp: TransitionProbabilities, tol: float = 1e-15
) -> tuple[float, float]:
    """Win split by direct summation of the race graph's absorption series.

    Sums the probability of winning the scheduled measurement on the 1st,
    2nd, 3rd, ... cycle until the geometric tail bound drops below tol;
    the fork-path probability is (1 - p14) * phi * gamma. Returns (0, 0)
    for the non-absorbing nu = mu = 0 chain, matching the closed form's
    degenerate-case convention.
    """
    if not tol > 0.0:
        raise ValueError("tol must be > 0")
    ratio = (1.0 - tp.mu) * (1.0 - tp.nu)
    if ratio >= 1.0:
        return 0.0, 0.0
    term = tp.nu * (1.0 - tp.mu)
    total = 0.0
    while True:
        total += term
        term *= ratio
        # Remaining terms sum to term / (1 - ratio).
        if term / (1.0 - ratio) < tol:
            break
    return total, (1.0 - total) * tp.phi * tp.gamma
