"""Race model for a single quantum miner against a classical network.

A quantum miner repeatedly runs K amplitude-amplification iterations on m
parallel registers and measures, racing classical miners whose block
arrivals are exponential with rate lambda. The functions here give the
transition probabilities of that race (scheduled-measurement success nu,
classical pre-emption mu, interrupt-measurement success phi, fork win
gamma), the absorbed win probability split (p14 via the scheduled path,
p18 via the fork path), small-power closed-form approximations of all of
them, and the iteration count K that maximizes the scheduled-path win
probability.

All probabilities are dimensionless; rates are per second; K counts
iterations. Everything is pure and safe for concurrent use.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .numerics import QuadratureSpec, integrate, lambert_w0

PEACEFUL = "peaceful"
AGGRESSIVE = "aggressive"
MODES = (PEACEFUL, AGGRESSIVE)

EXACT = "exact"
APPROX = "approx"
METHODS = (EXACT, APPROX)


class RegimeClampWarning(UserWarning):
    """A small-power approximation left [0, 1] and was clamped.

    The clamp means the regime assumptions behind the approximation are
    violated at these parameters; exact quantities remain valid.
    """


class OptimizationError(ArithmeticError):
    """The bracketed search for the best integer K could not certify a maximum."""


@dataclass(frozen=True)
class MiningParams:
    """Physical and protocol parameters of one block race.

    difficulty    expected classical hashes per block (search space over
                  marked items), >= 1
    grover_rate   sequential iterations per second per register, > 0
    iterations    iterations K applied before the scheduled measurement
    registers     parallel registers m, >= 1
    classical_rate   classical-network block rate lambda (1/s)
    network_rate     whole-network block rate lambda0 (1/s), 1/600 for Bitcoin
    tie_win_prob  fraction gamma of forks resolved for the quantum miner
    mode          "peaceful" (abandon on rival block) or "aggressive"
                  (measure immediately on rival block)
    """

    difficulty: float
    grover_rate: float
    iterations: int
    registers: int = 1
    classical_rate: float = 1.0 / 600.0
    network_rate: float = 1.0 / 600.0
    tie_win_prob: float = 0.0
    mode: str = PEACEFUL

    def __post_init__(self) -> None:
        if not self.difficulty >= 1.0:
            raise ValueError("difficulty must be >= 1")
        if not self.grover_rate > 0.0:
            raise ValueError("grover_rate must be > 0")
        if self.iterations < 0 or int(self.iterations) != self.iterations:
            raise ValueError("iterations must be an integer >= 0")
        if self.registers < 1 or int(self.registers) != self.registers:
            raise ValueError("registers must be an integer >= 1")
        if not self.classical_rate > 0.0:
            raise ValueError("classical_rate must be > 0")
        if not self.network_rate > 0.0:
            raise ValueError("network_rate must be > 0")
        if not 0.0 <= self.tie_win_prob <= 1.0:
            raise ValueError("tie_win_prob must be in [0, 1]")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")

    @property
    def measure_time(self) -> float:
        """Seconds of iterating before the scheduled measurement, T = K / r."""
        return self.iterations / self.grover_rate

    @property
    def theta(self) -> float:
        """Rotation angle per iteration, arcsin(1 / sqrt(D))."""
        return math.asin(1.0 / math.sqrt(self.difficulty))

    @property
    def x(self) -> float:
        """Dimensionless power ratio 4 m r^2 / (lambda^2 D)."""
        return (
            4.0
            * self.registers
            * self.grover_rate**2
            / (self.classical_rate**2 * self.difficulty)
        )

    @property
    def y(self) -> float:
        """Dimensionless measurement time lambda K / r."""
        return self.classical_rate * self.iterations / self.grover_rate


@dataclass(frozen=True)
class TransitionProbabilities:
    """Edge weights of the race graph; all in [0, 1]."""

    nu: float
    mu: float
    phi: float
    gamma: float
    method: str = EXACT

    def __post_init__(self) -> None:
        for name in ("nu", "mu", "phi", "gamma"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")


@dataclass(frozen=True)
class SuccessBreakdown:
    """Win probability split by absorbing path.

    p14 is the scheduled-measurement path, p18 the fork path; total is
    their sum by construction.
    """

    p14: float
    p18: float
    total: float
    method: str

    def __post_init__(self) -> None:
        if not 0.0 <= self.total <= 1.0 + 1e-12:
            raise ValueError("total must be in [0, 1]")


@dataclass(frozen=True)
class OptimalKResult:
    """Outcome of the optimal iteration-count search.

    y0 is the dimensionless optimum lambda*T of the small-power model,
    measure_time_s = y0 / lambda, k_real the continuous maximizer of the
    chosen objective, and k_int the integer K (best of floor/ceil under
    the exact scheduled-path probability, which is p14_at_k).
    """

    y0: float
    measure_time_s: float
    k_real: float
    k_int: int
    p14_at_k: float


@dataclass(frozen=True)
class RegimeReport:
    """Small-power regime diagnostics: each ratio with its pass flag."""

    k_large: bool
    k_over_sqrt_d: float
    k_small_ok: bool
    mk_over_sqrt_d: float
    mk_small_ok: bool
    lambda_ratio: float
    lambda_approx_ok: bool

    def all_ok(self) -> bool:
        return (
            self.k_large
            and self.k_small_ok
            and self.mk_small_ok
            and self.lambda_approx_ok
        )

    def failing(self) -> list[str]:
        names = []
        if not self.k_large:
            names.append("k_large")
        if not self.k_small_ok:
            names.append("k_small_vs_sqrt_d")
        if not self.mk_small_ok:
            names.append("mk_small_vs_sqrt_d")
        if not self.lambda_approx_ok:
            names.append("lambda_approx")
        return names


def _compound_registers(single: float, m: int) -> float:
    # 1 - (1 - s)^m without cancellation for tiny s.
    if single >= 1.0:
        return 1.0
    if single <= 0.0:
        return 0.0
    return -math.expm1(m * math.log1p(-single))


def _clamp_unit(value: float, what: str) -> float:
    if 0.0 <= value <= 1.0:
        return value
    clamped = min(1.0, max(0.0, value))
    warnings.warn(
        f"{what} = {value:.6g} is outside [0, 1]; clamped to {clamped:.6g} "
        "(small-power regime assumptions are violated)",
        RegimeClampWarning,
        stacklevel=3,
    )
    return clamped


def grover_single_success(K: int, D: float) -> float:
    """Probability one register yields a marked item when measured after K iterations."""
    if D < 1.0:
        raise ValueError("difficulty must be >= 1")
    if K < 0:
        raise ValueError("iteration count must be >= 0")
    theta = math.asin(1.0 / math.sqrt(D))
    s = math.sin(2.0 * (K + 0.5) * theta) ** 2
    return min(1.0, max(0.0, s))


def q_of_t(t: float, params: MiningParams) -> float:
    """Measurement success probability after t seconds of iterating.

    Uses the continuous iteration count r*t, so q_of_t(K / r) agrees with
    nu_exact at the scheduled measurement time.
    """
    if t < 0.0:
        raise ValueError("t must be >= 0")
    s = math.sin(2.0 * (params.grover_rate * t + 0.5) * params.theta) ** 2
    return _compound_registers(min(1.0, s), params.registers)


def nu_exact(params: MiningParams) -> float:
    """Probability the scheduled measurement of all m registers yields a block."""
    single = grover_single_success(params.iterations, params.difficulty)
    return _compound_registers(single, params.registers)


def nu_approx(params: MiningParams) -> float:
    """Small-power approximation 4 m K^2 / D, clamped to [0, 1] with a loud flag.

    Out-of-regime use raises RegimeClampWarning rather than failing.
    """
    value = (
        4.0 * params.registers * params.iterations**2 / params.difficulty
    )
    return _clamp_unit(value, "nu_approx")


def mu(params: MiningParams) -> float:
    """Probability some classical miner finds a block before the scheduled time T."""
    return -math.expm1(-params.classical_rate * params.measure_time)


# phi spans many orders of magnitude below 1 at realistic difficulty, so its
# default quadrature target is relative; an absolute 1e-10 would be coarser
# than the value itself.
_PHI_SPEC = QuadratureSpec(abs_tol=1e-300, rel_tol=1e-10, max_depth=60)


def phi_exact(params: MiningParams, spec: QuadratureSpec | None = None) -> float:
    """Interrupt-measurement success probability, by quadrature.

    Conditioned on a classical block landing before T, the arrival time is
    a truncated exponential on [0, T]; phi integrates q(t) against that
    density. Requires aggressive mode and K >= 1.
    """
    if params.mode != AGGRESSIVE:
        raise ValueError("phi is only defined for aggressive mode")
    if params.iterations < 1:
        raise ValueError("phi requires iterations >= 1")
    lam = params.classical_rate
    T = params.measure_time
    norm = -math.expm1(-lam * T)

    def integrand(t: float) -> float:
        return lam / norm * math.exp(-lam * t) * q_of_t(t, params)

    value = integrate(integrand, 0.0, T, spec if spec is not None else _PHI_SPEC)
    return min(1.0, max(0.0, value))


def _gamma3(u: float) -> float:
    # int_0^u s^2 e^-s ds = 2 - e^-u (u^2 + 2u + 2); alternating series below
    # u = 0.1 where the closed form cancels catastrophically.
    if u < 0.1:
        total = 0.0
        for k in range(30):
            term = (-1.0) ** k * u ** (k + 3) / (math.factorial(k) * (k + 3))
            total += term
            if abs(term) <= 1e-24 * abs(total):
                break
        return total
    return math.exp(-u) * (-u * (u + 2.0) - 2.0) + 2.0


def phi_approx(params: MiningParams) -> float:
    """Closed-form small-power approximation of phi, clamped with a loud flag."""
    if params.mode != AGGRESSIVE:
        raise ValueError("phi is only defined for aggressive mode")
    if params.iterations < 1:
        raise ValueError("phi requires iterations >= 1")
    lam = params.classical_rate
    u = lam * params.measure_time
    norm = -math.expm1(-u)
    value = (
        4.0
        * params.registers
        * params.grover_rate**2
        / (params.difficulty * norm)
        * _gamma3(u)
        / lam**2
    )
    return _clamp_unit(value, "phi_approx")


def p14(nu: float, mu: float) -> float:
    """Probability the race absorbs on the scheduled-measurement win path.

    The degenerate nu = mu = 0 chain never absorbs there; returns 0.
    """
    if not 0.0 <= nu <= 1.0:
        raise ValueError("nu must be in [0, 1]")
    if not 0.0 <= mu <= 1.0:
        raise ValueError("mu must be in [0, 1]")
    # 1 - (1-mu)(1-nu), written without cancellation.
    denom = mu + nu - mu * nu
    if denom <= 0.0:
        return 0.0
    return nu * (1.0 - mu) / denom


def p18(nu: float, mu: float, phi: float, gamma: float) -> float:
    """Probability the race absorbs on the fork win path, (1 - p14) * phi * gamma."""
    for name, v in (("phi", phi), ("gamma", gamma)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must be in [0, 1]")
    return (1.0 - p14(nu, mu)) * phi * gamma


def transition_probabilities(
    params: MiningParams, method: str = EXACT
) -> TransitionProbabilities:
    """Assemble the four race-graph edge weights for the given parameters."""
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    nu = nu_exact(params) if method == EXACT else nu_approx(params)
    if params.mode == AGGRESSIVE:
        phi = phi_exact(params) if method == EXACT else phi_approx(params)
    else:
        phi = 0.0
    return TransitionProbabilities(
        nu=nu, mu=mu(params), phi=phi, gamma=params.tie_win_prob, method=method
    )


def success_probability(params: MiningParams, method: str = EXACT) -> SuccessBreakdown:
    """Total probability the quantum miner's block is the one accepted.

    method "exact" uses the sine-form nu and quadrature phi; "approx" uses
    the small-power closed forms (clamped, with warnings, out of regime).
    """
    tp = transition_probabilities(params, method)
    part14 = p14(tp.nu, tp.mu)
    part18 = p18(tp.nu, tp.mu, tp.phi, tp.gamma)
    return SuccessBreakdown(
        p14=part14, p18=part18, total=part14 + part18, method=method
    )


def p14_tilde_xy(x: float, y: float) -> float:
    """Small-power scheduled-path win probability x y^2 / (e^y + x y^2 - 1)."""
    if x < 0.0:
        raise ValueError("x must be >= 0")
    if not y > 0.0:
        raise ValueError("y must be > 0")
    return x * y * y / (math.expm1(y) + x * y * y)


def optimal_y0() -> float:
    """Dimensionless measurement time lambda*T maximizing the scheduled-path win."""
    return lambert_w0(-2.0 * math.exp(-2.0)) + 2.0


def a_constant() -> float:
    """Plateau constant (e^y0 - 1) / y0^2 of the optimal win probability x/(a+x)."""
    y0 = optimal_y0()
    return math.expm1(y0) / (y0 * y0)


APPROX_P14 = "approx_p14"
EXACT_P14 = "exact_p14"


def _p14_exact_continuous(k: float, params: MiningParams) -> float:
    s = math.sin(2.0 * (k + 0.5) * params.theta) ** 2
    nu = _compound_registers(min(1.0, s), params.registers)
    # Survival exp(-lambda k / r) is kept in its own exponential form; going
    # through mu = 1 - exp(...) and back underflows the numerator to zero
    # for lambda k / r beyond ~40, which breaks the bracketed search.
    exponent = -params.classical_rate * k / params.grover_rate
    survive = math.exp(exponent)
    mu_ = -math.expm1(exponent)
    denom = mu_ + nu - mu_ * nu
    if denom <= 0.0:
        return 0.0
    return nu * survive / denom


def _golden_max(f, lo: float, hi: float, tol: float) -> float:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - (hi - lo) * inv_phi
    d = lo + (hi - lo) * inv_phi
    fc = f(c)
    fd = f(d)
    while hi - lo > tol:
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - (hi - lo) * inv_phi
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + (hi - lo) * inv_phi
            fd = f(d)
    return 0.5 * (lo + hi)


def optimal_k(params: MiningParams, objective: str = APPROX_P14) -> OptimalKResult:
    """Iteration count maximizing the scheduled-path win probability.

    objective "approx_p14" solves the small-power model analytically,
    K = y0 r / lambda with y0 = W(-2/e^2) + 2. "exact_p14" maximizes the
    exact scheduled-path probability over integer K by a coarse scan plus
    golden-section refinement on the bracket [1, ceil(pi sqrt(D) / 4)].
    Both report the integer K (floor or ceil of the continuous optimum,
    whichever has the better exact probability) and its exact probability.
    """
    y0 = optimal_y0()
    lam = params.classical_rate
    r = params.grover_rate

    if objective == APPROX_P14:
        k_real = y0 * r / lam
    elif objective == EXACT_P14:
        k_real = _maximize_exact(params)
    else:
        raise ValueError(f"objective must be {APPROX_P14!r} or {EXACT_P14!r}")

    # K = 0 is a degenerate always-win artifact (T = 0 means no classical
    # pre-emption is ever possible), so integer candidates start at 1.
    lo = max(1, math.floor(k_real))
    hi = max(1, math.ceil(k_real))
    k_int = max(
        (lo, hi), key=lambda k: _p14_exact_continuous(float(k), params)
    )
    return OptimalKResult(
        y0=y0,
        measure_time_s=y0 / lam,
        k_real=k_real,
        k_int=k_int,
        p14_at_k=_p14_exact_continuous(float(k_int), params),
    )


def _maximize_exact(params: MiningParams, grid_points: int = 512) -> float:
    k_max = max(2.0, math.ceil(math.pi * math.sqrt(params.difficulty) / 4.0))

    def f(k: float) -> float:
        return _p14_exact_continuous(k, params)

    # Log-spaced scan: the objective lives on the survival scale r / lambda,
    # which can sit many orders of magnitude below the bracket end; a linear
    # grid would see only the underflowed-to-zero tail.
    span = math.log(k_max)
    grid = [math.exp(span * i / (grid_points - 1)) for i in range(grid_points)]
    values = [f(k) for k in grid]
    best = max(range(grid_points), key=values.__getitem__)
    lo = grid[max(0, best - 1)]
    hi = grid[min(grid_points - 1, best + 1)]
    k_cont = _golden_max(f, lo, hi, tol=0.25)

    # Refinement can only improve on the coarse grid if the objective is
    # unimodal over the bracket; a regression means the search failed.
    if f(k_cont) + 1e-15 < values[best]:
        raise OptimizationError(
            "exact-objective search failed: refined value regressed below the "
            "coarse scan (objective not unimodal within bracket?)"
        )
    # Integer neighborhood scan guards the final rounding.
    candidates = [
        k
        for k in range(max(1, round(k_cont) - 2), round(k_cont) + 3)
        if 1 <= k <= k_max
    ]
    k_best = max(candidates, key=lambda k: f(float(k)))
    for k in (k_best - 3, k_best + 3):
        if 1 <= k <= k_max and f(float(k)) > f(float(k_best)):
            raise OptimizationError(
                "exact-objective search failed: integer neighborhood is not "
                "locally optimal (objective not unimodal within bracket?)"
            )
    return k_cont


def regime_check(
    params: MiningParams,
    k_large_threshold: int = 100,
    small_ratio_threshold: float = 1e-2,
    lambda_tolerance: float = 0.05,
) -> RegimeReport:
    """Flag whether the small-power approximations are trustworthy here.

    The defaults are conservative realizations of the asymptotic
    requirements: K at least k_large_threshold, K and m*K below
    small_ratio_threshold * sqrt(D), and lambda within lambda_tolerance
    of lambda0.
    """
    sqrt_d = math.sqrt(params.difficulty)
    k_ratio = params.iterations / sqrt_d
    mk_ratio = params.registers * params.iterations / sqrt_d
    lam_ratio = params.classical_rate / params.network_rate
    return RegimeReport(
        k_large=params.iterations >= k_large_threshold,
        k_over_sqrt_d=k_ratio,
        k_small_ok=k_ratio <= small_ratio_threshold,
        mk_over_sqrt_d=mk_ratio,
        mk_small_ok=mk_ratio <= small_ratio_threshold,
        lambda_ratio=lam_ratio,
        lambda_approx_ok=abs(lam_ratio - 1.0) <= lambda_tolerance,
    )
