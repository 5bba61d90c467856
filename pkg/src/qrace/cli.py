"""Command-line front end: evaluate, optimize, sweep, simulate, advantage.

Every command emits one self-describing record (JSON by default; CSV with
--format csv) echoing all resolved inputs next to the outputs, plus the
small-power regime diagnostics. Sweeps default to CSV with the swept axis
in the first column; with --format json they stream one record per line.

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 cycle-cap
trip. The QRACE_THREADS environment variable caps simulation parallelism
(0 = one thread per CPU). Record timestamps honor SOURCE_DATE_EPOCH so
runs can be compared byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime
import json
import math
import os
import sys
import warnings

from . import __version__
from . import model
from .economics import (
    GENERAL,
    SIMPLIFIED,
    AdvantageReport,
    EconomicParams,
    advantage_condition,
    effective_hash_rate,
)
from .model import (
    AGGRESSIVE,
    APPROX,
    EXACT,
    PEACEFUL,
    MiningParams,
    OptimalKResult,
    RegimeClampWarning,
    optimal_k,
    regime_check,
    success_probability,
)
from .sim import CycleCapError, SimConfig, simulate_race

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_CYCLE_CAP = 4

_SWEEP_AXES = {
    "K": "iterations",
    "D": "difficulty",
    "m": "registers",
    "r": "grover_rate",
    "lambda": "classical_rate",
    "gamma": "tie_win_prob",
}
_INTEGER_AXES = {"K", "m"}

SWEEP_COLUMNS = [
    "difficulty",
    "registers",
    "grover_rate",
    "classical_rate",
    "network_rate",
    "iterations",
    "tie_win_prob",
    "mode",
    "y",
    "x",
    "nu_exact",
    "nu_approx",
    "mu",
    "phi_exact",
    "phi_approx",
    "p14_exact",
    "p14_approx",
    "p18_exact",
    "p18_approx",
    "p_exact",
    "p_approx",
    "effective_hash_rate_exact",
    "effective_hash_rate_approx",
    "regime_all_ok",
]


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        stamp = datetime.datetime.fromtimestamp(int(epoch), datetime.timezone.utc)
    else:
        stamp = datetime.datetime.now(datetime.timezone.utc)
    return stamp.isoformat()


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ValueError("config file must hold a JSON object of flag values")
    return config


def _pick(ns: argparse.Namespace, config: dict, flag: str, default=None):
    """Resolve one value: explicit flag wins, then config (keyed by flag name)."""
    value = getattr(ns, flag.replace("-", "_"), None)
    if value is not None:
        return value
    if flag in config:
        return config[flag]
    return default


def _rate_from(
    ns: argparse.Namespace, config: dict, rate_flag: str, minutes_flag: str
) -> float | None:
    """One rate in per-second units, from either unit form, flags first.

    Flags within one source are mutually exclusive (argparse enforces the
    flag pair); a flag in either unit shadows both config keys.
    """
    flag_rate = getattr(ns, rate_flag.replace("-", "_"), None)
    if flag_rate is not None:
        return float(flag_rate)
    flag_minutes = getattr(ns, minutes_flag.replace("-", "_"), None)
    if flag_minutes is not None:
        return 1.0 / (60.0 * float(flag_minutes))
    cfg_rate = config.get(rate_flag)
    cfg_minutes = config.get(minutes_flag)
    if cfg_rate is not None and cfg_minutes is not None:
        raise ValueError(f"config gives both {rate_flag} and {minutes_flag}")
    if cfg_rate is not None:
        return float(cfg_rate)
    if cfg_minutes is not None:
        return 1.0 / (60.0 * float(cfg_minutes))
    return None


def _resolve_rates(ns: argparse.Namespace, config: dict) -> tuple[float, float]:
    """Resolve (lambda, lambda0) in per-second units from either flag form."""
    lambda0 = _rate_from(ns, config, "lambda0", "network-block-minutes")
    if lambda0 is None:
        lambda0 = 1.0 / 600.0
    lam = _rate_from(ns, config, "lambda", "block-minutes")
    if lam is None:
        lam = lambda0
    return lam, lambda0


def _resolve_params(
    ns: argparse.Namespace,
    config: dict,
    *,
    k_required: bool = True,
    k_min: int = 1,
) -> MiningParams:
    difficulty = _pick(ns, config, "difficulty")
    if difficulty is None:
        raise ValueError("difficulty is required")
    grover_rate = _pick(ns, config, "grover-rate")
    if grover_rate is None:
        raise ValueError("grover-rate is required")
    k = _pick(ns, config, "k")
    if k is None:
        if k_required:
            raise ValueError("k (iterations before measurement) is required")
        k = 1
    elif int(k) < k_min:
        raise ValueError(f"k must be >= {k_min} for this command")
    lam, lambda0 = _resolve_rates(ns, config)
    return MiningParams(
        difficulty=float(difficulty),
        grover_rate=float(grover_rate),
        iterations=int(k),
        registers=int(_pick(ns, config, "registers", 1)),
        classical_rate=lam,
        network_rate=lambda0,
        tie_win_prob=float(_pick(ns, config, "gamma", 0.0)),
        mode=str(_pick(ns, config, "mode", PEACEFUL)),
    )


def _resolve_econ(ns: argparse.Namespace, config: dict) -> EconomicParams:
    grover_cost = _pick(ns, config, "grover-cost")
    hash_cost = _pick(ns, config, "hash-cost")
    if grover_cost is None or hash_cost is None:
        raise ValueError("grover-cost and hash-cost are required")
    return EconomicParams(grover_cost=float(grover_cost), hash_cost=float(hash_cost))


def _params_dict(params: MiningParams) -> dict:
    return {
        "difficulty": params.difficulty,
        "registers": params.registers,
        "grover_rate": params.grover_rate,
        "classical_rate": params.classical_rate,
        "network_rate": params.network_rate,
        "iterations": params.iterations,
        "tie_win_prob": params.tie_win_prob,
        "mode": params.mode,
    }


def _regime_dict(params: MiningParams) -> dict:
    report = regime_check(params)
    return {
        "k_large": report.k_large,
        "k_over_sqrt_d": report.k_over_sqrt_d,
        "k_small_ok": report.k_small_ok,
        "mk_over_sqrt_d": report.mk_over_sqrt_d,
        "mk_small_ok": report.mk_small_ok,
        "lambda_ratio": report.lambda_ratio,
        "lambda_approx_ok": report.lambda_approx_ok,
        "all_ok": report.all_ok(),
    }


def _record(command: str, params: MiningParams, results: dict, regime_params=None) -> dict:
    return {
        "command": command,
        "params": _params_dict(params),
        "results": results,
        "regime": _regime_dict(regime_params if regime_params is not None else params),
        "version": __version__,
        "timestamp": _timestamp(),
    }


def _flatten_record(record: dict) -> dict:
    flat = {}

    def walk(node, prefix):
        for key, value in node.items():
            name = f"{prefix}{key}"
            if isinstance(value, dict):
                walk(value, name + ".")
            else:
                flat[name] = value

    walk(record, "")
    return flat


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _emit(record: dict, fmt: str, stream) -> None:
    if fmt == "csv":
        flat = _flatten_record(record)
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(flat.keys())
        writer.writerow([_csv_cell(v) for v in flat.values()])
    else:
        stream.write(json.dumps(record, indent=2))
        stream.write("\n")


def _evaluate_results(params: MiningParams) -> dict:
    nu_e = model.nu_exact(params)
    mu_ = model.mu(params)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RegimeClampWarning)
        nu_a = model.nu_approx(params)
        nu_clamped = any(issubclass(w.category, RegimeClampWarning) for w in caught)
    if params.mode == AGGRESSIVE:
        phi_e = model.phi_exact(params)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RegimeClampWarning)
            phi_a = model.phi_approx(params)
            phi_clamped = any(
                issubclass(w.category, RegimeClampWarning) for w in caught
            )
    else:
        phi_e = phi_a = 0.0
        phi_clamped = False
    gamma = params.tie_win_prob
    p14_e = model.p14(nu_e, mu_)
    p14_a = model.p14(nu_a, mu_)
    p18_e = model.p18(nu_e, mu_, phi_e, gamma)
    p18_a = model.p18(nu_a, mu_, phi_a, gamma)
    p_e = p14_e + p18_e
    p_a = p14_a + p18_a
    return {
        "nu_exact": nu_e,
        "nu_approx": nu_a,
        "mu": mu_,
        "phi_exact": phi_e,
        "phi_approx": phi_a,
        "p14_exact": p14_e,
        "p14_approx": p14_a,
        "p18_exact": p18_e,
        "p18_approx": p18_a,
        "p_exact": p_e,
        "p_approx": p_a,
        "effective_hash_rate_exact": effective_hash_rate(
            p_e, params.difficulty, params.network_rate
        ),
        "effective_hash_rate_approx": effective_hash_rate(
            p_a, params.difficulty, params.network_rate
        ),
        "y": params.y,
        "x": params.x,
        "clamped": {"nu_approx": nu_clamped, "phi_approx": phi_clamped},
    }


def _cmd_evaluate(ns: argparse.Namespace, config: dict, stream) -> int:
    params = _resolve_params(ns, config, k_required=True, k_min=1)
    record = _record("evaluate", params, _evaluate_results(params))
    _emit(record, ns.format or "json", stream)
    return EXIT_OK


def _optimum_dict(result: OptimalKResult) -> dict:
    return {
        "y0": result.y0,
        "measure_time_s": result.measure_time_s,
        "measure_time_min": result.measure_time_s / 60.0,
        "k_real": result.k_real,
        "k_int": result.k_int,
        "p14_at_k": result.p14_at_k,
    }


def _cmd_optimize(ns: argparse.Namespace, config: dict, stream) -> int:
    params = _resolve_params(ns, config, k_required=False)
    approx = optimal_k(params, model.APPROX_P14)
    exact = optimal_k(params, model.EXACT_P14)
    results = {
        "approx": _optimum_dict(approx),
        "exact": _optimum_dict(exact),
    }
    record = _record(
        "optimize",
        params,
        results,
        regime_params=dataclasses.replace(params, iterations=approx.k_int),
    )
    _emit(record, ns.format or "json", stream)
    return EXIT_OK


def _sweep_values(start: float, stop: float, steps: int, scale: str) -> list[float]:
    if steps < 2:
        raise ValueError("steps must be >= 2")
    if not start < stop:
        raise ValueError("sweep requires from < to")
    if scale == "log":
        if start <= 0.0:
            raise ValueError("log scale requires from > 0")
        lo, hi = math.log(start), math.log(stop)
        return [math.exp(lo + (hi - lo) * i / (steps - 1)) for i in range(steps)]
    return [start + (stop - start) * i / (steps - 1) for i in range(steps)]


def _sweep_row(params: MiningParams) -> dict:
    exact = success_probability(params, EXACT)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeClampWarning)
        approx = success_probability(params, APPROX)
        nu_a = model.nu_approx(params)
        phi_a = model.phi_approx(params) if params.mode == AGGRESSIVE else 0.0
    phi_e = model.phi_exact(params) if params.mode == AGGRESSIVE else 0.0
    return {
        "difficulty": params.difficulty,
        "registers": params.registers,
        "grover_rate": params.grover_rate,
        "classical_rate": params.classical_rate,
        "network_rate": params.network_rate,
        "iterations": params.iterations,
        "tie_win_prob": params.tie_win_prob,
        "mode": params.mode,
        "y": params.y,
        "x": params.x,
        "nu_exact": model.nu_exact(params),
        "nu_approx": nu_a,
        "mu": model.mu(params),
        "phi_exact": phi_e,
        "phi_approx": phi_a,
        "p14_exact": exact.p14,
        "p14_approx": approx.p14,
        "p18_exact": exact.p18,
        "p18_approx": approx.p18,
        "p_exact": exact.total,
        "p_approx": approx.total,
        "effective_hash_rate_exact": effective_hash_rate(
            exact.total, params.difficulty, params.network_rate
        ),
        "effective_hash_rate_approx": effective_hash_rate(
            approx.total, params.difficulty, params.network_rate
        ),
        "regime_all_ok": regime_check(params).all_ok(),
    }


def _cmd_sweep(ns: argparse.Namespace, config: dict, stream) -> int:
    axis = ns.sweep
    field = _SWEEP_AXES[axis]
    base = _resolve_params(ns, config, k_required=(axis != "K"))
    values = _sweep_values(ns.sweep_from, ns.sweep_to, ns.steps, ns.scale)
    if axis in _INTEGER_AXES:
        values = [int(round(v)) for v in values]
    fmt = ns.format or "csv"
    if fmt == "csv":
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow([axis] + SWEEP_COLUMNS)
        for value in values:
            point = dataclasses.replace(base, **{field: value})
            row = _sweep_row(point)
            writer.writerow([_csv_cell(value)] + [_csv_cell(row[c]) for c in SWEEP_COLUMNS])
    else:
        for value in values:
            point = dataclasses.replace(base, **{field: value})
            record = _record("sweep", point, {"axis": axis, "value": value, **_sweep_row(point)})
            stream.write(json.dumps(record))
            stream.write("\n")
    return EXIT_OK


def _cmd_simulate(ns: argparse.Namespace, config: dict, stream) -> int:
    params = _resolve_params(ns, config, k_required=True, k_min=1)
    trials = _pick(ns, config, "trials")
    if trials is None:
        raise ValueError("trials is required")
    cfg = SimConfig(
        trials=int(trials),
        seed=int(_pick(ns, config, "seed", 0)),
        iteration_mode=str(_pick(ns, config, "iteration-mode", "continuous_rt")),
        chunk_size=int(_pick(ns, config, "chunk-size", 1_000_000)),
        cycle_cap=int(_pick(ns, config, "cycle-cap", 1_000_000_000)),
    )
    threads = int(os.environ.get("QRACE_THREADS", "1"))
    result = simulate_race(params, cfg, threads=threads)
    exact_p = success_probability(params, EXACT).total
    sigma = (exact_p * (1.0 - exact_p) / cfg.trials) ** 0.5
    if sigma > 0.0:
        z = (result.empirical_p - exact_p) / sigma
    else:
        z = 0.0 if result.empirical_p == exact_p else float("inf")
    results = {
        "config": {
            "trials": cfg.trials,
            "seed": cfg.seed,
            "iteration_mode": cfg.iteration_mode,
            "chunk_size": cfg.chunk_size,
            "cycle_cap": cfg.cycle_cap,
        },
        "quantum_wins": result.quantum_wins,
        "classical_wins": result.classical_wins,
        "stale_events": result.stale_events,
        "empirical_p": result.empirical_p,
        "standard_error": result.standard_error,
        "cycles_total": result.cycles_total,
        "exact_p": exact_p,
        "z_score": z,
    }
    _emit(_record("simulate", params, results), ns.format or "json", stream)
    return EXIT_OK


def _advantage_dict(report: AdvantageReport, hash_cost: float, p: float | None) -> dict:
    out = {
        "quantum_cost_per_block": report.quantum_cost_per_block,
        "classical_cost_per_block": report.classical_cost_per_block,
        "advantageous": report.advantageous,
        "threshold_ratio": report.threshold_ratio,
        "quantum_advantage_factor": report.quantum_advantage_factor,
        "method": report.method,
        "break_even_grover_cost": hash_cost * report.threshold_ratio,
    }
    if p is not None:
        out["p"] = p
    return out


def _cmd_advantage(ns: argparse.Namespace, config: dict, stream) -> int:
    caller_k = _pick(ns, config, "k")
    params = _resolve_params(ns, config, k_required=False)
    econ = _resolve_econ(ns, config)
    optimum = optimal_k(params, model.APPROX_P14)
    at_opt = dataclasses.replace(params, iterations=optimum.k_int)

    general_opt = advantage_condition(at_opt, econ, GENERAL)
    results = {
        "econ": {"grover_cost": econ.grover_cost, "hash_cost": econ.hash_cost},
        "optimal_k": optimum.k_int,
        "general_at_optimal_k": _advantage_dict(
            general_opt, econ.hash_cost, success_probability(at_opt, EXACT).total
        ),
    }
    if caller_k is not None:
        at_caller = dataclasses.replace(params, iterations=int(caller_k))
        general_caller = advantage_condition(at_caller, econ, GENERAL)
        results["general_at_caller_k"] = _advantage_dict(
            general_caller, econ.hash_cost, success_probability(at_caller, EXACT).total
        )
    # The simplified condition is defined for a peaceful miner at the
    # optimal schedule; for aggressive callers it is still the sufficient
    # condition, evaluated on the peaceful twin.
    peaceful_opt = dataclasses.replace(at_opt, mode=PEACEFUL, tie_win_prob=0.0)
    simplified = advantage_condition(peaceful_opt, econ, SIMPLIFIED)
    results["simplified"] = _advantage_dict(simplified, econ.hash_cost, None)

    record = _record("advantage", params, results, regime_params=at_opt)
    if caller_k is None:
        record["params"]["iterations"] = None
    _emit(record, ns.format or "json", stream)
    return EXIT_OK


def _add_param_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--difficulty", type=float, help="expected classical hashes per block (D >= 1)")
    sub.add_argument("--registers", type=int, help="parallel registers m (default 1)")
    sub.add_argument("--grover-rate", type=float, help="iterations per second per register (r)")
    rate = sub.add_mutually_exclusive_group()
    rate.add_argument("--lambda", type=float,
                      help="classical block rate in blocks/second (default lambda0)")
    rate.add_argument("--block-minutes", type=float,
                      help="classical mean minutes per block (lambda = 1/(60*minutes))")
    rate0 = sub.add_mutually_exclusive_group()
    rate0.add_argument("--lambda0", type=float,
                       help="whole-network block rate in blocks/second (default 1/600)")
    rate0.add_argument("--network-block-minutes", type=float,
                       help="whole-network mean minutes per block")
    sub.add_argument("--k", type=int, help="iterations before the scheduled measurement")
    sub.add_argument("--gamma", type=float, help="fork win fraction in [0, 1] (default 0)")
    sub.add_argument("--mode", choices=[PEACEFUL, AGGRESSIVE], help="mining mode (default peaceful)")
    sub.add_argument("--format", choices=["json", "csv"], help="output format")
    sub.add_argument("--config", help="JSON file of flag values (flags override it)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qrace",
        description="Quantum-vs-classical mining race model: win probability, "
        "optimal measurement schedule, Monte Carlo validation, and mining economics.",
    )
    parser.add_argument("--version", action="version", version=f"qrace {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    p_eval = commands.add_parser("evaluate", help="transition probabilities and win probability at one parameter point")
    _add_param_flags(p_eval)

    p_opt = commands.add_parser("optimize", help="iteration count maximizing the scheduled-path win probability")
    _add_param_flags(p_opt)

    p_sweep = commands.add_parser("sweep", help="evaluate along a parameter grid (CSV by default)")
    _add_param_flags(p_sweep)
    p_sweep.add_argument("--sweep", required=True, choices=sorted(_SWEEP_AXES),
                         help="parameter to sweep")
    p_sweep.add_argument("--from", dest="sweep_from", type=float, required=True)
    p_sweep.add_argument("--to", dest="sweep_to", type=float, required=True)
    p_sweep.add_argument("--steps", type=int, required=True)
    p_sweep.add_argument("--scale", choices=["linear", "log"], default="linear")

    p_sim = commands.add_parser("simulate", help="Monte Carlo race simulation vs the closed form")
    _add_param_flags(p_sim)
    p_sim.add_argument("--trials", type=int, help="number of independent block races")
    p_sim.add_argument("--seed", type=int, help="unsigned 64-bit stream seed (default 0)")
    p_sim.add_argument("--chunk-size", type=int, help="trials per deterministic work unit (default 1e6)")
    p_sim.add_argument("--iteration-mode", choices=["continuous_rt", "floor_rt"],
                       help="interrupt-measurement iteration convention")
    p_sim.add_argument("--cycle-cap", type=int, help="per-trial cycle cap (default 1e9)")

    p_adv = commands.add_parser("advantage", help="cost-per-block comparison and break-even ratios")
    _add_param_flags(p_adv)
    p_adv.add_argument("--grover-cost", type=float, help="currency per Grover iteration")
    p_adv.add_argument("--hash-cost", type=float, help="currency per classical hash")

    return parser


_DISPATCH = {
    "evaluate": _cmd_evaluate,
    "optimize": _cmd_optimize,
    "sweep": _cmd_sweep,
    "simulate": _cmd_simulate,
    "advantage": _cmd_advantage,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        config = _load_config(ns.config)
        return _DISPATCH[ns.command](ns, config, sys.stdout)
    except CycleCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CYCLE_CAP
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
