"""
BinSense - Command Line
-----------------------
Front end for simulation runs and the verification harnesses.

    python cli/binsense.py simulate --n 1024 --d 2 --checkpoints 1024,1048576 --trials 100
    python cli/binsense.py drift --n 64 --d 2 --states random:1000
    python cli/binsense.py dominance --n 256 --d 2 --t-early 10 --t-late 100 --trials 2000
    python cli/binsense.py induction --n 4096 --d 2 --t 16 --L 8 --trials 1000
    python cli/binsense.py fib-base --d 2
    python cli/binsense.py quantile --dist exp --s 10 --n 1024

Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage,
configuration or parameter errors. With --json the standard output is a
single JSON document.
"""

import os
import sys
import json
import math
import logging
import argparse
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

# Add the project root to the path so we can import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from analysis.gap_stats import dominance_test
from analysis.layered_induction import beta_schedule, default_c_prime, run_two_phase_trials
from analysis.left_scheme import fibonacci_base
from analysis.weighted import tail_target, weight_quantile_M
from experiment.config import load_config_file, parse_config
from experiment.results_writer import STDOUT, emit, summarize
from experiment.runner import all_records, run_experiment
from potential.drift import check_drift_lemmas, random_balanced_states
from potential.functions import PotentialParams, as_gap_vector
from simulation.errors import (
    ConfigError,
    InvalidParameterError,
    LoadOverflowError,
    MgfDomainError,
    PotentialOverflowError,
    TrialError,
)
from simulation.processes import ProcessSpec
from simulation.rng import RngContract
from simulation.weights import make_distribution

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

# Load environment variables
load_dotenv()

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

USAGE_ERRORS = (
    ConfigError,
    InvalidParameterError,
    LoadOverflowError,
    MgfDomainError,
    PotentialOverflowError,
    TrialError,
    OSError,
    ValueError,
)


def _print_json(payload: Any) -> None:
    print(json.dumps(payload, indent=2, default=str))


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def _process_spec(rule: str, d: float, weights: str = "constant") -> ProcessSpec:
    dist = make_distribution(weights)
    if rule in ("one_choice", "one-choice"):
        return ProcessSpec.one_choice(dist)
    if rule == "left":
        return ProcessSpec.left(int(d), dist)
    return ProcessSpec.greedy(d, dist)


# --- simulate ---------------------------------------------------------------

INLINE_FLAGS = ("rule", "d", "n", "balls", "checkpoints", "trials", "weights",
                "weight_params", "measurements", "alpha", "sampler")


def _inline_config(args):
    if args.balls is not None and args.checkpoints is not None:
        raise ConfigError(["use either --balls or --checkpoints, not both"])
    if args.n is None:
        raise ConfigError(["--n is required without --config"])
    checkpoints = args.checkpoints if args.checkpoints is not None else [args.balls if args.balls is not None else args.n]
    weights = {"kind": args.weights or "constant", "params": {}}
    if args.weight_params:
        try:
            weights["params"] = json.loads(args.weight_params)
        except json.JSONDecodeError as e:
            raise ConfigError([f"--weight-params is not valid JSON: {e}"])
    rule = args.rule or "greedy"
    process = {"rule": rule, "weights": weights}
    if rule not in ("one_choice", "one-choice", "onechoice") or args.d is not None:
        process["d"] = args.d if args.d is not None else 2
    if args.sampler:
        process["sampler"] = args.sampler
    doc = {
        "process": process,
        "n": args.n,
        "checkpoints": checkpoints,
        "trials": args.trials if args.trials is not None else 1,
        "seed": args.seed if args.seed is not None else 0,
        "measurements": args.measurements.split(",") if args.measurements else ["gap"],
        "output": {"format": args.format or "csv", "path": args.output or STDOUT},
    }
    if args.alpha is not None:
        doc["alpha"] = args.alpha
    return parse_config(doc)


def cmd_simulate(args) -> int:
    if args.config:
        clashing = [f"--{f.replace('_', '-')}" for f in INLINE_FLAGS if getattr(args, f) is not None]
        if clashing:
            raise ConfigError([f"{flag} cannot be combined with --config" for flag in clashing])
        config = load_config_file(args.config)
        overrides = config.as_dict()
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.output or args.format:
            overrides["output"] = {"format": args.format or config.output_format,
                                   "path": args.output or config.output_path}
        config = parse_config(overrides)
    else:
        config = _inline_config(args)

    results = run_experiment(config, workers=args.workers)
    summary = summarize(results)
    summary_line = "mean gap: " + ", ".join(
        f"m={balls}: {row.mean_gap:.4f}" for balls, row in summary.iterrows()
    )

    if args.json:
        payload: Dict[str, Any] = {
            "config": config.as_dict(),
            "summary": [{"balls": int(b), **{k: (None if math.isnan(v) else float(v)) for k, v in row.items()}}
                        for b, row in summary.iterrows()],
        }
        if config.output_path == STDOUT:
            payload["records"] = all_records(results)
        else:
            emit(results, config.output_format, config.output_path)
            payload["output"] = config.output_path
        _print_json(payload)
        return EXIT_OK

    emit(results, config.output_format, config.output_path)
    # keep stdout parseable when the records went there
    print(summary_line, file=sys.stderr if config.output_path == STDOUT else sys.stdout)
    return EXIT_OK


# --- drift ------------------------------------------------------------------

def _load_states(source: str, n: int, seed: int):
    kind, _, value = source.partition(":")
    if kind == "random":
        try:
            count = int(value)
        except ValueError:
            raise InvalidParameterError(f"random:N needs an integer N, got '{value}'")
        return random_balanced_states(n, count, RngContract(seed, 0).stream())
    if kind == "file":
        states = []
        try:
            with open(value, 'r') as f:
                lines = [line.strip() for line in f if line.strip() and not line.startswith("#")]
        except OSError as e:
            raise InvalidParameterError(f"cannot read state file '{value}': {e}")
        for lineno, line in enumerate(lines, 1):
            try:
                states.append(as_gap_vector([float(v) for v in line.split(",")]))
            except (ValueError, InvalidParameterError) as e:
                raise InvalidParameterError(f"{value}:{lineno}: {e}")
        if not states:
            raise InvalidParameterError(f"state file '{value}' holds no states")
        return states
    raise InvalidParameterError(f"--states must be random:N or file:PATH, got '{source}'")


def cmd_drift(args) -> int:
    spec = _process_spec(args.rule, args.d, args.weights)
    alpha = None if args.alpha == "auto" else float(args.alpha)
    params = PotentialParams.derive(spec, alpha)
    states = _load_states(args.states, args.n, args.seed or 0)
    logger.info(f"Checking drift inequalities on {len(states)} states, alpha={params.alpha:.6g}")

    verdicts = [check_drift_lemmas(x, spec, params) for x in states]
    failures: Dict[str, int] = {}
    for v in verdicts:
        for name in v.failures:
            failures[name] = failures.get(name, 0) + 1
    skipped = {
        "phi_decrease": sum(not v.phi_decrease_applicable for v in verdicts),
        "psi_decrease": sum(not v.psi_decrease_applicable for v in verdicts),
    }
    failed_states = sum(not v.passed for v in verdicts)
    notes = ["manual α: lemma preconditions not guaranteed"] if params.manual else []

    if args.json:
        _print_json({
            "alpha": params.alpha,
            "epsilon": params.epsilon,
            "manual_alpha": params.manual,
            "notes": notes,
            "states": len(verdicts),
            "failed_states": failed_states,
            "failures": failures,
            "skipped": skipped,
            "verdicts": [v.as_row() for v in verdicts],
        })
    else:
        print(f"alpha={params.alpha:.6g} epsilon={params.epsilon:.6g} states={len(verdicts)}")
        for note in notes:
            print(f"NOTE: {note}")
        print(f"{'check':<14}{'failures':>10}{'skipped':>10}")
        for name in ("phi_increase", "psi_increase", "phi_taylor", "psi_taylor", "phi_decrease", "psi_decrease"):
            print(f"{name:<14}{failures.get(name, 0):>10}{skipped.get(name, 0):>10}")
        print("PASS" if failed_states == 0 else f"FAIL: {failed_states} state(s)")
    return EXIT_OK if failed_states == 0 else EXIT_CHECK_FAILED


# --- dominance --------------------------------------------------------------

def cmd_dominance(args) -> int:
    if args.t_early > args.t_late:
        raise InvalidParameterError(f"--t-early ({args.t_early}) must not exceed --t-late ({args.t_late})")
    if args.t_early < 0:
        raise InvalidParameterError("--t-early must be >= 0")
    early_balls, late_balls = args.t_early * args.n, args.t_late * args.n
    checkpoints = sorted({early_balls, late_balls})
    process = {"rule": args.rule, "weights": {"kind": args.weights, "params": {}}}
    if args.rule != "one_choice":
        process["d"] = args.d
    config = parse_config({
        "process": process,
        "n": args.n,
        "checkpoints": checkpoints,
        "trials": args.trials,
        "seed": args.seed or 0,
    })
    results = run_experiment(config, workers=args.workers)
    early = [s.gap for r in results for s in r.samples if s.checkpoint == early_balls]
    late = [s.gap for r in results for s in r.samples if s.checkpoint == late_balls]
    verdict = dominance_test(early, late, args.delta)

    if args.json:
        _print_json({
            "t_early": args.t_early,
            "t_late": args.t_late,
            "passed": verdict.passed,
            "worst_margin": verdict.worst_margin,
            "worst_k": verdict.worst_k,
            "band": verdict.band,
            "samples": verdict.samples,
            "ks_pvalue": verdict.ks_pvalue,
        })
    else:
        print(f"samples={verdict.samples} band={verdict.band:.4f} "
              f"worst_margin={verdict.worst_margin:.4f} at k={verdict.worst_k:g} ks_p={verdict.ks_pvalue:.3g}")
        print("PASS" if verdict.passed else "FAIL")
    return EXIT_OK if verdict.passed else EXIT_CHECK_FAILED


# --- induction --------------------------------------------------------------

def cmd_induction(args) -> int:
    spec = _process_spec(args.rule, args.d)
    c_prime = args.c_prime if args.c_prime is not None else default_c_prime()
    schedule = None
    if args.L > args.n ** 0.25:
        if not args.allow_large_L:
            raise InvalidParameterError(
                f"L={args.L} exceeds n^(1/4)={args.n ** 0.25:.4g}; pass --allow-large-L to run the counting check only"
            )
        logger.warning(f"L={args.L} > n^(1/4): skipping the beta schedule")
    else:
        schedule = beta_schedule(args.L, args.ell, c_prime, args.n, args.d)

    summary = run_two_phase_trials(spec, args.n, args.t, args.L, args.trials, args.seed or 0)
    closed_form_ok = schedule.closed_form_holds() if schedule else None
    ok = summary.violating_trials == 0 and closed_form_ok is not False

    if args.json:
        _print_json({
            "beta": schedule.rows() if schedule else None,
            "floor": schedule.floor if schedule else None,
            "closed_form_holds": closed_form_ok,
            "trials": summary.trials,
            "applicable": summary.applicable,
            "violating_trials": summary.violating_trials,
            "passed": ok,
        })
    else:
        if schedule:
            print(f"{'i':>4}  {'beta_i':>14}  {'beta_i * n':>14}")
            for row in schedule.rows():
                print(f"{row['i']:>4}  {row['beta']:>14.6g}  {row['beta_n']:>14.6g}")
            print(f"floor={schedule.floor:.6g} closed form holds: {closed_form_ok}")
        print(f"trials={summary.trials} applicable={summary.applicable} violations={summary.violating_trials}")
        print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# --- scalars ----------------------------------------------------------------

def cmd_fib_base(args) -> int:
    phi = fibonacci_base(args.d)
    if args.json:
        _print_json({"d": args.d, "phi_d": phi})
    else:
        print(f"{phi:.9f}")
    return EXIT_OK


def cmd_quantile(args) -> int:
    params = json.loads(args.params) if args.params else {}
    dist = make_distribution(args.dist, params)
    value = weight_quantile_M(dist, args.s, args.n)
    if args.json:
        _print_json({"dist": dist.describe(), "s": args.s, "n": args.n,
                     "target": tail_target(args.s, args.n), "M": value,
                     "M_raw": value * dist.raw_scale})
    else:
        print(f"{value:.10g}")
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=None, help='64-bit base seed (default 0)')
    common.add_argument('--json', action='store_true', help='Write a single JSON document to standard output')
    common.add_argument('--log-level', default=os.getenv("BINSENSE_LOG_LEVEL", "WARNING"),
                        help='Logging level (default BINSENSE_LOG_LEVEL or WARNING)')

    parser = argparse.ArgumentParser(prog='binsense', description='Balanced allocation simulator and checks.')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('simulate', parents=[common], help='Run an experiment and emit per-checkpoint records')
    p.add_argument('--config', help='JSON experiment configuration')
    p.add_argument('--rule', choices=['greedy', 'one_choice', 'left'])
    p.add_argument('--d', type=float)
    p.add_argument('--sampler', choices=['auto', 'rank', 'dmin'])
    p.add_argument('--n', type=int)
    p.add_argument('--balls', type=int, help='Single checkpoint, in balls')
    p.add_argument('--checkpoints', type=_int_list, help='Comma-separated checkpoints, in balls')
    p.add_argument('--trials', type=int)
    p.add_argument('--weights', help='Weight distribution kind')
    p.add_argument('--weight-params', help='Weight distribution parameters as JSON')
    p.add_argument('--measurements', help='Comma-separated subset of gap,potentials,nu,left_layers')
    p.add_argument('--alpha', type=float)
    p.add_argument('--workers', type=int, default=None, help='Worker processes (default BINSENSE_WORKERS)')
    p.add_argument('--output', help="Output path, '-' for standard output")
    p.add_argument('--format', choices=['csv', 'json'])
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('drift', parents=[common], help='Check the potential drift inequalities')
    p.add_argument('--n', type=int, default=64)
    p.add_argument('--d', type=float, default=2.0)
    p.add_argument('--rule', choices=['greedy', 'one_choice'], default='greedy')
    p.add_argument('--weights', default='constant')
    p.add_argument('--alpha', default='auto', help="'auto' or a positive value")
    p.add_argument('--states', default='random:1000', help='random:N or file:PATH')
    p.set_defaults(func=cmd_drift)

    p = sub.add_parser('dominance', parents=[common], help='Compare gap distributions at two times')
    p.add_argument('--n', type=int, default=256)
    p.add_argument('--d', type=float, default=2.0)
    p.add_argument('--rule', choices=['greedy', 'one_choice', 'left'], default='greedy')
    p.add_argument('--weights', default='constant')
    p.add_argument('--t-early', type=int, required=True, help='Earlier time, in chain steps')
    p.add_argument('--t-late', type=int, required=True, help='Later time, in chain steps')
    p.add_argument('--trials', type=int, default=2000)
    p.add_argument('--delta', type=float, default=0.01, help='DKW failure probability')
    p.add_argument('--workers', type=int, default=None)
    p.set_defaults(func=cmd_dominance)

    p = sub.add_parser('induction', parents=[common], help='Beta schedule and the two-phase counting check')
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--d', type=float, default=2.0)
    p.add_argument('--rule', choices=['greedy', 'left'], default='greedy')
    p.add_argument('--t', type=int, default=16, help='Black phase, in chain steps')
    p.add_argument('--L', type=int, required=True, help='Red phase, in chain steps')
    p.add_argument('--ell', type=int, default=1)
    p.add_argument('--c-prime', type=float, default=None)
    p.add_argument('--trials', type=int, default=100)
    p.add_argument('--allow-large-L', action='store_true', help='Run the counting check even when L > n^(1/4)')
    p.set_defaults(func=cmd_induction)

    p = sub.add_parser('fib-base', parents=[common], help='Growth rate of the order-d Fibonacci sequence')
    p.add_argument('--d', type=int, required=True)
    p.set_defaults(func=cmd_fib_base)

    p = sub.add_parser('quantile', parents=[common], help='Weight tail threshold M_s')
    p.add_argument('--dist', required=True)
    p.add_argument('--params', help='Distribution parameters as JSON')
    p.add_argument('--s', type=float, required=True)
    p.add_argument('--n', type=int, required=True)
    p.set_defaults(func=cmd_quantile)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, dispatch, and map errors to exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK

    level = getattr(logging, str(args.log_level).upper(), None)
    if not isinstance(level, int):
        logger.error(f"Unknown log level '{args.log_level}'")
        return EXIT_USAGE
    logging.getLogger().setLevel(level)

    try:
        return args.func(args)
    except ConfigError as e:
        for message in e.errors:
            logger.error(f"config: {message}")
        return EXIT_USAGE
    except json.JSONDecodeError as e:
        logger.error(f"invalid JSON argument: {e}")
        return EXIT_USAGE
    except USAGE_ERRORS as e:
        logger.error(str(e))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
