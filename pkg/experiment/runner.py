"""
BinSense - Experiment Runner
----------------------------
Runs the trials of an experiment, in parallel when asked to, and gathers
one record per (trial, checkpoint). Trial k always draws from the stream
(base_seed, k), so results do not depend on the worker count or on the
order in which workers finish.
"""

import os
import logging
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Any, Dict, List, Optional, Union

from dotenv import load_dotenv

from analysis.gap_stats import GapSample, gap, nu_fractions
from analysis.left_scheme import left_layer_fractions
from experiment.config import ExperimentConfig
from potential.functions import PotentialParams, potentials
from simulation.errors import InvalidParameterError, TrialError
from simulation.processes import advance, empty_state
from simulation.rng import RngContract

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

# Load environment variables
load_dotenv()

WORKERS_ENV = "BINSENSE_WORKERS"
RECORD_FIELDS = ("trial", "balls", "gap", "phi", "psi", "gamma", "max_load")
LEVEL_FIELDS = ("nu", "left_layers")


@dataclass
class TrialResult:
    """
    Everything one trial recorded.

    Attributes:
        trial: Trial index
        samples: One GapSample per checkpoint
        potentials: Per checkpoint {'phi', 'psi', 'gamma'} or None
        max_loads: Max load per checkpoint
        nu: Per checkpoint level fractions, or None
        left_layers: Per checkpoint Left[d] layer fractions, or None
    """

    trial: int
    samples: List[GapSample]
    potentials: List[Optional[Dict[str, float]]] = field(default_factory=list)
    max_loads: List[Union[int, float]] = field(default_factory=list)
    nu: List[Optional[Dict[int, float]]] = field(default_factory=list)
    left_layers: List[Optional[Dict[int, float]]] = field(default_factory=list)

    def records(self) -> List[Dict[str, Any]]:
        """
        One row per checkpoint with the columns of RECORD_FIELDS; absent
        values are None. Rows of trials that measured nu or left_layers also
        carry those mappings, keyed by level as a string.
        """
        rows = []
        for i, sample in enumerate(self.samples):
            report = self.potentials[i] if i < len(self.potentials) else None
            row = {
                "trial": self.trial,
                "balls": sample.checkpoint,
                "gap": sample.gap,
                "phi": report["phi"] if report else None,
                "psi": report["psi"] if report else None,
                "gamma": report["gamma"] if report else None,
                "max_load": self.max_loads[i],
            }
            for key, per_checkpoint in zip(LEVEL_FIELDS, (self.nu, self.left_layers)):
                levels = per_checkpoint[i] if i < len(per_checkpoint) else None
                if levels is not None:
                    row[key] = {str(level): fraction for level, fraction in levels.items()}
            rows.append(row)
        return rows


@dataclass
class _TrialFailure:
    """Picklable stand-in for an exception raised inside a worker."""

    trial: int
    kind: str
    message: str


def default_workers() -> int:
    """Worker count from BINSENSE_WORKERS, or 1."""
    raw = os.getenv(WORKERS_ENV, "1")
    try:
        workers = int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {WORKERS_ENV}={raw!r}")
        return 1
    return max(1, workers)


def run_trial(config: ExperimentConfig, trial: int) -> TrialResult:
    """
    Run one trial, recording the configured measurements at every checkpoint.

    Args:
        config: Validated experiment configuration
        trial: Trial index; selects the stream (base_seed, trial)

    Returns:
        TrialResult
    """
    spec = config.process_spec()
    params = None
    if "potentials" in config.measurements:
        params = PotentialParams.derive(spec, config.alpha_override)
    rng = RngContract(config.base_seed, trial).stream()
    state = empty_state(spec, config.n)

    result = TrialResult(trial=trial, samples=[])
    for checkpoint in config.checkpoints:
        advance(state, spec, checkpoint - state.balls_thrown, rng)
        report = None
        if params is not None:
            pr = potentials(state.normalized_sorted(), params)
            report = {"phi": pr.phi, "psi": pr.psi, "gamma": pr.gamma}
        result.samples.append(GapSample(
            checkpoint=checkpoint,
            trial=trial,
            gap=gap(state),
            gamma_over_n=report["gamma"] / config.n if report else None,
        ))
        result.potentials.append(report)
        result.max_loads.append(state.max_load)
        result.nu.append(nu_fractions(state) if "nu" in config.measurements else None)
        result.left_layers.append(
            left_layer_fractions(state, int(config.d)) if "left_layers" in config.measurements else None
        )
    return result


def _run_trial_safe(task) -> Union[TrialResult, _TrialFailure]:
    config, trial = task
    try:
        return run_trial(config, trial)
    except Exception as e:
        return _TrialFailure(trial, type(e).__name__, str(e))


def run_experiment(config: ExperimentConfig, workers: Optional[int] = None) -> List[TrialResult]:
    """
    Run every trial of an experiment.

    Args:
        config: Validated experiment configuration
        workers: Worker processes (default BINSENSE_WORKERS, else 1)

    Returns:
        TrialResults ordered by trial index

    Raises:
        TrialError: for the lowest-indexed failing trial
    """
    workers = default_workers() if workers is None else workers
    if workers < 1:
        raise InvalidParameterError(f"workers must be >= 1, got {workers}")
    workers = min(workers, config.trials)
    logger.info(
        f"Running {config.trials} trials of {config.rule} d={config.d} n={config.n} "
        f"over {len(config.checkpoints)} checkpoints with {workers} worker(s)"
    )

    tasks = [(config, trial) for trial in range(config.trials)]
    if workers == 1:
        results = []
        for task in tasks:
            try:
                results.append(run_trial(*task))
            except Exception as e:
                logger.error(f"Trial {task[1]} failed: {e}")
                raise TrialError(task[1], e) from e
    else:
        with Pool(workers) as p:
            results = p.map(_run_trial_safe, tasks)
        for outcome in results:
            if isinstance(outcome, _TrialFailure):
                logger.error(f"Trial {outcome.trial} failed: {outcome.kind}: {outcome.message}")
                raise TrialError(outcome.trial, RuntimeError(f"{outcome.kind}: {outcome.message}"))

    logger.info(f"Finished {len(results)} trials")
    return results


def all_records(results: List[TrialResult]) -> List[Dict[str, Any]]:
    """Rows of every trial, ordered by (trial, balls)."""
    return [row for result in sorted(results, key=lambda r: r.trial) for row in result.records()]
