"""
BinSense - Gamma Boundedness Probe
----------------------------------
Runs the chain and tracks Gamma/n at geometric checkpoints. A flat
Gamma/n trend against log t is the observable form of the linear-in-n
bound on E[Gamma]; one-choice serves as the negative control.
"""

import math
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import stats

from potential.functions import PotentialParams, potentials
from simulation.errors import InvalidParameterError
from simulation.processes import ProcessSpec, advance, empty_state
from simulation.rng import UniformStream

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


@dataclass
class GammaProbe:
    """
    Gamma/n time series and its trend.

    Attributes:
        checkpoints: Ball counts, starting at 0, with burn_in included
        gamma_over_n: Mean Gamma/n over trials at each checkpoint
        per_trial: Trials x checkpoints matrix of Gamma/n
        max_gamma_over_n: Largest mean value over checkpoints
        baseline: Mean Gamma/n at burn_in (at t_max when burn_in is later)
        slope, slope_stderr: Least-squares slope of mean Gamma/n vs log t past burn_in
        slope_pvalue: One-sided p-value for a positive slope
        increasing: Slope significantly positive at the 5% level
    """

    checkpoints: List[int]
    gamma_over_n: List[float]
    per_trial: np.ndarray
    max_gamma_over_n: float
    baseline: float
    slope: float
    slope_stderr: float
    slope_pvalue: float
    increasing: bool


def geometric_checkpoints(n: int, t_max: int, start: Optional[int] = None) -> List[int]:
    """0, start, 2*start, 4*start, ... up to and including t_max."""
    step = start or n
    points = [0]
    t = step
    while t < t_max:
        points.append(t)
        t *= 2
    if t_max > 0:
        points.append(t_max)
    return points


def gamma_supermartingale_probe(
    spec: ProcessSpec,
    params: PotentialParams,
    n: int,
    t_max: int,
    rng: UniformStream,
    trials: int = 1,
    burn_in: Optional[int] = None,
) -> GammaProbe:
    """
    Record Gamma/n along the chain at geometric checkpoints.

    Args:
        spec: Process to run
        params: Potential parameters
        n: Number of bins
        t_max: Horizon in balls
        rng: Uniform stream; trials consume it one after another
        trials: Number of independent runs averaged per checkpoint
        burn_in: First ball count used for the trend fit (default 10n)

    Returns:
        GammaProbe
    """
    if t_max < 0 or trials < 1:
        raise InvalidParameterError(f"need t_max >= 0 and trials >= 1, got {t_max}, {trials}")
    checkpoints = geometric_checkpoints(n, t_max)
    burn_in = 10 * n if burn_in is None else burn_in
    # the baseline is read at exactly burn_in
    if 0 < burn_in < t_max and burn_in not in checkpoints:
        checkpoints = sorted(checkpoints + [burn_in])
    logger.info(f"Gamma probe: n={n}, t_max={t_max}, trials={trials}, {len(checkpoints)} checkpoints")

    per_trial = np.empty((trials, len(checkpoints)), dtype=np.float64)
    for trial in range(trials):
        state = empty_state(spec, n)
        for c, t in enumerate(checkpoints):
            advance(state, spec, t - state.balls_thrown, rng)
            per_trial[trial, c] = potentials(state.normalized_sorted(), params).gamma_over_n
    mean = per_trial.mean(axis=0)

    fit_idx = [c for c, t in enumerate(checkpoints) if t >= max(burn_in, 1)]
    baseline = float(mean[fit_idx[0]]) if fit_idx else float(mean[-1])
    slope = stderr = math.nan
    pvalue = 1.0
    if len(fit_idx) >= 3:
        fit = stats.linregress(np.log([checkpoints[c] for c in fit_idx]), mean[fit_idx])
        slope, stderr = float(fit.slope), float(fit.stderr)
        two_sided = float(fit.pvalue)
        pvalue = two_sided / 2 if slope > 0 else 1 - two_sided / 2
    else:
        logger.warning("Fewer than three checkpoints past burn-in; trend not fitted")

    return GammaProbe(
        checkpoints=checkpoints,
        gamma_over_n=mean.tolist(),
        per_trial=per_trial,
        max_gamma_over_n=float(mean.max()),
        baseline=baseline,
        slope=slope,
        slope_stderr=stderr,
        slope_pvalue=pvalue,
        increasing=bool(pvalue < 0.05),
    )
