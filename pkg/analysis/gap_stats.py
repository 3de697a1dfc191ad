"""
BinSense - Gap Statistics
-------------------------
Gap samples, level fractions, empirical tail estimates and the
stochastic-dominance check between gap distributions at two times.
"""

import math
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Union

import numpy as np
from scipy import stats

from simulation.errors import InvalidParameterError
from simulation.load_state import LoadState

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

LEVEL_TOL = 1e-9
MIN_TAIL_SAMPLES = 100


@dataclass(frozen=True)
class GapSample:
    """Gap of one trial at one checkpoint (balls thrown)."""

    checkpoint: int
    trial: int
    gap: float
    gamma_over_n: Optional[float] = None

    def __post_init__(self):
        if self.gap < -LEVEL_TOL:
            raise InvalidParameterError(f"gap must be >= 0, got {self.gap}")


def gap(state: LoadState) -> float:
    """Max load minus average; 0 for an empty state."""
    if state.balls_thrown == 0 and state.total_weight == 0:
        return 0.0
    return float(state.gap)


def nu_fractions(state: LoadState) -> Dict[int, float]:
    """
    Fraction of bins at each integer normalized height.

    Args:
        state: Allocation state

    Returns:
        Mapping i -> nu_i = |{bins: load - average >= i}| / n for
        i = 0 .. floor(gap) + 1 (the last entry is always 0)
    """
    x = state.as_array() - state.average
    top = int(math.floor(max(float(x.max()), 0.0) + LEVEL_TOL)) + 1
    return {i: float(np.count_nonzero(x >= i - LEVEL_TOL)) / state.n for i in range(top + 1)}


def _values(samples: Iterable[Union[GapSample, float]]) -> np.ndarray:
    return np.asarray([s.gap if isinstance(s, GapSample) else float(s) for s in samples], dtype=np.float64)


@dataclass
class TailEstimate:
    """Point estimate of Pr[G >= k] with a Clopper-Pearson interval."""

    k: float
    hits: int
    samples: int
    estimate: float
    lower: float
    upper: float
    confidence: float


def clopper_pearson(hits: int, total: int, confidence: float = 0.95):
    """Exact binomial interval for hits successes in total trials."""
    alpha = 1 - confidence
    lower = 0.0 if hits == 0 else float(stats.beta.ppf(alpha / 2, hits, total - hits + 1))
    upper = 1.0 if hits == total else float(stats.beta.ppf(1 - alpha / 2, hits + 1, total - hits))
    return lower, upper


def empirical_tail(samples: Iterable[Union[GapSample, float]], k: float, confidence: float = 0.95) -> TailEstimate:
    """
    Estimate Pr[G >= k] from gap samples.

    Args:
        samples: GapSample records or plain gap values (at least 100)
        k: Threshold
        confidence: Interval confidence level

    Returns:
        TailEstimate
    """
    values = _values(samples)
    if values.size < MIN_TAIL_SAMPLES:
        raise InvalidParameterError(f"tail estimates need at least {MIN_TAIL_SAMPLES} samples, got {values.size}")
    hits = int(np.count_nonzero(values >= k - LEVEL_TOL))
    lower, upper = clopper_pearson(hits, values.size, confidence)
    return TailEstimate(k=k, hits=hits, samples=int(values.size), estimate=hits / values.size,
                        lower=lower, upper=upper, confidence=confidence)


def fit_tail_exponent(samples: Iterable[Union[GapSample, float]], thresholds: Optional[Sequence[float]] = None):
    """
    Fit Pr[G >= k] ~ b * exp(-a k) on the nonzero part of the empirical tail.

    Returns:
        (a, b), or (nan, nan) when fewer than two thresholds have hits
    """
    values = _values(samples)
    if thresholds is None:
        thresholds = np.arange(math.ceil(values.min()), math.floor(values.max()) + 1)
    ks, logs = [], []
    for k in thresholds:
        frac = np.count_nonzero(values >= k - LEVEL_TOL) / values.size
        if 0 < frac < 1:
            ks.append(k)
            logs.append(math.log(frac))
    if len(ks) < 2:
        return math.nan, math.nan
    fit = stats.linregress(ks, logs)
    return -float(fit.slope), math.exp(float(fit.intercept))


def dkw_band(samples: int, delta: float = 0.01) -> float:
    """Two-sided band 2*sqrt(ln(2/delta)/(2N)) for comparing two empirical CDFs."""
    return 2 * math.sqrt(math.log(2 / delta) / (2 * samples))


@dataclass
class DominanceVerdict:
    """
    Result of the one-sided CDF comparison.

    Attributes:
        passed: F_late(k) <= F_early(k) + band for every k
        worst_margin: min_k (F_early(k) + band - F_late(k))
        worst_k: Where the worst margin occurs
        band: DKW band used
        ks_pvalue: One-sided two-sample KS p-value for F_late > F_early (diagnostic)
    """

    passed: bool
    worst_margin: float
    worst_k: float
    band: float
    samples: int
    ks_pvalue: float


def empirical_cdf(values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Right-continuous empirical CDF of values evaluated at points."""
    ordered = np.sort(values)
    return np.searchsorted(ordered, points, side="right") / ordered.size


def dominance_test(samples_early, samples_late, tolerance: float = 0.01) -> DominanceVerdict:
    """
    Check that the late gap stochastically dominates the early gap.

    Args:
        samples_early: Gap samples at the earlier time t'
        samples_late: Gap samples at the later time t
        tolerance: DKW failure probability delta

    Returns:
        DominanceVerdict
    """
    early = _values(samples_early)
    late = _values(samples_late)
    if early.size != late.size or early.size == 0:
        raise InvalidParameterError(f"need equal, non-zero trial counts, got {early.size} and {late.size}")
    band = dkw_band(early.size, tolerance)
    points = np.union1d(early, late)
    margins = empirical_cdf(early, points) + band - empirical_cdf(late, points)
    worst = int(np.argmin(margins))
    ks = stats.ks_2samp(late, early, alternative="greater")
    verdict = DominanceVerdict(
        passed=bool(margins[worst] >= 0),
        worst_margin=float(margins[worst]),
        worst_k=float(points[worst]),
        band=band,
        samples=int(early.size),
        ks_pvalue=float(ks.pvalue),
    )
    logger.info(f"Dominance test over {early.size} pairs: passed={verdict.passed}, margin={verdict.worst_margin:.4f}")
    return verdict
