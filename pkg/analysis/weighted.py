"""
BinSense - Weighted Case
------------------------
Tail thresholds M_s of a weight distribution and the additive gap
allowance they contribute to the layered induction with weighted balls.
"""

import math
import logging

from analysis.layered_induction import BetaSchedule
from simulation.errors import InvalidParameterError
from simulation.weights import WeightDistribution

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def tail_target(s: float, n: int) -> float:
    """1 / (s (ln ln n)^5)."""
    return 1.0 / (s * math.log(math.log(n)) ** 5)


def weight_quantile_M(dist: WeightDistribution, s: float, n: int) -> float:
    """
    Smallest M_s with Pr[W > M_s] <= 1/(s (ln ln n)^5).

    Discrete laws return the smallest support point whose strict upper tail
    meets the target; targets >= 1 return the distribution minimum.

    Args:
        dist: Weight distribution (mean 1)
        s: Scale, s > 0
        n: Number of bins, n >= 16

    Returns:
        M_s in the distribution's (mean-one) units
    """
    if s <= 0:
        raise InvalidParameterError(f"s must be positive, got {s}")
    if n < 16:
        raise InvalidParameterError(f"n must be >= 16, got {n}")
    target = tail_target(s, n)
    if target >= 1:
        return dist.min_weight
    return dist.tail_quantile(target)


def weighted_gap_allowance(dist: WeightDistribution, schedule: BetaSchedule) -> float:
    """Sum of M_{beta_i n} over the schedule, the weighted induction's extra gap."""
    return math.fsum(weight_quantile_M(dist, beta * schedule.n, schedule.n) for beta in schedule.beta)
