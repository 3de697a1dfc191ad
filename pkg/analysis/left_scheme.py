"""
BinSense - Left[d] Constants and Layers
---------------------------------------
The order-d Fibonacci growth rate phi_d that sets the Left[d] gap scale,
and the per-group layer fractions x_{jd+k} of a Left[d] allocation.
"""

import math
import logging
from typing import Dict

import numpy as np

from simulation.errors import InvalidParameterError
from simulation.load_state import LoadState

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

RATIO_TOL = 1e-12
MAX_ITERATIONS = 100_000


def fibonacci_base(d: int) -> float:
    """
    Growth rate of F(k) = F(k-1) + ... + F(k-d).

    Iterates the ratio of consecutive terms until it changes by less than 1e-12.

    Args:
        d: Order, d >= 2

    Returns:
        phi_d, in [1.61, 2)
    """
    if int(d) != d or d < 2:
        raise InvalidParameterError(f"d must be an integer >= 2, got {d}")
    window = [0.0] * (int(d) - 1) + [1.0]
    ratio = 0.0
    for _ in range(MAX_ITERATIONS):
        nxt = math.fsum(window)
        new_ratio = nxt / window[-1]
        # renormalize so the terms never overflow
        window = [v / nxt for v in window[1:]] + [1.0]
        if abs(new_ratio - ratio) < RATIO_TOL:
            return new_ratio
        ratio = new_ratio
    logger.warning(f"Fibonacci ratio for d={d} did not settle in {MAX_ITERATIONS} iterations")
    return ratio


def greedy_gap_scale(n: int, d: float) -> float:
    """ln ln n / ln d, the leading Greedy[d] gap term."""
    return math.log(math.log(n)) / math.log(d)


def left_gap_scale(n: int, d: int) -> float:
    """ln ln n / (d ln phi_d), the leading Left[d] gap term."""
    return math.log(math.log(n)) / (d * math.log(fibonacci_base(d)))


def left_layer_fractions(state: LoadState, d: int) -> Dict[int, float]:
    """
    Layer fractions of a Left[d] state.

    x_{jd+k} is the number of bins in group k at normalized height >= j,
    divided by n, for j = 0 .. floor(gap) + 1 and k = 0 .. d-1.

    Args:
        state: State produced by Left[d]
        d: Number of groups

    Returns:
        Mapping jd + k -> x_{jd+k}
    """
    if state.left_groups is None or state.left_groups != d:
        raise InvalidParameterError(f"state was not produced by Left[{d}]")
    size = state.n // d
    x = (state.as_array() - state.average).reshape(d, size)
    top = int(math.floor(max(float(x.max()), 0.0) + 1e-9)) + 1
    fractions = {}
    for j in range(top + 1):
        counts = np.count_nonzero(x >= j - 1e-9, axis=1)
        for k in range(d):
            fractions[j * d + k] = float(counts[k]) / state.n
    return fractions
