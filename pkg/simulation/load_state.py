"""
BinSense - Load State
---------------------
Raw per-bin loads of an allocation plus the total thrown weight.

The normalized, sorted gap vector x (load minus average, nonincreasing) is
derived on demand and never stored.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from simulation.errors import InvalidParameterError
from simulation.rank_index import RankIndex

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


@dataclass
class LoadState:
    """
    Allocation of balls into n bins.

    Attributes:
        loads: Accumulated weight per bin (ints for unit weights)
        n: Number of bins
        total_weight: Sum of all placed weights
        balls_thrown: Number of placements so far
        left_groups: Number of Left[d] groups when produced by Left[d], else None
    """

    loads: List[float]
    n: int
    total_weight: float = 0
    balls_thrown: int = 0
    left_groups: Optional[int] = None
    _rank_index: Optional[RankIndex] = field(default=None, repr=False, compare=False)

    @classmethod
    def empty(cls, n: int, left_groups: Optional[int] = None) -> "LoadState":
        """All-zero state with n bins."""
        if n < 1:
            raise InvalidParameterError(f"n must be >= 1, got {n}")
        return cls(loads=[0] * n, n=n, left_groups=left_groups)

    @classmethod
    def from_loads(cls, loads, balls_thrown: Optional[int] = None) -> "LoadState":
        """State holding the given loads; balls_thrown defaults to the rounded total."""
        values = list(loads)
        if not values:
            raise InvalidParameterError("a state needs at least one bin")
        total = sum(values)
        thrown = int(round(total)) if balls_thrown is None else balls_thrown
        return cls(loads=values, n=len(values), total_weight=total, balls_thrown=thrown)

    def add_ball(self, bin_index: int, weight: float) -> None:
        """Place one ball of the given weight into bin_index."""
        old = self.loads[bin_index]
        new = old + weight
        self.loads[bin_index] = new
        self.total_weight += weight
        self.balls_thrown += 1
        if self._rank_index is not None:
            self._rank_index.move(bin_index, old, new)

    def rank_index(self) -> RankIndex:
        """Order-statistic index over loads, built on first use and kept in sync."""
        if self._rank_index is None:
            self._rank_index = RankIndex(self.loads)
        return self._rank_index

    @property
    def average(self) -> float:
        return self.total_weight / self.n

    @property
    def max_load(self) -> float:
        return max(self.loads)

    @property
    def gap(self) -> float:
        """Max load minus average load."""
        return self.max_load - self.average

    def as_array(self) -> np.ndarray:
        return np.asarray(self.loads, dtype=np.float64)

    def normalized_sorted(self) -> np.ndarray:
        """Gap vector x: loads minus average, sorted nonincreasing."""
        return normalized_sorted(self)

    def copy(self) -> "LoadState":
        return LoadState(
            loads=list(self.loads),
            n=self.n,
            total_weight=self.total_weight,
            balls_thrown=self.balls_thrown,
            left_groups=self.left_groups,
        )


def normalized_sorted(state: LoadState) -> np.ndarray:
    """
    Normalized gap vector of a state.

    Args:
        state: Allocation state

    Returns:
        Array x with x_i = load_(i) - total_weight/n, sorted nonincreasing
    """
    loads = state.as_array()
    x = np.sort(loads)[::-1] - state.total_weight / state.n
    return x
