"""
BinSense - Rank Index
---------------------
Order-statistic index over bin loads.

Bins are kept in one ascending list of (load, bin) keys. Rank 1 is the most
loaded bin; among equal loads the higher bin index ranks heavier, so the
least loaded bin of any sample (ties to the lowest index) is always the one
with the largest rank. That is the fixed tie order shared by every sampler.
Selecting a rank is O(1); moving a bin is a bisect plus one list shift.
"""

from bisect import bisect_left, insort
from typing import List, Sequence, Tuple


class RankIndex:
    """Sorted (load, bin) keys supporting select-by-rank and point updates."""

    def __init__(self, loads: Sequence[float]):
        self.n = len(loads)
        self._keys: List[Tuple[float, int]] = sorted((load, b) for b, load in enumerate(loads))

    def bin_at_rank(self, rank: int) -> int:
        """Bin index of the rank-th most loaded bin (1-based)."""
        return self._keys[self.n - rank][1]

    def rank_of(self, bin_index: int, load: float) -> int:
        """Rank (1-based) of a bin currently holding the given load."""
        return self.n - bisect_left(self._keys, (load, bin_index))

    def move(self, bin_index: int, old_load: float, new_load: float) -> None:
        """Re-key a bin after its load changed."""
        pos = bisect_left(self._keys, (old_load, bin_index))
        del self._keys[pos]
        insort(self._keys, (new_load, bin_index))

    def bins_by_rank(self) -> List[int]:
        """All bins from rank 1 (heaviest) to rank n."""
        return [b for _, b in reversed(self._keys)]
