"""
BinSense - Random Streams
-------------------------
Deterministic, counter-based random streams for trials.

Trial k of an experiment with base seed s draws from
``Generator(Philox(SeedSequence([s, k])))``. The stream is a pure function
of (s, k): adding trials never perturbs the streams of existing ones, and
the draws are identical on every platform numpy supports.
"""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from simulation.errors import InvalidParameterError

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

SEED_MASK = (1 << 64) - 1
BLOCK_SIZE = 4096


@dataclass(frozen=True)
class RngContract:
    """Identifies one trial's stream: a 64-bit base seed and a trial index."""

    base_seed: int
    trial_index: int = 0

    def __post_init__(self):
        if not 0 <= self.base_seed <= SEED_MASK:
            raise InvalidParameterError(f"base_seed must be a 64-bit unsigned integer, got {self.base_seed}")
        if self.trial_index < 0:
            raise InvalidParameterError(f"trial_index must be >= 0, got {self.trial_index}")

    def seed_sequence(self) -> SeedSequence:
        """Mix (base_seed, trial_index) into a numpy seed sequence."""
        return SeedSequence(entropy=[self.base_seed, self.trial_index])

    def generator(self) -> Generator:
        """Fresh counter-based generator for this trial."""
        return Generator(Philox(self.seed_sequence()))

    def stream(self) -> "UniformStream":
        """Fresh uniform stream for this trial."""
        return UniformStream(self.generator())


class UniformStream:
    """
    Sequential source of uniform doubles in [0, 1).

    Draws are pulled from the generator in fixed-size blocks, so the
    sequence seen by callers depends only on the generator state and not
    on how many values each caller takes at a time.
    """

    def __init__(self, generator: Generator, block_size: int = BLOCK_SIZE):
        self.generator = generator
        self.block_size = block_size
        self._buffer: List[float] = []
        self._pos = 0
        self.consumed = 0

    @classmethod
    def from_seed(cls, base_seed: int, trial_index: int = 0) -> "UniformStream":
        return RngContract(base_seed, trial_index).stream()

    def _refill(self) -> None:
        self._buffer = self.generator.random(self.block_size).tolist()
        self._pos = 0

    def next(self) -> float:
        """Return the next uniform draw."""
        if self._pos >= len(self._buffer):
            self._refill()
        u = self._buffer[self._pos]
        self._pos += 1
        self.consumed += 1
        return u

    def take(self, k: int) -> List[float]:
        """Return the next k uniform draws, in order."""
        return [self.next() for _ in range(k)]

    def array(self, k: int) -> np.ndarray:
        """The next k draws as a float64 array."""
        return np.fromiter((self.next() for _ in range(k)), dtype=np.float64, count=k)
