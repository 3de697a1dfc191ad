"""
BinSense - Allocation Processes
-------------------------------
Process definitions and single-ball placement for one-choice, Greedy[d]
and Left[d], plus the chain step (n balls) and the run driver.

Every ball reads a fixed number of uniforms from its trial's stream: one
rank uniform (rank sampler) or d bin uniforms (d-sample and Left[d]),
followed by one weight uniform. Ties between equally loaded bins always go
to the lowest bin index; for Left[d] that is the leftmost group.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, ClassVar, Dict, List, Sequence, Tuple, Union

import numpy as np

from simulation.errors import InvalidParameterError, LoadOverflowError
from simulation.load_state import LoadState
from simulation.rng import UniformStream
from simulation.weights import Constant, WeightDistribution

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

LOAD_LIMIT = 2 ** 62
SAMPLERS = ("auto", "rank", "dmin")


@dataclass(frozen=True)
class OneChoice:
    """Each ball goes to a uniformly random bin."""

    name: ClassVar[str] = "one_choice"

    @property
    def d(self) -> float:
        return 1.0


@dataclass(frozen=True)
class GreedyD:
    """
    Greedy[d]: the ball lands among the i heaviest bins with probability (i/n)^d.

    Attributes:
        d: Real d >= 1
        sampler: 'rank' (inverse-CDF over ranks), 'dmin' (least loaded of d
            uniform samples, integer d only) or 'auto' (dmin when d is integral)
    """

    d: float
    sampler: str = "auto"
    name: ClassVar[str] = "greedy"

    def __post_init__(self):
        if not self.d >= 1:
            raise InvalidParameterError(f"d must be >= 1, got {self.d}")
        if self.sampler not in SAMPLERS:
            raise InvalidParameterError(f"sampler must be one of {SAMPLERS}, got '{self.sampler}'")
        if self.sampler == "dmin" and not float(self.d).is_integer():
            raise InvalidParameterError(f"the d-sample realization needs integer d, got {self.d}")

    @property
    def uses_rank_sampler(self) -> bool:
        if self.sampler == "auto":
            return not float(self.d).is_integer()
        return self.sampler == "rank"


@dataclass(frozen=True)
class LeftD:
    """Left[d]: d groups of n/d bins, one uniform sample per group, ties to the left."""

    d: int
    name: ClassVar[str] = "left"

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise InvalidParameterError(f"Left[d] needs integer d >= 2, got {self.d}")


Rule = Union[OneChoice, GreedyD, LeftD]


@dataclass(frozen=True)
class ProcessSpec:
    """An allocation rule together with the ball weight distribution."""

    rule: Rule
    weights: WeightDistribution = field(default_factory=Constant)

    @classmethod
    def greedy(cls, d: float, weights: WeightDistribution = None, sampler: str = "auto") -> "ProcessSpec":
        return cls(GreedyD(d, sampler), weights or Constant())

    @classmethod
    def one_choice(cls, weights: WeightDistribution = None) -> "ProcessSpec":
        return cls(OneChoice(), weights or Constant())

    @classmethod
    def left(cls, d: int, weights: WeightDistribution = None) -> "ProcessSpec":
        return cls(LeftD(int(d)), weights or Constant())

    @property
    def d(self) -> float:
        return float(self.rule.d)

    def validate(self, n: int) -> None:
        """Check that the rule can run on n bins."""
        if n < 1:
            raise InvalidParameterError(f"n must be >= 1, got {n}")
        if isinstance(self.rule, LeftD) and n % self.rule.d != 0:
            raise InvalidParameterError(f"Left[{self.rule.d}] needs n divisible by d, got n={n}")

    def rank_probabilities(self, n: int) -> np.ndarray:
        """
        Probability p_i that the rank-i (i-th most loaded) bin receives the ball.

        Args:
            n: Number of bins

        Returns:
            Array of length n, p_i = (i/n)^d - ((i-1)/n)^d
        """
        if isinstance(self.rule, LeftD):
            raise InvalidParameterError("Left[d] has no closed-form rank distribution")
        return rank_probabilities(self.d, n)

    @property
    def epsilon(self) -> float:
        """
        Margin in both tail conditions on p, from the limiting rank CDF.

        min(1 - (3/4)^d - 1/4, 1/4 - (1/4)^d); zero for one-choice. Left[d]
        reports the Greedy[d] value it is majorized by.
        """
        d = self.d
        return min(1 - 0.75 ** d - 0.25, 0.25 - 0.25 ** d)

    def tail_margins(self, n: int) -> Tuple[float, float]:
        """
        Finite-n margins of the two tail conditions.

        Returns:
            (sum_{i >= 3n/4} p_i - 1/4, 1/4 - sum_{i <= n/4} p_i)
        """
        p = self.rank_probabilities(n)
        upper_start = math.ceil(3 * n / 4)
        lower_end = math.floor(n / 4)
        upper = math.fsum(p[upper_start - 1:]) - 0.25
        lower = 0.25 - math.fsum(p[:lower_end])
        return upper, lower

    def describe(self) -> Dict[str, Any]:
        info = {"rule": self.rule.name, "d": self.d, "weights": self.weights.describe()}
        if isinstance(self.rule, GreedyD):
            info["sampler"] = "rank" if self.rule.uses_rank_sampler else "dmin"
        return info


def rank_probabilities(d: float, n: int) -> np.ndarray:
    """p_i = (i/n)^d - ((i-1)/n)^d for i = 1..n."""
    if d < 1 or n < 1:
        raise InvalidParameterError(f"need d >= 1 and n >= 1, got d={d}, n={n}")
    i = np.arange(0, n + 1, dtype=np.float64)
    cdf = (i / n) ** d
    return np.diff(cdf)


def rank_sample(d: float, n: int, u: float) -> int:
    """
    Inverse-CDF rank sampler for Greedy[d].

    Args:
        d: Real d >= 1
        n: Number of bins
        u: Uniform draw in [0, 1)

    Returns:
        Rank i in [1, n] with ((i-1)/n)^d <= u < (i/n)^d
    """
    if not d >= 1 or n < 1:
        raise InvalidParameterError(f"need d >= 1 and n >= 1, got d={d}, n={n}")
    if not 0 <= u < 1:
        raise InvalidParameterError(f"u must be in [0, 1), got {u}")
    i = min(int(n * u ** (1.0 / d)) + 1, n)
    # float roots can land one step off the exact boundary
    while i > 1 and ((i - 1) / n) ** d > u:
        i -= 1
    while i < n and (i / n) ** d <= u:
        i += 1
    return i


def _uniform_bin(u: float, size: int) -> int:
    return min(int(u * size), size - 1)


def choose_bin_rank(state: LoadState, d: float, u: float) -> int:
    """Bin receiving a ball whose rank uniform is u."""
    return state.rank_index().bin_at_rank(rank_sample(d, state.n, u))


def choose_bin_dmin(loads: Sequence[float], d: int, us: Sequence[float]) -> int:
    """Least loaded of d uniformly sampled bins; ties go to the lowest index."""
    n = len(loads)
    best = _uniform_bin(us[0], n)
    best_load = loads[best]
    for u in us[1:d]:
        b = _uniform_bin(u, n)
        load = loads[b]
        if load < best_load or (load == best_load and b < best):
            best, best_load = b, load
    return best


def choose_bin_left(loads: Sequence[float], d: int, us: Sequence[float]) -> int:
    """One uniform bin per group; least loaded wins, ties to the leftmost group."""
    size = len(loads) // d
    best = _uniform_bin(us[0], size)
    best_load = loads[best]
    for k in range(1, d):
        b = k * size + _uniform_bin(us[k], size)
        load = loads[b]
        if load < best_load:
            best, best_load = b, load
    return best


def place_ball_rank(state: LoadState, spec: ProcessSpec, rng: UniformStream) -> LoadState:
    """
    Place one ball at a sampled rank (Greedy[d] or one-choice).

    The rank-i bin is the i-th most loaded under the fixed tie order.
    """
    if isinstance(spec.rule, LeftD):
        raise InvalidParameterError("rank placement needs Greedy[d] or one-choice")
    bin_index = choose_bin_rank(state, spec.d, rng.next())
    state.add_ball(bin_index, spec.weights.draw(rng.next()))
    return state


def place_ball_dmin(state: LoadState, d: int, weights: WeightDistribution, rng: UniformStream) -> LoadState:
    """Place one ball in the least loaded of d bins sampled with replacement."""
    if int(d) != d or d < 1:
        raise InvalidParameterError(f"d must be an integer >= 1, got {d}")
    d = int(d)
    bin_index = choose_bin_dmin(state.loads, d, rng.take(d))
    state.add_ball(bin_index, weights.draw(rng.next()))
    return state


def place_ball_left(state: LoadState, d: int, weights: WeightDistribution, rng: UniformStream) -> LoadState:
    """Place one ball by the Left[d] rule."""
    if int(d) != d or d < 2:
        raise InvalidParameterError(f"Left[d] needs integer d >= 2, got {d}")
    d = int(d)
    if state.n % d != 0:
        raise InvalidParameterError(f"Left[{d}] needs n divisible by d, got n={state.n}")
    bin_index = choose_bin_left(state.loads, d, rng.take(d))
    state.add_ball(bin_index, weights.draw(rng.next()))
    return state


def bin_chooser(spec: ProcessSpec) -> Tuple[int, Callable[[LoadState, List[float]], int]]:
    """
    Number of placement uniforms per ball and the function mapping them to a bin.

    The weight uniform that follows is not included.
    """
    rule = spec.rule
    if isinstance(rule, LeftD):
        d = rule.d
        return d, lambda state, us: choose_bin_left(state.loads, d, us)
    if isinstance(rule, GreedyD) and rule.uses_rank_sampler:
        d = rule.d
        return 1, lambda state, us: choose_bin_rank(state, d, us[0])
    d = 1 if isinstance(rule, OneChoice) else int(rule.d)
    return d, lambda state, us: choose_bin_dmin(state.loads, d, us)


def place_ball(state: LoadState, spec: ProcessSpec, rng: UniformStream) -> int:
    """
    Place one ball according to spec.

    Returns:
        Index of the receiving bin
    """
    k, choose = bin_chooser(spec)
    bin_index = choose(state, rng.take(k))
    state.add_ball(bin_index, spec.weights.draw(rng.next()))
    return bin_index


def _check_capacity(state: LoadState, spec: ProcessSpec, balls: int) -> None:
    if (state.balls_thrown + balls) * spec.weights.max_weight >= LOAD_LIMIT:
        raise LoadOverflowError(
            f"{state.balls_thrown + balls} balls of weight up to {spec.weights.max_weight:.3g} "
            f"may exceed the load limit 2^62"
        )


def advance(state: LoadState, spec: ProcessSpec, balls: int, rng: UniformStream) -> LoadState:
    """
    Throw more balls into an existing state.

    Args:
        state: State to extend (modified in place)
        spec: Process to follow
        balls: Number of additional balls
        rng: The trial's uniform stream

    Returns:
        The same state object
    """
    if balls < 0:
        raise InvalidParameterError(f"ball count must be >= 0, got {balls}")
    spec.validate(state.n)
    _check_capacity(state, spec, balls)
    k, choose = bin_chooser(spec)
    draw = spec.weights.draw
    take = rng.take
    nxt = rng.next
    add = state.add_ball
    for _ in range(balls):
        bin_index = choose(state, take(k))
        add(bin_index, draw(nxt()))
    return state


def chain_step(state: LoadState, spec: ProcessSpec, rng: UniformStream) -> LoadState:
    """One step of the chain: n successive placements."""
    return advance(state, spec, state.n, rng)


def empty_state(spec: ProcessSpec, n: int) -> LoadState:
    """Empty state tagged with the Left[d] group count when relevant."""
    spec.validate(n)
    groups = spec.rule.d if isinstance(spec.rule, LeftD) else None
    return LoadState.empty(n, left_groups=groups)


def run(spec: ProcessSpec, n: int, m_balls: int, rng: UniformStream) -> LoadState:
    """
    Throw m_balls balls into n empty bins.

    Args:
        spec: Process to follow
        n: Number of bins
        m_balls: Number of balls
        rng: The trial's uniform stream

    Returns:
        Final state
    """
    if m_balls < 0:
        raise InvalidParameterError(f"m_balls must be >= 0, got {m_balls}")
    state = empty_state(spec, n)
    return advance(state, spec, m_balls, rng)
