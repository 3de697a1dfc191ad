"""
BinSense - Layered Induction
----------------------------
The beta schedule bounding the fraction of bins at each height, and the
two-phase (black/red) experiment that exercises the counting step behind it.

Two-phase experiment: run the chain for t steps, colour every existing
ball black, then throw nL red balls. A ball's height is the load of its bin
right after it was placed, minus the final average. If the gap at time t
is below L every black ball sits below the final average, so every bin at
normalized height >= i (i >= 0) has a red ball at height >= i on top and

    nu_i * n <= mu_i

holds deterministically, where mu_i counts red balls at height >= i.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from analysis.gap_stats import gap, nu_fractions
from simulation.errors import InvalidParameterError
from simulation.processes import ProcessSpec, advance, bin_chooser, empty_state
from simulation.rng import RngContract, UniformStream

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

DEFAULT_C = 1.0
CLOSED_FORM_TOL = 1e-9


def default_c_prime(c: float = DEFAULT_C) -> float:
    """c' = 3(c + 1)."""
    return 3 * (c + 1)


@dataclass
class BetaSchedule:
    """
    Doubly-exponentially decaying bounds beta_{i_L} .. beta_{i_H}.

    Attributes:
        L, ell, c_prime, n, d: Inputs
        i_L, i_H: First and last index (i_L = ell, i_H = i_L + ceil(log_d ln n))
        beta: beta_{i_L}, ..., beta_{i_H}
        floor: 2 c' ln n / n
        snapped: True when beta_{i_H} had to be forced down to the floor
    """

    L: float
    ell: int
    c_prime: float
    n: int
    d: float
    i_L: int
    i_H: int
    beta: List[float]
    floor: float
    snapped: bool = False

    def __getitem__(self, i: int) -> float:
        """beta_i for i in [i_L, i_H]."""
        if not self.i_L <= i <= self.i_H:
            raise IndexError(f"beta index {i} outside [{self.i_L}, {self.i_H}]")
        return self.beta[i - self.i_L]

    def closed_form_log_beta(self, k: int) -> float:
        """log beta_{i_L + k} = d^k log beta_{i_L} + log(2L) (d^k - 1)/(d - 1), before the floor."""
        dk = self.d ** k
        return dk * math.log(self.beta[0]) + math.log(2 * self.L) * (dk - 1) / (self.d - 1)

    def above_floor(self) -> List[int]:
        """Offsets k whose beta was produced by the recurrence alone."""
        ks = []
        for k, b in enumerate(self.beta):
            if b <= self.floor:
                break
            ks.append(k)
        return ks

    def closed_form_holds(self, tol: float = CLOSED_FORM_TOL) -> bool:
        """True when every pre-floor term matches the closed form to relative tol."""
        for k in self.above_floor():
            exact = self.closed_form_log_beta(k)
            if not math.isclose(math.log(self.beta[k]), exact, rel_tol=tol):
                return False
        return True

    def rows(self) -> List[Dict[str, float]]:
        return [{"i": self.i_L + k, "beta": b, "beta_n": b * self.n} for k, b in enumerate(self.beta)]


def beta_schedule(L: float, ell: int, c_prime: float, n: int, d: float) -> BetaSchedule:
    """
    Build the beta schedule.

    beta_{i_L} = 1/(8 L^{3/(d-1)}), beta_{i+1} = max(2 L beta_i^d, 2 c' ln n / n),
    and beta_{i_H} is the floor.

    Args:
        L: Phase length in chain steps, ell <= L <= n^{1/4}
        ell: Base level i_L
        c_prime: Concentration constant c'
        n: Number of bins
        d: Choices per ball, d > 1

    Returns:
        BetaSchedule
    """
    if not d > 1:
        raise InvalidParameterError(f"the schedule needs d > 1, got {d}")
    if n < 3:
        raise InvalidParameterError(f"the schedule needs n >= 3, got {n}")
    if ell < 1 or int(ell) != ell:
        raise InvalidParameterError(f"ell must be a positive integer, got {ell}")
    if not ell <= L <= n ** 0.25 + 1e-12:
        raise InvalidParameterError(f"need ell <= L <= n^(1/4) = {n ** 0.25:.4g}, got ell={ell}, L={L}")
    if c_prime <= 0:
        raise InvalidParameterError(f"c_prime must be positive, got {c_prime}")

    floor = 2 * c_prime * math.log(n) / n
    steps = max(1, math.ceil(math.log(math.log(n)) / math.log(d)))
    beta = [1.0 / (8 * L ** (3.0 / (d - 1)))]
    for _ in range(steps):
        beta.append(max(2 * L * beta[-1] ** d, floor))
    snapped = beta[-1] > floor
    if snapped:
        logger.warning(f"beta schedule did not reach the floor in {steps} steps; snapping beta_i_H")
        beta[-1] = floor
    return BetaSchedule(L=L, ell=int(ell), c_prime=c_prime, n=n, d=d, i_L=int(ell),
                        i_H=int(ell) + steps, beta=beta, floor=floor, snapped=snapped)


@dataclass
class TwoPhaseRecord:
    """
    One black/red trial.

    Attributes:
        gap_at_t: Gap G after the black phase
        gap_after: Gap after the red phase
        applicable: G < L
        nu: Level -> fraction of bins at normalized height >= level after the red phase
        mu: Level -> red balls at height >= level
        violations: Levels with nu_i * n > mu_i (only when applicable)
        black_max_height: Highest black ball relative to the final average
    """

    gap_at_t: float
    gap_after: float
    L: int
    applicable: bool
    nu: Dict[int, float]
    mu: Dict[int, int]
    violations: List[int] = field(default_factory=list)
    black_max_height: float = 0.0

    @property
    def holds(self) -> Optional[bool]:
        """None when the comparison does not apply."""
        return not self.violations if self.applicable else None


def two_phase_experiment(spec: ProcessSpec, n: int, t: int, L: int, rng: UniformStream) -> TwoPhaseRecord:
    """
    Run t black steps, then L red steps, and compare nu_i * n with mu_i.

    Args:
        spec: Unit-weight process
        n: Number of bins
        t: Black phase length in chain steps
        L: Red phase length in chain steps
        rng: Uniform stream

    Returns:
        TwoPhaseRecord
    """
    if not spec.weights.integral:
        raise InvalidParameterError("the two-phase experiment needs unit weights")
    if t < 0 or L < 1:
        raise InvalidParameterError(f"need t >= 0 and L >= 1, got t={t}, L={L}")
    state = empty_state(spec, n)
    advance(state, spec, t * n, rng)
    g = gap(state)
    black_top = max(state.loads)

    k, choose = bin_chooser(spec)
    draw = spec.weights.draw
    placed_at = []
    for _ in range(n * L):
        b = choose(state, rng.take(k))
        state.add_ball(b, draw(rng.next()))
        placed_at.append(state.loads[b])

    avg = state.average
    heights = np.asarray(placed_at, dtype=np.float64) - avg
    nu = nu_fractions(state)
    mu = {i: int(np.count_nonzero(heights >= i)) for i in nu}
    applicable = g < L
    violations = []
    if applicable:
        violations = [i for i, frac in nu.items() if round(frac * n) > mu[i]]
        if violations:
            logger.error(f"nu/mu counting violated at levels {violations} with G={g} < L={L}")
    return TwoPhaseRecord(
        gap_at_t=g,
        gap_after=gap(state),
        L=L,
        applicable=applicable,
        nu=nu,
        mu=mu,
        violations=violations,
        black_max_height=black_top - avg,
    )


@dataclass
class TwoPhaseSummary:
    """Aggregate of many two-phase trials."""

    trials: int
    applicable: int
    violating_trials: int
    records: List[TwoPhaseRecord]


def run_two_phase_trials(spec: ProcessSpec, n: int, t: int, L: int, trials: int, base_seed: int) -> TwoPhaseSummary:
    """Run independent two-phase trials, trial k on stream (base_seed, k)."""
    logger.info(f"Two-phase experiment: n={n}, t={t}, L={L}, trials={trials}")
    records = [two_phase_experiment(spec, n, t, L, RngContract(base_seed, k).stream()) for k in range(trials)]
    return TwoPhaseSummary(
        trials=trials,
        applicable=sum(r.applicable for r in records),
        violating_trials=sum(bool(r.violations) for r in records),
        records=records,
    )
