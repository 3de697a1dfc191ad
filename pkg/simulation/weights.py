"""
BinSense - Weight Distributions
-------------------------------
Ball weight distributions, all normalized to mean 1.

Each distribution exposes what the potential analysis needs: a radius
lambda with finite E[exp(lambda W)], the constant S >= 1 bounding M''(z)/2
on |z| <= lambda/2, and its moment generating function M(z) = E[exp(zW)].
Weights are drawn by inverse transform from a single uniform.
"""

import math
import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from simulation.errors import InvalidParameterError, MgfDomainError

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

# Largest double below 1 drawn by Generator.random is 1 - 2**-53.
LARGEST_UNIFORM = 1.0 - 2.0 ** -53


class WeightDistribution:
    """Base class for mean-one ball weight distributions."""

    kind = "abstract"
    #: True when every draw is an integer, so loads stay exact.
    integral = False

    def __init__(self, lam: float = 1.0):
        if lam <= 0:
            raise InvalidParameterError(f"lambda must be positive, got {lam}")
        self.lam = lam

    # -- moment generating function --------------------------------------
    def radius(self) -> float:
        """Supremum of z where M(z) is finite."""
        return math.inf

    def _check_domain(self, z: float) -> None:
        if z >= self.radius():
            raise MgfDomainError(
                f"{self.kind} mgf undefined at z={z:.6g} (radius {self.radius():.6g})"
            )

    def mgf(self, z: float) -> float:
        """M(z) = E[exp(zW)]."""
        return 1.0 + self.mgf_minus_one(z)

    def mgf_minus_one(self, z: float) -> float:
        """M(z) - 1, accurate near z = 0."""
        raise NotImplementedError

    def mgf_second_derivative(self, z: float) -> float:
        """M''(z) = E[W^2 exp(zW)]."""
        raise NotImplementedError

    @property
    def S(self) -> float:
        """Smallest S >= 1 with M''(z) <= 2S for |z| <= lambda/2."""
        # W > 0, so M'' is increasing and peaks at the right end.
        return max(1.0, self.mgf_second_derivative(self.lam / 2) / 2)

    # -- sampling ----------------------------------------------------------
    def quantile(self, u: float) -> float:
        """Inverse CDF at u in [0, 1)."""
        raise NotImplementedError

    def quantile_array(self, u: np.ndarray) -> np.ndarray:
        return np.array([self.quantile(float(v)) for v in np.asarray(u)], dtype=np.float64)

    def draw(self, u: float) -> float:
        return self.quantile(u)

    @property
    def mean(self) -> float:
        return 1.0

    @property
    def raw_scale(self) -> float:
        """Factor taking mean-one weights back to the units they were given in."""
        return 1.0

    @property
    def variance(self) -> float:
        raise NotImplementedError

    @property
    def max_weight(self) -> float:
        """Largest weight a single uniform draw can produce."""
        return self.quantile(LARGEST_UNIFORM)

    @property
    def min_weight(self) -> float:
        return self.quantile(0.0)

    def tail_quantile(self, target: float) -> float:
        """
        Smallest M with Pr[W > M] <= target.

        For discrete distributions this is the smallest support point whose
        strict upper tail meets the target. Targets >= 1 return the minimum.
        """
        raise NotImplementedError

    def support(self) -> List[Tuple[float, float]]:
        """(value, probability) pairs of a discrete distribution."""
        raise InvalidParameterError(f"{self.kind} weights have no finite support")

    def params(self) -> Dict[str, Any]:
        return {}

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "params": self.params(), "lambda": self.lam, "S": self.S}

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.params()})"

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self.params() == other.params() and self.lam == other.lam

    def __hash__(self) -> int:
        return hash((self.kind, repr(self.params()), self.lam))


class Constant(WeightDistribution):
    """Unit weights: every ball weighs exactly 1."""

    kind = "constant"
    integral = True

    def __init__(self, lam: float = 1.0):
        super().__init__(lam)

    def mgf(self, z: float) -> float:
        return math.exp(z)

    def mgf_minus_one(self, z: float) -> float:
        return math.expm1(z)

    def mgf_second_derivative(self, z: float) -> float:
        return math.exp(z)

    def quantile(self, u: float) -> int:
        return 1

    def quantile_array(self, u: np.ndarray) -> np.ndarray:
        return np.ones(np.shape(u), dtype=np.float64)

    @property
    def variance(self) -> float:
        return 0.0

    def tail_quantile(self, target: float) -> float:
        return 1.0

    def support(self) -> List[Tuple[float, float]]:
        return [(1, 1.0)]


class UniformTwoValues(WeightDistribution):
    """
    Weight drawn uniformly from {low, high}, rescaled to mean 1.

    UniformTwoValues(1, 2) draws 2/3 or 4/3 with probability 1/2 each.
    """

    kind = "uniform_two"

    def __init__(self, low: float = 1.0, high: float = 2.0, lam: float = 1.0):
        if not 0 < low < high:
            raise InvalidParameterError(f"need 0 < low < high, got low={low}, high={high}")
        super().__init__(lam)
        self.low = low
        self.high = high
        scale = (low + high) / 2
        self.a = low / scale
        self.b = high / scale
        self._scale = scale

    def mgf(self, z: float) -> float:
        return (math.exp(z * self.a) + math.exp(z * self.b)) / 2

    def mgf_minus_one(self, z: float) -> float:
        return (math.expm1(z * self.a) + math.expm1(z * self.b)) / 2

    def mgf_second_derivative(self, z: float) -> float:
        return (self.a ** 2 * math.exp(z * self.a) + self.b ** 2 * math.exp(z * self.b)) / 2

    def quantile(self, u: float) -> float:
        return self.a if u < 0.5 else self.b

    def quantile_array(self, u: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(u) < 0.5, self.a, self.b)

    @property
    def variance(self) -> float:
        return ((self.b - self.a) / 2) ** 2

    def tail_quantile(self, target: float) -> float:
        # Pr[W > a] = 1/2, Pr[W > b] = 0
        return self.a if target >= 0.5 else self.b

    def support(self) -> List[Tuple[float, float]]:
        return [(self.a, 0.5), (self.b, 0.5)]

    @property
    def raw_scale(self) -> float:
        return self._scale

    def params(self) -> Dict[str, Any]:
        return {"low": self.low, "high": self.high}


class Exponential(WeightDistribution):
    """Exponential weights with mean 1; M(z) = 1/(1 - z) for z < 1."""

    kind = "exponential"

    def __init__(self, lam: float = 0.5):
        if lam >= 1:
            raise InvalidParameterError(f"exponential mgf is infinite at lambda={lam}; need lambda < 1")
        super().__init__(lam)

    def radius(self) -> float:
        return 1.0

    def mgf(self, z: float) -> float:
        self._check_domain(z)
        return 1.0 / (1.0 - z)

    def mgf_minus_one(self, z: float) -> float:
        self._check_domain(z)
        return z / (1.0 - z)

    def mgf_second_derivative(self, z: float) -> float:
        self._check_domain(z)
        return 2.0 / (1.0 - z) ** 3

    def quantile(self, u: float) -> float:
        return -math.log1p(-u)

    def quantile_array(self, u: np.ndarray) -> np.ndarray:
        return -np.log1p(-np.asarray(u, dtype=np.float64))

    @property
    def variance(self) -> float:
        return 1.0

    def tail_quantile(self, target: float) -> float:
        if target >= 1:
            return 0.0
        return -math.log(target)


class BoundedEmpirical(WeightDistribution):
    """
    Finite-support weights given as values and probabilities.

    Values are rescaled so the mean is 1; probabilities default to uniform.
    """

    kind = "empirical"

    def __init__(self, values: Sequence[float], probs: Optional[Sequence[float]] = None, lam: float = 1.0):
        super().__init__(lam)
        raw = np.asarray(values, dtype=np.float64)
        if raw.ndim != 1 or raw.size == 0:
            raise InvalidParameterError("empirical weights need a non-empty list of values")
        if np.any(raw <= 0):
            raise InvalidParameterError("empirical weight values must be positive")
        p = np.full(raw.size, 1.0 / raw.size) if probs is None else np.asarray(probs, dtype=np.float64)
        if p.shape != raw.shape or np.any(p < 0) or not math.isclose(p.sum(), 1.0, rel_tol=1e-9):
            raise InvalidParameterError("empirical probabilities must be nonnegative, match values and sum to 1")
        order = np.argsort(raw, kind="stable")
        self.raw_values = raw.tolist()
        self.raw_probs = p.tolist()
        raw_sorted = raw[order]
        self.probs = p[order] / p.sum()
        self._scale = float(np.dot(raw_sorted, self.probs))
        self.values = raw_sorted / self._scale
        self.cdf = np.cumsum(self.probs)
        self.cdf[-1] = 1.0

    def mgf_minus_one(self, z: float) -> float:
        return math.fsum(self.probs * np.expm1(z * self.values))

    def mgf_second_derivative(self, z: float) -> float:
        return math.fsum(self.probs * self.values ** 2 * np.exp(z * self.values))

    def quantile(self, u: float) -> float:
        idx = int(np.searchsorted(self.cdf, u, side="right"))
        return float(self.values[min(idx, self.values.size - 1)])

    def quantile_array(self, u: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.cdf, np.asarray(u), side="right")
        return self.values[np.minimum(idx, self.values.size - 1)]

    @property
    def variance(self) -> float:
        return float(np.dot(self.probs, (self.values - 1.0) ** 2))

    def tail_quantile(self, target: float) -> float:
        upper_tail = 1.0 - self.cdf
        for value, tail in zip(self.values, upper_tail):
            if tail <= target + 1e-15:
                return float(value)
        return float(self.values[-1])

    def support(self) -> List[Tuple[float, float]]:
        return [(float(v), float(p)) for v, p in zip(self.values, self.probs)]

    @property
    def raw_scale(self) -> float:
        return self._scale

    def params(self) -> Dict[str, Any]:
        return {"values": self.raw_values, "probs": self.raw_probs}


DISTRIBUTIONS = {
    "constant": Constant,
    "uniform_two": UniformTwoValues,
    "exponential": Exponential,
    "empirical": BoundedEmpirical,
}

# Short names accepted on the command line.
ALIASES = {
    "const1": "constant",
    "unit": "constant",
    "uniform12": "uniform_two",
    "exp": "exponential",
}


def make_distribution(kind: str, params: Optional[Dict[str, Any]] = None) -> WeightDistribution:
    """
    Build a weight distribution from its kind name and parameters.

    Args:
        kind: One of constant, uniform_two, exponential, empirical (or an alias)
        params: Keyword arguments for the distribution

    Returns:
        The distribution instance
    """
    name = ALIASES.get(kind, kind)
    if name not in DISTRIBUTIONS:
        raise InvalidParameterError(
            f"unknown weight distribution '{kind}'; expected one of {sorted(DISTRIBUTIONS) + sorted(ALIASES)}"
        )
    try:
        return DISTRIBUTIONS[name](**(params or {}))
    except TypeError as e:
        raise InvalidParameterError(f"bad parameters for {name} weights: {e}") from e
