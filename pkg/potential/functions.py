"""
BinSense - Exponential Potentials
---------------------------------
Parameters and evaluation of the potentials

    Phi(x)   = sum_i exp(alpha x_i)
    Psi(x)   = sum_i exp(-alpha x_i)
    Gamma(x) = Phi(x) + Psi(x)

over a normalized gap vector x (nonincreasing, summing to zero).
"""

import math
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from simulation.errors import InvalidParameterError, PotentialOverflowError
from simulation.processes import ProcessSpec

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

EXPONENT_CAP = 700.0
ZERO_SUM_TOL = 1e-9


@dataclass(frozen=True)
class PotentialParams:
    """
    Constants of the potential analysis.

    Attributes:
        alpha: Exponent scale of the potentials
        epsilon: Margin of the rank distribution's tail conditions
        S: Bound on M''(z)/2 near zero for the weight distribution
        lam: Radius where the weight mgf is known finite
        manual: True when alpha was given rather than derived
    """

    alpha: float
    epsilon: float
    S: float
    lam: float
    manual: bool = False

    @classmethod
    def derive(cls, spec: ProcessSpec, alpha_override: Optional[float] = None) -> "PotentialParams":
        """
        Derive alpha = min(epsilon/(6S), lambda/2) from a process, or take an override.

        Args:
            spec: Process whose epsilon and weight constants are used
            alpha_override: Manual alpha; flags the params as manual

        Returns:
            PotentialParams
        """
        eps = spec.epsilon
        S = spec.weights.S
        lam = spec.weights.lam
        if alpha_override is not None:
            if alpha_override <= 0:
                raise InvalidParameterError(f"alpha must be positive, got {alpha_override}")
            logger.warning(f"Manual alpha={alpha_override}: lemma preconditions not guaranteed")
            return cls(alpha=alpha_override, epsilon=eps, S=S, lam=lam, manual=True)
        if eps <= 0:
            raise InvalidParameterError(
                f"{spec.rule.name} with d={spec.d} has no tail margin (epsilon={eps}); pass alpha explicitly"
            )
        return cls(alpha=min(eps / (6 * S), lam / 2), epsilon=eps, S=S, lam=lam)


@dataclass
class PotentialReport:
    """
    Potential values of one gap vector.

    Attributes:
        phi, psi, gamma: Potential values, gamma = phi + psi
        gap: Largest entry of x
        half_l1: B = sum of positive entries = half the L1 norm
        phi_upper_third: Part of phi from ranks beyond n/3
        phi_terms, psi_terms: Per-bin terms when requested
    """

    phi: float
    psi: float
    gamma: float
    gap: float
    half_l1: float
    n: int
    phi_upper_third: float
    phi_terms: Optional[np.ndarray] = None
    psi_terms: Optional[np.ndarray] = None

    @property
    def gamma_over_n(self) -> float:
        return self.gamma / self.n


def as_gap_vector(x) -> np.ndarray:
    """
    Validate a gap vector and return it sorted nonincreasing.

    Raises:
        InvalidParameterError: empty, non-finite, or not summing to zero
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidParameterError("gap vector must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError("gap vector has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(arr))))
    total = math.fsum(arr)
    if abs(total) > ZERO_SUM_TOL * arr.size * scale:
        raise InvalidParameterError(f"gap vector must sum to zero, sums to {total:.3g}")
    return np.sort(arr)[::-1]


def check_exponents(x: np.ndarray, alpha: float) -> None:
    """Raise if any alpha*|x_i| exceeds the exponent cap."""
    exponents = alpha * np.abs(x)
    worst = int(np.argmax(exponents))
    if exponents[worst] > EXPONENT_CAP:
        raise PotentialOverflowError(bin_rank=worst + 1, exponent=float(exponents[worst]))


def potentials(x, params: PotentialParams, per_bin: bool = False) -> PotentialReport:
    """
    Evaluate Phi, Psi and Gamma with compensated summation.

    Args:
        x: Normalized gap vector (any order; it is sorted here)
        params: Potential parameters
        per_bin: Keep the per-bin terms in the report

    Returns:
        PotentialReport
    """
    x = as_gap_vector(x)
    alpha = params.alpha
    check_exponents(x, alpha)
    phi_terms = np.exp(alpha * x)
    psi_terms = np.exp(-alpha * x)
    n = x.size
    phi = math.fsum(phi_terms)
    psi = math.fsum(psi_terms)
    third = n // 3
    return PotentialReport(
        phi=phi,
        psi=psi,
        gamma=phi + psi,
        gap=float(x[0]),
        half_l1=math.fsum(np.abs(x)) / 2,
        n=n,
        phi_upper_third=math.fsum(phi_terms[third:]),
        phi_terms=phi_terms if per_bin else None,
        psi_terms=psi_terms if per_bin else None,
    )
