"""
BinSense - Error Types
----------------------
Exceptions raised by the simulator, the potential calculations and the
experiment layer. Library code raises these; only the command-line
front end turns them into exit codes.
"""

from typing import List, Optional


class InvalidParameterError(ValueError):
    """A process, distribution or analysis parameter is out of range."""


class LoadOverflowError(OverflowError):
    """A run would push bin loads past the representable range."""


class MgfDomainError(ValueError):
    """The moment generating function is undefined at the requested point."""


class PotentialOverflowError(OverflowError):
    """An exponential potential term would overflow a double."""

    def __init__(self, bin_rank: int, exponent: float):
        self.bin_rank = bin_rank
        self.exponent = exponent
        super().__init__(
            f"Potential term at rank {bin_rank} has exponent {exponent:.3f} > 700; "
            f"lower alpha or rebalance the state"
        )


class ConfigError(ValueError):
    """An experiment configuration failed validation."""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class TrialError(RuntimeError):
    """A single trial failed; keeps the trial index for reporting."""

    def __init__(self, trial: int, cause: Optional[BaseException] = None):
        self.trial = trial
        self.cause = cause
        super().__init__(f"Trial {trial} failed: {cause}")
