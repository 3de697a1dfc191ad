"""
BinSense - Experiment Configuration
-----------------------------------
Declarative experiment configuration, read from a JSON document:

    {
      "process": {"rule": "greedy", "d": 2, "sampler": "auto",
                  "weights": {"kind": "constant", "params": {}}},
      "n": 1024,
      "checkpoints": [1024, 2048],
      "trials": 100,
      "seed": 0,
      "measurements": ["gap", "potentials"],
      "alpha": 0.03125,
      "output": {"format": "csv", "path": "results.csv"}
    }

Only process, n, checkpoints, trials and seed are required. Unknown keys
are rejected and every problem found is reported at once.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from simulation.errors import ConfigError, InvalidParameterError
from simulation.processes import GreedyD, LeftD, OneChoice, ProcessSpec, SAMPLERS
from simulation.rng import SEED_MASK
from simulation.weights import make_distribution

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

MEASUREMENTS = ("gap", "potentials", "nu", "left_layers")
FORMATS = ("csv", "json")
RULES = {
    "greedy": "greedy",
    "one_choice": "one_choice",
    "one-choice": "one_choice",
    "onechoice": "one_choice",
    "left": "left",
}
TOP_KEYS = {"process", "n", "checkpoints", "trials", "seed", "measurements", "alpha", "output"}
REQUIRED_KEYS = ("process", "n", "checkpoints", "trials", "seed")
PROCESS_KEYS = {"rule", "d", "sampler", "weights"}
WEIGHT_KEYS = {"kind", "params"}
OUTPUT_KEYS = {"format", "path"}


@dataclass(frozen=True)
class ExperimentConfig:
    """
    A validated experiment.

    Attributes:
        rule: 'greedy', 'one_choice' or 'left'
        d: Choices per ball (1 for one-choice)
        sampler: Greedy[d] realization ('auto', 'rank', 'dmin')
        weights_kind, weights_params: Weight distribution
        n: Number of bins
        checkpoints: Ball counts to record, strictly increasing
        trials: Number of independent trials
        base_seed: 64-bit base seed
        measurements: Recorded quantities
        alpha_override: Manual potential exponent, if any
        output_format, output_path: Where results go ('-' is standard output)
    """

    rule: str
    d: float
    n: int
    checkpoints: Tuple[int, ...]
    trials: int
    base_seed: int
    sampler: str = "auto"
    weights_kind: str = "constant"
    weights_params: Dict[str, Any] = field(default_factory=dict, compare=False, hash=False)
    measurements: Tuple[str, ...] = ("gap",)
    alpha_override: Optional[float] = None
    output_format: str = "csv"
    output_path: str = "-"

    def process_spec(self) -> ProcessSpec:
        """Build the process this configuration describes."""
        weights = make_distribution(self.weights_kind, self.weights_params)
        if self.rule == "one_choice":
            return ProcessSpec(OneChoice(), weights)
        if self.rule == "left":
            return ProcessSpec(LeftD(int(self.d)), weights)
        return ProcessSpec(GreedyD(self.d, self.sampler), weights)

    def as_dict(self) -> Dict[str, Any]:
        doc = {
            "process": {
                "rule": self.rule,
                "d": self.d,
                "sampler": self.sampler,
                "weights": {"kind": self.weights_kind, "params": dict(self.weights_params)},
            },
            "n": self.n,
            "checkpoints": list(self.checkpoints),
            "trials": self.trials,
            "seed": self.base_seed,
            "measurements": list(self.measurements),
            "output": {"format": self.output_format, "path": self.output_path},
        }
        if self.alpha_override is not None:
            doc["alpha"] = self.alpha_override
        return doc


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _unknown(section: str, given: Dict[str, Any], allowed: set) -> List[str]:
    return [f"unknown key '{section}{k}'" for k in sorted(set(given) - allowed)]


def parse_config(doc: Any) -> ExperimentConfig:
    """
    Validate a decoded configuration document.

    Args:
        doc: Decoded JSON object

    Returns:
        ExperimentConfig

    Raises:
        ConfigError: with every problem found
    """
    if not isinstance(doc, dict):
        raise ConfigError(["configuration must be a JSON object"])
    errors = _unknown("", doc, TOP_KEYS)
    errors += [f"missing required key '{k}'" for k in REQUIRED_KEYS if k not in doc]

    # process
    process = doc.get("process", {})
    rule, d, sampler = "greedy", 2.0, "auto"
    weights_kind, weights_params = "constant", {}
    if not isinstance(process, dict):
        errors.append("'process' must be an object")
        process = {}
    errors += _unknown("process.", process, PROCESS_KEYS)
    raw_rule = process.get("rule", "greedy")
    if raw_rule not in RULES:
        errors.append(f"process.rule must be one of {sorted(set(RULES.values()))}, got '{raw_rule}'")
    else:
        rule = RULES[raw_rule]
    raw_d = process.get("d", 1 if rule == "one_choice" else None)
    if raw_d is None:
        errors.append("process.d is required")
    elif not _is_number(raw_d):
        errors.append("d must be a number")
    elif rule == "one_choice" and raw_d != 1:
        errors.append("one_choice has d = 1")
    elif raw_d < 1:
        errors.append("d must be ≥ 1")
    elif rule == "left" and (int(raw_d) != raw_d or raw_d < 2):
        errors.append("left needs an integer d ≥ 2")
    else:
        d = float(raw_d)
    sampler = process.get("sampler", "auto")
    if sampler not in SAMPLERS:
        errors.append(f"process.sampler must be one of {list(SAMPLERS)}")
    elif sampler == "dmin" and not float(d).is_integer():
        errors.append("sampler 'dmin' needs an integer d")
    weights = process.get("weights", {"kind": "constant"})
    if not isinstance(weights, dict):
        errors.append("process.weights must be an object")
    else:
        errors += _unknown("process.weights.", weights, WEIGHT_KEYS)
        weights_kind = weights.get("kind", "constant")
        weights_params = weights.get("params", {}) or {}
        try:
            make_distribution(weights_kind, weights_params)
        except InvalidParameterError as e:
            errors.append(str(e))

    # sizes
    n = doc.get("n")
    if "n" in doc and (not _is_int(n) or n < 2):
        errors.append("n must be an integer ≥ 2")
    elif rule == "left" and _is_int(n) and d >= 2 and n % int(d) != 0:
        errors.append(f"left needs n divisible by d, got n={n}, d={int(d)}")
    checkpoints = doc.get("checkpoints")
    if "checkpoints" in doc:
        if not isinstance(checkpoints, list) or not checkpoints:
            errors.append("checkpoints must be a non-empty list")
        elif not all(_is_int(c) and c >= 0 for c in checkpoints):
            errors.append("checkpoints must be non-negative integers")
        elif any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
            errors.append("checkpoints not strictly increasing")
    trials = doc.get("trials")
    if "trials" in doc and (not _is_int(trials) or trials < 1):
        errors.append("trials must be an integer ≥ 1")
    seed = doc.get("seed")
    if "seed" in doc and (not _is_int(seed) or not 0 <= seed <= SEED_MASK):
        errors.append("seed must be a 64-bit unsigned integer")

    # measurements and alpha
    measurements = doc.get("measurements", ["gap"])
    if not isinstance(measurements, list) or not measurements:
        errors.append("measurements must be a non-empty list")
        measurements = ["gap"]
    else:
        bad = [m for m in measurements if m not in MEASUREMENTS]
        if bad:
            errors.append(f"unknown measurements {bad}; expected a subset of {list(MEASUREMENTS)}")
        if "left_layers" in measurements and rule != "left":
            errors.append("left_layers needs rule 'left'")
    alpha = doc.get("alpha")
    if alpha is not None and (not _is_number(alpha) or alpha <= 0):
        errors.append("alpha must be a positive number")
    if "potentials" in measurements and rule == "one_choice" and alpha is None:
        errors.append("potentials under one_choice need an explicit alpha")

    # output
    output = doc.get("output", {})
    if not isinstance(output, dict):
        errors.append("'output' must be an object")
        output = {}
    errors += _unknown("output.", output, OUTPUT_KEYS)
    fmt = output.get("format", "csv")
    if fmt not in FORMATS:
        errors.append(f"output.format must be one of {list(FORMATS)}")
    path = output.get("path", "-")
    if not isinstance(path, str) or not path:
        errors.append("output.path must be a non-empty string")

    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(
        rule=rule,
        d=d if rule != "one_choice" else 1.0,
        n=n,
        checkpoints=tuple(checkpoints),
        trials=trials,
        base_seed=seed,
        sampler=sampler,
        weights_kind=weights_kind,
        weights_params=dict(weights_params),
        measurements=tuple(dict.fromkeys(measurements)),
        alpha_override=float(alpha) if alpha is not None else None,
        output_format=fmt,
        output_path=path,
    )


def load_config(text: str) -> ExperimentConfig:
    """
    Parse and validate a JSON configuration document.

    Args:
        text: JSON text

    Returns:
        ExperimentConfig
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError([f"invalid JSON: {e}"]) from e
    config = parse_config(doc)
    logger.info(f"Loaded config: {config.rule} d={config.d} n={config.n}, {config.trials} trials")
    return config


def load_config_file(path: str) -> ExperimentConfig:
    """Read and validate a configuration file."""
    try:
        with open(path, 'r') as f:
            text = f.read()
    except OSError as e:
        raise ConfigError([f"cannot read config '{path}': {e}"]) from e
    return load_config(text)
