"""
BinSense - Results Writer
-------------------------
Writes trial records as CSV or JSON and summarizes them per checkpoint.
Both formats carry the same records with the columns

    trial,balls,gap,phi,psi,gamma,max_load

Unmeasured values are empty CSV fields and JSON nulls. JSON records also
carry the nu and left_layers mappings when those were measured; CSV does not.
Floats are written with 17 significant digits in both formats.
"""

import sys
import json
import math
import logging
from typing import Any, Dict, List

import pandas as pd

from experiment.runner import RECORD_FIELDS, TrialResult, all_records
from simulation.errors import InvalidParameterError

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
STDOUT = "-"


def results_frame(results: List[TrialResult]) -> pd.DataFrame:
    """All records as a DataFrame with exactly the RECORD_FIELDS columns."""
    frame = pd.DataFrame(all_records(results), columns=list(RECORD_FIELDS))
    for column in ("phi", "psi", "gamma"):
        frame[column] = frame[column].astype("float64")
    return frame


def to_csv_text(results: List[TrialResult]) -> str:
    return results_frame(results).to_csv(
        index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n"
    )


def _json_value(value: Any) -> str:
    if isinstance(value, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(v)}" for k, v in value.items()) + "}"
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"cannot serialize non-finite value {value!r}")
        return FLOAT_FORMAT % value
    return json.dumps(value)


def to_json_text(results: List[TrialResult]) -> str:
    """Records as a JSON array, one object per line, floats at 17 significant digits."""
    rows = ["  {" + ", ".join(f"{json.dumps(k)}: {_json_value(v)}" for k, v in row.items()) + "}"
            for row in all_records(results)]
    return "[\n" + ",\n".join(rows) + "\n]\n"


def emit(results: List[TrialResult], fmt: str = "csv", path: str = STDOUT) -> str:
    """
    Persist trial records.

    Args:
        results: Non-empty list of TrialResults
        fmt: 'csv' or 'json'
        path: Output file, or '-' for standard output

    Returns:
        The text written

    Raises:
        InvalidParameterError: empty results or unknown format
        OSError: unwritable path
    """
    if not results:
        raise InvalidParameterError("nothing to emit: results are empty")
    if fmt == "csv":
        text = to_csv_text(results)
    elif fmt == "json":
        text = to_json_text(results)
    else:
        raise InvalidParameterError(f"format must be 'csv' or 'json', got '{fmt}'")

    if path == STDOUT:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, 'w', newline='') as f:
            f.write(text)
        logger.info(f"Wrote {sum(len(r.samples) for r in results)} records to {path}")
    return text


def read_results(path: str, fmt: str = "csv") -> List[Dict[str, Any]]:
    """Read emitted records back as dicts; empty fields become None."""
    if fmt == "json":
        with open(path, 'r') as f:
            return json.load(f)
    frame = pd.read_csv(path)
    frame = frame.astype(object).where(frame.notna(), None)
    return frame.to_dict(orient="records")


def summarize(results: List[TrialResult]) -> pd.DataFrame:
    """
    Per-checkpoint summary.

    Returns:
        DataFrame indexed by balls with trials, mean_gap, std_gap, max_gap
        and, when potentials were recorded, mean_gamma_over_n
    """
    frame = results_frame(results)
    summary = frame.groupby("balls").agg(
        trials=("trial", "count"),
        mean_gap=("gap", "mean"),
        std_gap=("gap", "std"),
        max_gap=("gap", "max"),
    )
    if frame["gamma"].notna().any():
        gammas = pd.DataFrame([
            {"balls": s.checkpoint, "gamma_over_n": s.gamma_over_n}
            for r in results for s in r.samples
        ])
        summary["mean_gamma_over_n"] = gammas.groupby("balls")["gamma_over_n"].mean()
    return summary
