# Desk-scale Monte Carlo acceptance runs; enable with --runslow

import math

import numpy as np
import pytest
from scipy import stats

from analysis.gap_stats import dominance_test
from analysis.layered_induction import beta_schedule, run_two_phase_trials
from analysis.left_scheme import fibonacci_base
from experiment.config import parse_config
from experiment.runner import default_workers, run_experiment
from potential.drift import check_drift_lemmas, enumerated_drift, exact_drift_phi, exact_drift_psi, random_balanced_states
from potential.functions import PotentialParams, potentials
from potential.supermartingale import gamma_supermartingale_probe
from simulation.load_state import LoadState
from simulation.processes import ProcessSpec, choose_bin_dmin, rank_probabilities, rank_sample
from simulation.rng import RngContract

pytestmark = pytest.mark.slow


def _mean_gaps(rule, d, n, checkpoints, trials, seed=0, weights=None):
    process = {"rule": rule, "weights": weights or {"kind": "constant", "params": {}}}
    if rule != "one_choice":
        process["d"] = d
    config = parse_config({"process": process, "n": n, "checkpoints": checkpoints, "trials": trials, "seed": seed})
    results = run_experiment(config, workers=default_workers())
    gaps = np.array([[s.gap for s in r.samples] for r in results])
    return gaps.mean(axis=0), gaps


def test_two_choice_gap_plateaus():
    means, _ = _mean_gaps("greedy", 2, 1024, [2 ** 14, 2 ** 17, 2 ** 20], 100)
    assert abs(means[2] - means[1]) <= 0.5
    assert 2 <= means[2] <= 8


def test_one_choice_gap_diverges():
    means, _ = _mean_gaps("one_choice", 1, 1024, [2 ** 14, 2 ** 20], 100)
    assert 6 <= means[1] / means[0] <= 11


@pytest.mark.parametrize("n", [16, 64, 256])
@pytest.mark.parametrize("d", [2, 3])
def test_drift_inequalities_exhaustive(n, d):
    spec = ProcessSpec.greedy(d)
    params = PotentialParams.derive(spec)
    failures = 0
    for x in random_balanced_states(n, 10000, RngContract(n, d).stream()):
        failures += not check_drift_lemmas(x, spec, params).passed
    assert failures == 0


@pytest.mark.parametrize("n", [8, 32, 64])
def test_exact_drift_against_enumeration(n):
    spec = ProcessSpec.greedy(2)
    params = PotentialParams.derive(spec)
    for x in random_balanced_states(n, 100, RngContract(n, 0).stream()):
        scale = potentials(x, params).gamma * 1e-12
        assert exact_drift_phi(x, spec, params) == pytest.approx(enumerated_drift(x, spec, params, 1), rel=1e-12, abs=scale)
        assert exact_drift_psi(x, spec, params) == pytest.approx(enumerated_drift(x, spec, params, -1), rel=1e-12, abs=scale)


def test_gamma_stays_linear():
    n = 256
    spec = ProcessSpec.greedy(2)
    probe = gamma_supermartingale_probe(spec, PotentialParams.derive(spec), n, 1000 * n,
                                        RngContract(0, 0).stream(), trials=20)
    assert not probe.increasing
    assert probe.max_gamma_over_n < 10 * probe.baseline


def test_gamma_grows_under_one_choice():
    n = 32
    spec = ProcessSpec.one_choice()
    probe = gamma_supermartingale_probe(spec, PotentialParams.derive(spec, alpha_override=0.025), n, 4096 * n,
                                        RngContract(1, 0).stream(), trials=8)
    assert probe.increasing
    assert probe.slope > 0


def test_dmin_sampler_matches_rank_distribution():
    n, d, draws = 16, 2, 10 ** 6
    s = RngContract(16, 2).stream()
    loads = [int(4 * u) for u in s.take(n)]
    index = LoadState.from_loads(loads).rank_index()
    p = rank_probabilities(d, n)
    expected = np.array([p[index.rank_of(b, loads[b]) - 1] for b in range(n)]) * draws
    pairs = s.array(2 * draws).reshape(draws, 2)
    counts = np.bincount([choose_bin_dmin(loads, d, pair) for pair in pairs], minlength=n)
    assert stats.chisquare(counts, expected).pvalue > 0.001


@pytest.mark.parametrize("d", [1, 1.5, 2, 3])
def test_rank_sampler_cdf_within_four_sigma(d):
    n, draws = 32, 10 ** 6
    us = RngContract(32, int(2 * d)).stream().array(draws)
    counts = np.bincount([rank_sample(d, n, u) for u in us], minlength=n + 1)[1:]
    freq = np.cumsum(counts) / draws
    cdf = (np.arange(1, n + 1) / n) ** d
    assert np.all(np.abs(freq - cdf) <= 4 * np.sqrt(cdf * (1 - cdf) / draws) + 1e-12)


def test_rank_sampler_chi_square_million_draws():
    n, d, draws = 16, 2, 10 ** 6
    us = RngContract(6, 0).stream().array(draws)
    counts = np.bincount([rank_sample(d, n, u) for u in us], minlength=n + 1)[1:]
    assert stats.chisquare(counts, rank_probabilities(d, n) * draws).pvalue > 0.001


def test_gap_dominance_over_time():
    _, gaps = _mean_gaps("greedy", 2, 256, [10 * 256, 100 * 256], 2000)
    assert dominance_test(gaps[:, 0], gaps[:, 1], 0.01).passed


def test_layered_induction_mechanics():
    summary = run_two_phase_trials(ProcessSpec.greedy(2), 64, 16, 8, trials=1000, base_seed=0)
    assert summary.violating_trials == 0
    assert beta_schedule(L=2, ell=1, c_prime=6, n=2 ** 40, d=2).closed_form_holds(1e-9)


def test_left_beats_greedy():
    left, _ = _mean_gaps("left", 2, 1024, [2 ** 20], 100)
    greedy, _ = _mean_gaps("greedy", 2, 1024, [2 ** 20], 100)
    assert left[0] <= greedy[0] + 0.1
    assert fibonacci_base(2) == pytest.approx(1.618034, abs=1e-6)


def test_weighted_uniform_plateau():
    weights = {"kind": "uniform_two", "params": {"low": 1, "high": 2}}
    weighted, _ = _mean_gaps("greedy", 2, 1024, [2 ** 17, 2 ** 20], 100, weights=weights)
    unit, _ = _mean_gaps("greedy", 2, 1024, [2 ** 20], 100)
    assert abs(weighted[1] - weighted[0]) <= 1.0
    assert weighted[1] <= 2 * unit[0] + 4
    assert not math.isnan(weighted[1])
