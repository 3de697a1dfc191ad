# Unit tests for weight tail thresholds

import math

import pytest

from analysis.layered_induction import beta_schedule
from analysis.weighted import tail_target, weight_quantile_M, weighted_gap_allowance
from simulation.errors import InvalidParameterError
from simulation.weights import Constant, Exponential, UniformTwoValues


def test_constant_threshold_is_one():
    assert weight_quantile_M(Constant(), 10, 1024) == 1


def test_uniform_threshold_is_heavy_value():
    # target 1/(10 (ln ln 1024)^5) < 1/2
    assert weight_quantile_M(UniformTwoValues(1, 2), 10, 1024) == pytest.approx(4 / 3)


@pytest.mark.parametrize("s, n", [(10, 1024), (100, 2 ** 20), (0.5, 64)])
def test_exponential_threshold_inverts_tail(s, n):
    assert weight_quantile_M(Exponential(), s, n) == pytest.approx(-math.log(tail_target(s, n)))


def test_large_target_returns_minimum():
    assert tail_target(1e-9, 1024) > 1
    assert weight_quantile_M(UniformTwoValues(1, 2), 1e-9, 1024) == pytest.approx(2 / 3)


def test_threshold_argument_checks():
    with pytest.raises(InvalidParameterError):
        weight_quantile_M(Constant(), 0, 1024)
    with pytest.raises(InvalidParameterError):
        weight_quantile_M(Constant(), 1, 8)


def test_allowance_for_unit_weights_counts_levels():
    schedule = beta_schedule(L=2, ell=1, c_prime=6, n=2 ** 20, d=2)
    assert weighted_gap_allowance(Constant(), schedule) == len(schedule.beta)


def test_allowance_grows_with_heavier_tails():
    schedule = beta_schedule(L=2, ell=1, c_prime=6, n=2 ** 20, d=2)
    assert weighted_gap_allowance(Exponential(), schedule) > weighted_gap_allowance(UniformTwoValues(), schedule)
