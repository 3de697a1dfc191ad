# Unit tests for the ball weight distributions

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from simulation.errors import InvalidParameterError, MgfDomainError
from simulation.rng import RngContract
from simulation.weights import BoundedEmpirical, Constant, Exponential, UniformTwoValues, make_distribution


def test_constant_weights():
    w = Constant()
    assert w.draw(0.3) == 1
    assert w.integral
    assert w.S == 1.0
    assert w.mgf(0.25) == pytest.approx(math.exp(0.25))
    assert w.support() == [(1, 1.0)]


def test_uniform_two_values_is_mean_one():
    w = UniformTwoValues(1, 2)
    assert w.a == pytest.approx(2 / 3)
    assert w.b == pytest.approx(4 / 3)
    assert math.fsum(v * p for v, p in w.support()) == pytest.approx(1.0)
    assert w.draw(0.1) == pytest.approx(2 / 3)
    assert w.draw(0.9) == pytest.approx(4 / 3)
    assert w.variance == pytest.approx(1 / 9)


def test_uniform_two_values_rejects_bad_order():
    with pytest.raises(InvalidParameterError):
        UniformTwoValues(2, 1)


def test_exponential_mgf_domain():
    w = Exponential()
    assert w.mgf(0.5) == pytest.approx(2.0)
    with pytest.raises(MgfDomainError):
        w.mgf(1.0)
    with pytest.raises(InvalidParameterError):
        Exponential(lam=1.0)


def test_exponential_s_constant():
    # M''(1/4) / 2 = 1 / (3/4)^3
    assert Exponential(lam=0.5).S == pytest.approx(1 / 0.75 ** 3)


@pytest.mark.parametrize("q", [0.5, 0.1, 1e-6])
def test_exponential_tail_quantile(q):
    assert Exponential().tail_quantile(q) == pytest.approx(-math.log(q))


def test_empirical_normalized_to_mean_one():
    w = BoundedEmpirical([1, 3], [0.5, 0.5])
    assert [v for v, _ in w.support()] == pytest.approx([0.5, 1.5])
    assert w.quantile(0.49) == pytest.approx(0.5)
    assert w.quantile(0.51) == pytest.approx(1.5)
    assert w.tail_quantile(0.2) == pytest.approx(1.5)
    assert w.tail_quantile(0.5) == pytest.approx(0.5)


def test_empirical_rejects_bad_probabilities():
    with pytest.raises(InvalidParameterError):
        BoundedEmpirical([1, 2], [0.7, 0.7])


def test_make_distribution_aliases():
    assert isinstance(make_distribution("const1"), Constant)
    assert isinstance(make_distribution("uniform12"), UniformTwoValues)
    assert isinstance(make_distribution("exp"), Exponential)
    assert make_distribution("uniform_two", {"low": 1, "high": 3}).b == pytest.approx(1.5)
    with pytest.raises(InvalidParameterError):
        make_distribution("pareto")
    with pytest.raises(InvalidParameterError):
        make_distribution("constant", {"scale": 2})


def test_vectorized_quantiles_match_scalar():
    u = np.linspace(0, 0.999, 50)
    for w in (Constant(), UniformTwoValues(), Exponential(), BoundedEmpirical([1, 2, 5])):
        assert w.quantile_array(u) == pytest.approx([w.quantile(float(v)) for v in u])


ALL_KINDS = [
    Constant(),
    UniformTwoValues(1, 2),
    Exponential(),
    BoundedEmpirical([1, 2, 5], [0.5, 0.3, 0.2]),
    BoundedEmpirical([1, 3, 7]),
]


@pytest.mark.parametrize("w", ALL_KINDS, ids=lambda w: w.kind)
def test_sample_mean_is_one(w):
    draws = 10 ** 6
    u = RngContract(2024, 0).stream().array(draws)
    sigma = math.sqrt(w.variance / draws)
    assert abs(w.quantile_array(u).mean() - 1.0) <= 5 * sigma + 1e-12


@pytest.mark.parametrize("w", ALL_KINDS, ids=lambda w: w.kind)
def test_mgf_at_zero(w):
    h = 1e-5
    assert w.mgf(0.0) == 1.0
    assert (w.mgf(h) - w.mgf(-h)) / (2 * h) == pytest.approx(1.0, abs=1e-6)


def test_raw_scale_recovers_given_units():
    assert UniformTwoValues(1, 2).b * UniformTwoValues(1, 2).raw_scale == pytest.approx(2.0)
    w = BoundedEmpirical([1, 3], [0.5, 0.5])
    assert [v * w.raw_scale for v, _ in w.support()] == pytest.approx([1.0, 3.0])
    assert Exponential().raw_scale == 1.0


@given(st.floats(min_value=0.0, max_value=1.0, exclude_max=True))
def test_draws_are_positive(u):
    for w in (Constant(), UniformTwoValues(), BoundedEmpirical([1, 2, 5])):
        assert w.draw(u) > 0
    assert Exponential().draw(u) >= 0
