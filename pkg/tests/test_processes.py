# Unit tests for the allocation processes

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from simulation.errors import InvalidParameterError, LoadOverflowError
from simulation.load_state import LoadState
from simulation.processes import (
    GreedyD,
    ProcessSpec,
    advance,
    chain_step,
    choose_bin_dmin,
    choose_bin_left,
    choose_bin_rank,
    place_ball_dmin,
    place_ball_rank,
    rank_probabilities,
    rank_sample,
    run,
)
from simulation.rng import RngContract
from simulation.weights import UniformTwoValues


@pytest.mark.parametrize("d, n, u, rank", [(1, 10, 0.73, 8), (2, 10, 0.5, 8), (2, 4, 0.0, 1)])
def test_rank_sample_examples(d, n, u, rank):
    assert rank_sample(d, n, u) == rank


def test_rank_sample_rejects_bad_parameters():
    with pytest.raises(InvalidParameterError):
        rank_sample(0.5, 10, 0.1)
    with pytest.raises(InvalidParameterError):
        rank_sample(2, 0, 0.1)


@given(
    st.floats(min_value=1.0, max_value=8.0),
    st.integers(min_value=1, max_value=500),
    st.floats(min_value=0.0, max_value=1.0, exclude_max=True),
)
def test_rank_sample_brackets_the_draw(d, n, u):
    i = rank_sample(d, n, u)
    assert 1 <= i <= n
    assert ((i - 1) / n) ** d <= u
    assert i == n or u < (i / n) ** d


def test_rank_probabilities_small_cases():
    assert rank_probabilities(1, 2) == pytest.approx([0.5, 0.5])
    assert rank_probabilities(2, 2) == pytest.approx([0.25, 0.75])
    assert rank_probabilities(2, 4) == pytest.approx([1 / 16, 3 / 16, 5 / 16, 7 / 16])


def test_place_ball_rank_on_empty_state(stream):
    spec = ProcessSpec.greedy(2, sampler="rank")
    state = LoadState.empty(4)
    place_ball_rank(state, spec, stream)
    assert sorted(state.loads) == [0, 0, 0, 1]
    assert state.gap == pytest.approx(0.75)


def test_rank_one_goes_to_heaviest_bin():
    state = LoadState.from_loads([2, 1, 1, 0])
    b = choose_bin_rank(state, 2, 0.01)
    state.add_ball(b, 1)
    assert state.loads == [3, 1, 1, 0]


def test_dmin_both_samples_hit_same_bin():
    state = LoadState.from_loads([1, 0])
    place_ball_dmin(state, 2, ProcessSpec.greedy(2).weights, _fixed_stream([0.1, 0.2, 0.5]))
    assert state.loads == [2, 0]


def test_dmin_with_one_choice_is_uniform():
    loads = [5, 0, 3, 1]
    assert [choose_bin_dmin(loads, 1, [(b + 0.5) / 4]) for b in range(4)] == [0, 1, 2, 3]


def test_left_ties_go_to_left_group():
    # groups {0, 1} and {2, 3}; samples bin 1 and bin 2
    assert choose_bin_left([0, 0, 0, 0], 2, [0.75, 0.25]) == 1


def test_left_strict_minimum_wins():
    # samples bin 0 and bin 3
    assert choose_bin_left([5, 5, 0, 0], 2, [0.25, 0.75]) == 3


def test_left_needs_divisible_n():
    with pytest.raises(InvalidParameterError):
        ProcessSpec.left(2).validate(5)
    with pytest.raises(InvalidParameterError):
        ProcessSpec.left(1)


def test_left_from_empty_state_always_picks_left_group(stream):
    spec = ProcessSpec.left(2)
    state = run(spec, 8, 1, stream)
    assert sum(state.loads[:4]) == 1


@pytest.mark.parametrize("loads", [[3, 2, 1, 0], [0, 0, 0, 0], [2, 2, 0, 1], [1, 1, 1, 0]])
def test_dmin_matches_rank_sampler_exactly(loads):
    """All 16 sample pairs at n=4, d=2 against the rank distribution."""
    n = len(loads)
    state = LoadState.from_loads(loads)
    index = state.rank_index()
    p = [Fraction(i * i - (i - 1) * (i - 1), n * n) for i in range(1, n + 1)]
    expected = {b: p[index.rank_of(b, loads[b]) - 1] for b in range(n)}

    observed = {b: Fraction(0) for b in range(n)}
    for i, j in itertools.product(range(n), repeat=2):
        b = choose_bin_dmin(loads, 2, [(i + 0.5) / n, (j + 0.5) / n])
        observed[b] += Fraction(1, n * n)
    assert observed == expected


def test_rank_sampler_chi_square():
    n, d, draws = 16, 2, 20000
    s = RngContract(99, 0).stream()
    counts = np.bincount([rank_sample(d, n, u) for u in s.array(draws)], minlength=n + 1)[1:]
    expected = rank_probabilities(d, n) * draws
    assert stats.chisquare(counts, expected).pvalue > 0.001


@pytest.mark.parametrize("n", [1, 2, 3, 7, 100, 1000, 2 ** 12, 2 ** 16])
def test_fractional_d_probabilities_are_nondecreasing(n):
    p = rank_probabilities(1.5, n)
    assert p.sum() == pytest.approx(1.0)
    assert np.all(np.diff(p) >= 0)


def _gap_distribution(spec, uniforms_per_ball):
    """Exact gap law over every combination of bin uniforms for two balls into two bins."""
    cells = [0.25, 0.75]
    law = {}
    for draw in itertools.product(cells, repeat=2 * uniforms_per_ball):
        values = list(draw[:uniforms_per_ball]) + [0.5] + list(draw[uniforms_per_ball:]) + [0.5]
        g = run(spec, 2, 2, _fixed_stream(values)).gap
        law[g] = law.get(g, Fraction(0)) + Fraction(1, len(cells) ** len(draw))
    return law


def test_one_choice_two_balls_gap_law():
    assert _gap_distribution(ProcessSpec.one_choice(), 1) == {0: Fraction(1, 2), 1: Fraction(1, 2)}


def test_two_choice_two_balls_gap_law():
    assert _gap_distribution(ProcessSpec.greedy(2, sampler="dmin"), 2) == {0: Fraction(3, 4), 1: Fraction(1, 4)}


def test_fractional_d_uses_rank_sampler():
    assert GreedyD(1.5).uses_rank_sampler
    assert not GreedyD(2).uses_rank_sampler
    assert GreedyD(2, "rank").uses_rank_sampler
    with pytest.raises(InvalidParameterError):
        GreedyD(1.5, "dmin")
    with pytest.raises(InvalidParameterError):
        GreedyD(0.5)


def test_epsilon_and_margins():
    spec = ProcessSpec.greedy(2)
    assert spec.epsilon == pytest.approx(3 / 16)
    upper, lower = spec.tail_margins(16)
    assert upper > 0 and lower > 0
    assert ProcessSpec.one_choice().epsilon == pytest.approx(0.0)


def test_chain_step_places_n_balls(stream):
    spec = ProcessSpec.greedy(2)
    state = chain_step(LoadState.empty(4), spec, stream)
    assert state.total_weight == 4
    assert state.balls_thrown == 4


def test_run_zero_balls_is_empty(stream):
    state = run(ProcessSpec.greedy(2), 8, 0, stream)
    assert state.loads == [0] * 8
    assert state.gap == 0


def test_run_is_deterministic():
    spec = ProcessSpec.greedy(2)
    a = run(spec, 32, 500, RngContract(3, 1).stream())
    b = run(spec, 32, 500, RngContract(3, 1).stream())
    assert a.loads == b.loads


def test_advancing_in_pieces_matches_one_run():
    for spec in (ProcessSpec.greedy(2), ProcessSpec.greedy(1.5), ProcessSpec.left(2), ProcessSpec.one_choice()):
        whole = run(spec, 16, 300, RngContract(8, 0).stream())
        s = RngContract(8, 0).stream()
        state = run(spec, 16, 100, s)
        advance(state, spec, 200, s)
        assert state.loads == whole.loads


def test_rank_index_stays_in_sync(stream):
    spec = ProcessSpec.greedy(2.5)
    state = run(spec, 20, 400, stream)
    ordered = [state.loads[b] for b in state.rank_index().bins_by_rank()]
    assert ordered == sorted(state.loads, reverse=True)


def test_weighted_total_matches_loads(stream):
    spec = ProcessSpec.greedy(2, UniformTwoValues(1, 2))
    state = run(spec, 16, 200, stream)
    assert state.total_weight == pytest.approx(sum(state.loads))
    assert state.balls_thrown == 200


def test_overflow_guard(stream):
    with pytest.raises(LoadOverflowError):
        run(ProcessSpec.greedy(2), 4, 2 ** 62, stream)


def test_normalized_sorted_examples():
    assert LoadState.from_loads([2, 1, 1, 0]).normalized_sorted().tolist() == [1, 0, 0, -1]
    assert LoadState.from_loads([3, 3, 3]).normalized_sorted().tolist() == [0, 0, 0]
    assert LoadState.from_loads([3, 0, 0, 0]).normalized_sorted().tolist() == [2.25, -0.75, -0.75, -0.75]


def _fixed_stream(values):
    class _Fixed:
        def __init__(self):
            self.values = list(values)

        def next(self):
            return self.values.pop(0)

        def take(self, k):
            return [self.next() for _ in range(k)]

    return _Fixed()
