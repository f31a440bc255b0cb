from dataclasses import dataclass

import numpy as np
import pytest

from ablearn.errors import ExhaustionError, InputError
from ablearn.strategies import (
    FixedAbstentionView,
    StrategyKind,
    avg_gain_formula,
    score_avg,
    score_gibbs,
    score_worst,
    scores,
    select,
    worst_gain_formula,
)


@dataclass
class StubView:
    dists: dict
    rates: dict

    def label_dist(self, x):
        return np.array(self.dists[x])

    def abstention(self, x):
        return self.rates[x]


def test_avg_gain_formula_examples():
    p = np.array([0.5, 0.5])
    assert avg_gain_formula(0.0, p) == pytest.approx(0.5, abs=1e-15)
    assert avg_gain_formula(1 / 3, p) == pytest.approx(2 / 3, abs=1e-15)
    assert avg_gain_formula(1.0, p) == pytest.approx(0.0, abs=1e-15)


def test_worst_gain_formula_examples():
    p = np.array([0.5, 0.5])
    assert worst_gain_formula(0.0, p) == pytest.approx(0.5, abs=1e-15)
    assert worst_gain_formula(1 / 3, p) == pytest.approx(1 / 3, abs=1e-15)
    assert worst_gain_formula(1.0, p) == pytest.approx(1.0, abs=1e-15)


def test_stationary_points_are_the_stated_ratios():
    # the criteria are quadratics/pieces in r with closed-form extremes
    rng = np.random.default_rng(5)
    for _ in range(20):
        p = rng.random(int(rng.integers(2, 5)))
        p = p / p.sum()
        sq = float(np.sum(p * p))
        r_star = sq / (1 + sq)
        grid = np.arange(0.0, 1.0 + 1e-9, 1e-3)
        avg_vals = [avg_gain_formula(r, p) for r in grid]
        assert abs(grid[int(np.argmax(avg_vals))] - r_star) <= 1e-3 + 1e-12
        m = float(np.max(p))
        r_min = m / (1 + m)
        worst_vals = [worst_gain_formula(r, p) for r in grid]
        assert abs(grid[int(np.argmin(worst_vals))] - r_min) <= 1e-3 + 1e-12


def test_scores_lie_in_unit_interval():
    rng = np.random.default_rng(11)
    for _ in range(200):
        p = rng.random(int(rng.integers(2, 6)))
        p = p / p.sum()
        r = float(rng.random())
        assert 0.0 <= avg_gain_formula(r, p) <= 1.0
        assert 0.0 <= worst_gain_formula(r, p) <= 1.0


def test_gibbs_is_avg_gain_without_abstention():
    view = StubView({0: (0.5, 0.5), 1: (1.0, 0.0), 2: (0.3, 0.7)}, {0: 0.0, 1: 0.0, 2: 0.0})
    assert score_gibbs(view, 0) == pytest.approx(0.5)
    assert score_gibbs(view, 1) == pytest.approx(0.0)
    for x in range(3):
        assert score_avg(view, x) == pytest.approx(score_gibbs(view, x), abs=1e-15)


def test_worst_without_abstention_is_least_confidence():
    view = StubView({0: (0.9, 0.1), 1: (0.6, 0.4)}, {0: 0.0, 1: 0.0})
    assert score_worst(view, 0) == pytest.approx(0.9)
    assert score_worst(view, 1) == pytest.approx(0.6)
    rng = np.random.default_rng(0)
    assert select(StrategyKind.WORST_GAIN, view, [0, 1], rng) == 1


def test_select_argmax_and_ties():
    view = StubView({0: (0.5, 0.5), 1: (0.8, 0.2)}, {0: 0.2, 1: 0.2})
    rng = np.random.default_rng(0)
    # avg score at 0 is higher (more uncertain labels, same abstention)
    assert score_avg(view, 0) > score_avg(view, 1)
    assert select(StrategyKind.AVG_GAIN, view, [1, 0], rng) == 0
    tied = StubView({0: (0.5, 0.5), 1: (0.5, 0.5)}, {0: 0.3, 1: 0.3})
    assert select(StrategyKind.AVG_GAIN, tied, [1, 0], rng) == 0
    assert select(StrategyKind.WORST_GAIN, tied, [1, 0], rng) == 0
    assert select(StrategyKind.MAX_GIBBS, tied, [1, 0], rng) == 0


def test_select_passive_is_seeded_and_uniform_over_unqueried():
    view = StubView({x: (0.5, 0.5) for x in range(6)}, {x: 0.0 for x in range(6)})
    picks1 = [select(StrategyKind.PASSIVE, view, [5, 1, 3], np.random.default_rng([9, t])) for t in range(20)]
    picks2 = [select(StrategyKind.PASSIVE, view, [5, 1, 3], np.random.default_rng([9, t])) for t in range(20)]
    assert picks1 == picks2
    assert set(picks1) <= {1, 3, 5}
    assert len(set(picks1)) > 1


def test_select_empty_pool_raises():
    view = StubView({}, {})
    with pytest.raises(ExhaustionError):
        select(StrategyKind.PASSIVE, view, [], np.random.default_rng(0))


def test_fixed_variants_substitute_the_frozen_estimate():
    view = StubView({0: (0.5, 0.5), 1: (0.5, 0.5)}, {0: 0.9, 1: 0.0})
    fixed = {0: 0.0, 1: 0.9}.__getitem__
    rng = np.random.default_rng(0)
    # live posterior says avoid 0; frozen estimator says avoid 1
    assert select(StrategyKind.AVG_GAIN, view, [0, 1], rng) == 1
    assert select(StrategyKind.AVG_GAIN_FIXED, view, [0, 1], rng, fixed_abstention=fixed) == 0
    wrapped = FixedAbstentionView(view, fixed)
    assert wrapped.abstention(0) == 0.0
    assert tuple(wrapped.label_dist(0)) == (0.5, 0.5)
    with pytest.raises(InputError):
        select(StrategyKind.AVG_GAIN_FIXED, view, [0, 1], rng)


def test_scores_snapshot_shape():
    view = StubView({0: (0.5, 0.5), 1: (0.9, 0.1)}, {0: 0.1, 1: 0.2})
    snap = scores(StrategyKind.MAX_GIBBS, view, [1, 0])
    assert [x for x, _ in snap] == [0, 1]
    assert snap[0][1] == pytest.approx(0.5)
    assert scores(StrategyKind.PASSIVE, view, [0, 1]) == ()


def test_strategy_kind_flags():
    assert StrategyKind.AVG_GAIN_FIXED.needs_fixed_estimate
    assert StrategyKind.WORST_GAIN_FIXED.needs_fixed_estimate
    assert not StrategyKind.AVG_GAIN.needs_fixed_estimate
    assert StrategyKind.WORST_GAIN.minimizes
    assert StrategyKind.WORST_GAIN_FIXED.minimizes
    assert not StrategyKind.MAX_GIBBS.minimizes
    assert StrategyKind("avg-gain") is StrategyKind.AVG_GAIN
