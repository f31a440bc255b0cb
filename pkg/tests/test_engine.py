import json

import numpy as np
import pytest

from ablearn.core import (
    ABSTAIN,
    AbstentionPattern,
    Example,
    LabelAlphabet,
    Labeling,
    Pool,
    Response,
)
from ablearn.engine import (
    DeterministicLabeler,
    ScriptedLabeler,
    StochasticLabeler,
    predict,
    run_session,
    session_from_json,
    session_to_json,
    start_session,
    step,
)
from ablearn.errors import ContradictionError, InputError, ProtocolError
from ablearn.exact import (
    DiscreteAbstentionHypothesis,
    DiscreteBelief,
    DiscreteHypothesis,
    update_belief,
)
from ablearn.map_models import LabeledObservations, MapBelief, fit_map, predict_label_dist
from ablearn.strategies import StrategyKind


def line_pool(n, alphabet_size=2):
    # one or two sparse features per example, ids 0..n-1
    examples = []
    for i in range(n):
        feats = [(0, 1.0 + 0.5 * i)]
        if i % 3:
            feats.append((1, float(i % 3)))
        examples.append(Example(i, tuple(feats)))
    return Pool(tuple(examples), LabelAlphabet(alphabet_size))


def det_hypothesis(labels, n_labels=2):
    rows = []
    for y in labels:
        row = [0.0] * n_labels
        row[y - 1] = 1.0
        rows.append(tuple(row))
    return DiscreteHypothesis(tuple(rows))


def small_belief():
    return DiscreteBelief(
        (
            DiscreteHypothesis(((0.8, 0.2), (0.6, 0.4))),
            DiscreteHypothesis(((0.3, 0.7), (0.5, 0.5))),
        ),
        (0.5, 0.5),
        (
            DiscreteAbstentionHypothesis((0.2, 0.5)),
            DiscreteAbstentionHypothesis((0.4, 0.1)),
        ),
        (0.5, 0.5),
    )


class AlwaysAbstain:
    def respond(self, x):
        return ABSTAIN


def test_budget_conserved_and_no_repeats():
    pool = line_pool(10)
    f = Labeling(tuple(1 + (i % 2) for i in range(10)))
    labeler = StochasticLabeler(f, lambda x: 0.4, seed=5)
    trace, _ = run_session(
        pool, StrategyKind.AVG_GAIN, labeler, MapBelief.initial(pool), 7, seed=1
    )
    assert len(trace.steps) == 7
    queried = [s.x for s in trace.steps]
    assert len(set(queried)) == 7
    assert [s.t for s in trace.steps] == list(range(1, 8))
    assert not trace.truncated


def test_abstentions_consume_budget():
    pool = line_pool(6)
    trace, _ = run_session(
        pool, StrategyKind.PASSIVE, AlwaysAbstain(), MapBelief.initial(pool), 4, seed=2
    )
    assert len(trace.steps) == 4
    assert all(s.response.is_abstain for s in trace.steps)


def test_abstain_leaves_label_side_untouched():
    pool = line_pool(8)
    belief = MapBelief.initial(pool)
    trace, final = run_session(
        pool, StrategyKind.WORST_GAIN, AlwaysAbstain(), belief, 5, seed=3
    )
    assert final.label_model == belief.label_model
    assert len(final.label_obs) == 0
    assert len(final.abst_obs) == 5
    # exact path: label posterior stays at the prior too
    eb = small_belief()
    pool2 = line_pool(2)
    _, fin = run_session(pool2, StrategyKind.PASSIVE, AlwaysAbstain(), eb, 2, seed=0)
    assert fin.h_weights == eb.h_weights
    assert fin.r_weights != eb.r_weights


def test_label_updates_both_sides():
    pool = line_pool(8)
    f = Labeling(tuple(1 + (i % 2) for i in range(8)))
    k = AbstentionPattern((0,) * 8)
    _, final = run_session(
        pool,
        StrategyKind.PASSIVE,
        DeterministicLabeler(f, k),
        MapBelief.initial(pool),
        3,
        seed=7,
    )
    assert len(final.label_obs) == 3
    assert len(final.abst_obs) == 3
    assert final.label_model != MapBelief.initial(pool).label_model


def test_same_seed_same_trace():
    pool = line_pool(9)
    f = Labeling(tuple(2 - (i % 2) for i in range(9)))
    labeler = StochasticLabeler(f, lambda x: 0.3, seed=21)
    runs = [
        run_session(pool, StrategyKind.AVG_GAIN, labeler, MapBelief.initial(pool), 6, seed=11)[0]
        for _ in range(2)
    ]
    assert runs[0] == runs[1]


def test_engine_matches_manual_update_chain():
    # scripted session against the same updates applied by hand
    belief = small_belief()
    pool = line_pool(2)
    script = (Response(1), ABSTAIN)
    trace, final = run_session(
        pool, StrategyKind.AVG_GAIN, ScriptedLabeler(script), belief, 2, seed=0
    )
    manual = belief
    for s, resp in zip(trace.steps, script):
        manual = update_belief(manual, s.x, resp)
    assert final == manual
    # the avg criterion ties on both examples at the prior, so id 0 goes first
    assert trace.queried_ids() == (0, 1)
    assert final.h_weights == pytest.approx((8 / 11, 3 / 11), abs=1e-12)
    assert final.r_weights == pytest.approx((20 / 23, 3 / 23), abs=1e-12)


def test_truncates_when_pool_runs_out():
    pool = line_pool(5)
    f = Labeling((1, 2, 1, 2, 1))
    k = AbstentionPattern((0, 1, 0, 0, 1))
    trace, _ = run_session(
        pool,
        StrategyKind.MAX_GIBBS,
        DeterministicLabeler(f, k),
        MapBelief.initial(pool),
        12,
        seed=4,
    )
    assert trace.truncated
    assert len(trace.steps) == 5
    assert sorted(trace.queried_ids()) == [0, 1, 2, 3, 4]


def test_predict_exact_mixture():
    pool = line_pool(2)
    belief = DiscreteBelief(
        (det_hypothesis((1, 1)), det_hypothesis((2, 1))),
        (0.9, 0.1),
        (DiscreteAbstentionHypothesis((0.0, 0.0)),),
        (1.0,),
    )
    assert predict(belief, 0) == pytest.approx([0.9, 0.1], abs=1e-12)
    assert predict(belief, 1) == pytest.approx([1.0, 0.0], abs=1e-12)


def test_predict_map_plugin():
    pool = line_pool(4)
    belief = MapBelief.initial(pool)
    obs = (Response(2), Response(2), Response(1))
    state = start_session(pool, StrategyKind.PASSIVE, belief, 3, seed=6)
    for resp in obs:
        state = step(state, resp)
    for x in pool.ids:
        want = predict_label_dist(state.belief.label_model, pool[x])
        assert predict(state.belief, x) == pytest.approx(want, abs=0)


def test_step_without_outstanding_query():
    pool = line_pool(3)
    state = start_session(pool, StrategyKind.PASSIVE, MapBelief.initial(pool), 3, seed=0)
    while state.outstanding is not None:
        state = step(state, ABSTAIN)
    with pytest.raises(ProtocolError):
        step(state, ABSTAIN)


def test_budget_and_fixed_model_validation():
    pool = line_pool(3)
    with pytest.raises(InputError):
        start_session(pool, StrategyKind.PASSIVE, MapBelief.initial(pool), 0, seed=0)
    with pytest.raises(InputError):
        start_session(pool, StrategyKind.AVG_GAIN_FIXED, MapBelief.initial(pool), 2, seed=0)


def test_fixed_estimate_session_runs():
    pool = line_pool(7)
    fixed = fit_map(LabeledObservations("abstention", ((0, 1), (3, 0), (5, 0))), pool, 1.0)
    f = Labeling(tuple(1 + (i % 2) for i in range(7)))
    k = AbstentionPattern((0, 0, 1, 0, 0, 0, 1))
    trace, _ = run_session(
        pool,
        StrategyKind.WORST_GAIN_FIXED,
        DeterministicLabeler(f, k),
        MapBelief.initial(pool),
        5,
        seed=9,
        fixed_model=fixed,
    )
    assert len(trace.steps) == 5


def test_scores_recorded_only_on_request():
    pool = line_pool(4)
    f = Labeling((1, 2, 1, 2))
    k = AbstentionPattern((0, 0, 0, 0))
    labeler = DeterministicLabeler(f, k)
    plain, _ = run_session(
        pool, StrategyKind.AVG_GAIN, labeler, MapBelief.initial(pool), 3, seed=13
    )
    assert all(s.scores is None for s in plain.steps)
    rich, _ = run_session(
        pool,
        StrategyKind.AVG_GAIN,
        labeler,
        MapBelief.initial(pool),
        3,
        seed=13,
        record_scores=True,
    )
    assert [s.x for s in rich.steps] == [s.x for s in plain.steps]
    for s in rich.steps:
        assert s.scores is not None
        ids = [x for x, _ in s.scores]
        assert ids == sorted(ids)
        assert s.x in ids


def test_on_step_sees_growing_state():
    pool = line_pool(5)
    seen = []
    run_session(
        pool,
        StrategyKind.PASSIVE,
        AlwaysAbstain(),
        MapBelief.initial(pool),
        4,
        seed=8,
        on_step=lambda st: seen.append(len(st.steps)),
    )
    assert seen == [1, 2, 3, 4]


def test_scripted_labeler_exhaustion():
    pool = line_pool(4)
    labeler = ScriptedLabeler((Response(1),))
    with pytest.raises(ProtocolError):
        run_session(pool, StrategyKind.PASSIVE, labeler, MapBelief.initial(pool), 3, seed=0)


def test_contradiction_surfaces():
    # deterministic belief says example 0 is label 1; scripted label 2 has zero mass
    pool = line_pool(2)
    belief = DiscreteBelief(
        (det_hypothesis((1, 1)),),
        (1.0,),
        (DiscreteAbstentionHypothesis((0.0, 0.0)),),
        (1.0,),
    )
    state = start_session(pool, StrategyKind.PASSIVE, belief, 2, seed=0)
    with pytest.raises(ContradictionError):
        step(state, Response(2))


def test_stochastic_labeler_depends_only_on_seed_and_example():
    f = Labeling(tuple(1 + (i % 2) for i in range(10)))
    a = StochasticLabeler(f, lambda x: 0.5, seed=17)
    b = StochasticLabeler(f, lambda x: 0.5, seed=17)
    for x in range(10):
        r1 = a.respond(x)
        # interleave extra calls: history must not matter
        a.respond((x + 3) % 10)
        assert r1 == b.respond(x)
    never = StochasticLabeler(f, lambda x: 0.0, seed=1)
    always = StochasticLabeler(f, lambda x: 1.0, seed=1)
    assert all(not never.respond(x).is_abstain for x in range(10))
    assert all(always.respond(x).is_abstain for x in range(10))


def test_snapshot_roundtrip_map_midsession():
    pool = line_pool(8)
    f = Labeling(tuple(1 + (i % 2) for i in range(8)))
    k = AbstentionPattern(tuple(1 if i in (2, 5) else 0 for i in range(8)))
    labeler = DeterministicLabeler(f, k)
    state = start_session(
        pool, StrategyKind.WORST_GAIN, MapBelief.initial(pool), 6, seed=4, record_scores=True
    )
    for _ in range(3):
        state = step(state, labeler.respond(state.outstanding))
    restored = session_from_json(session_to_json(state), pool)
    assert restored.steps == state.steps
    assert restored.outstanding == state.outstanding
    assert restored.outstanding_scores == state.outstanding_scores
    a, b = state, restored
    while a.outstanding is not None:
        a = step(a, labeler.respond(a.outstanding))
        b = step(b, labeler.respond(b.outstanding))
    # bit-exact continuation: same observations, same warm starts
    assert np.array_equal(a.belief.label_model.weights, b.belief.label_model.weights)
    assert a.belief.label_model.bias == b.belief.label_model.bias
    assert np.array_equal(a.belief.abst_model.weights, b.belief.abst_model.weights)
    assert a.trace() == b.trace()


def test_snapshot_roundtrip_exact_midsession():
    pool = line_pool(2)
    state = start_session(pool, StrategyKind.AVG_GAIN, small_belief(), 2, seed=0)
    state = step(state, Response(1))
    restored = session_from_json(session_to_json(state), pool)
    done_a = step(state, ABSTAIN)
    done_b = step(restored, ABSTAIN)
    assert done_a.belief == done_b.belief
    assert done_a.complete and done_b.complete


def test_snapshot_roundtrip_with_fixed_model():
    pool = line_pool(6)
    fixed = fit_map(LabeledObservations("abstention", ((1, 1), (4, 0))), pool, 1.0)
    state = start_session(
        pool,
        StrategyKind.AVG_GAIN_FIXED,
        MapBelief.initial(pool),
        4,
        seed=2,
        fixed_model=fixed,
    )
    state = step(state, Response(2))
    restored = session_from_json(session_to_json(state), pool)
    assert restored.fixed_model == state.fixed_model
    assert restored.outstanding == state.outstanding


def test_snapshot_is_plain_json():
    pool = line_pool(3)
    state = start_session(pool, StrategyKind.PASSIVE, MapBelief.initial(pool), 2, seed=1)
    obj = json.loads(session_to_json(state))
    assert obj["strategy"] == "passive"
    assert obj["budget"] == 2
    assert obj["step_count"] == 0
    assert obj["belief"]["type"] == "map"


def test_random_sessions_keep_invariants():
    rng = np.random.default_rng(40)
    for trial in range(25):
        n = int(rng.integers(2, 9))
        pool = line_pool(n)
        budget = int(rng.integers(1, n + 3))
        f = Labeling(tuple(int(rng.integers(1, 3)) for _ in range(n)))
        labeler = StochasticLabeler(f, lambda x: 0.35, seed=int(rng.integers(1000)))
        kind = [StrategyKind.PASSIVE, StrategyKind.AVG_GAIN, StrategyKind.WORST_GAIN, StrategyKind.MAX_GIBBS][trial % 4]
        trace, _ = run_session(
            pool, kind, labeler, MapBelief.initial(pool), budget, seed=trial
        )
        assert len(trace.steps) == min(budget, n)
        assert len(set(trace.queried_ids())) == len(trace.steps)
        assert trace.truncated == (len(trace.steps) < budget)
