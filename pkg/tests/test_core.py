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
    SessionTrace,
    TraceStep,
    response_of,
    restrict,
    trace_from_jsonl,
    trace_to_jsonl,
)
from ablearn.errors import InputError, MaskedLabelError


def make_pool(n, alphabet_size=2):
    exs = tuple(Example(id=i, features=((0, float(i + 1)),)) for i in range(n))
    return Pool(exs, LabelAlphabet(alphabet_size))


def test_alphabet_rejects_singletons():
    with pytest.raises(InputError):
        LabelAlphabet(1)
    assert 2 in LabelAlphabet(3)
    assert 4 not in LabelAlphabet(3)
    assert 0 not in LabelAlphabet(3)


def test_example_feature_validation():
    Example(id=0, features=((0, 1.0), (3, -2.5)))
    with pytest.raises(InputError):
        Example(id=0, features=((3, 1.0), (1, 2.0)))
    with pytest.raises(InputError):
        Example(id=0, features=((1, 1.0), (1, 2.0)))
    with pytest.raises(InputError):
        Example(id=0, features=((2, 0.0),))
    with pytest.raises(InputError):
        Example(id=-1, features=())


def test_pool_requires_sequential_ids():
    exs = (Example(id=0, features=()), Example(id=2, features=()))
    with pytest.raises(InputError):
        Pool(exs, LabelAlphabet(2))
    pool = make_pool(3)
    assert len(pool) == 3
    assert list(pool.ids) == [0, 1, 2]
    assert pool.dimension == 1
    with pytest.raises(InputError):
        pool[3]
    with pytest.raises(InputError):
        pool[-1]


def test_restrict_preserves_order():
    f = Labeling((1, 2, 1, 2))
    assert restrict(f, [1, 2]) == (2, 1)
    assert restrict(f, []) == ()
    assert restrict(f, [3, 0]) == (2, 1)
    with pytest.raises(InputError):
        restrict(f, [4])


def test_restrict_on_abstention_pattern():
    k = AbstentionPattern((0, 1, 1, 0))
    assert restrict(k, [2, 0]) == (1, 0)
    assert k.abstained_ids() == (1, 2)


def test_labeling_rejects_bad_labels():
    with pytest.raises(InputError):
        Labeling((1, 0, 2))
    with pytest.raises(InputError):
        Labeling((1, -3))


def test_masked_label_never_revealed():
    f = Labeling.with_masked((1, 2, 1), masked={1})
    assert f[0] == 1
    assert f[2] == 1
    with pytest.raises(MaskedLabelError):
        f[1]
    # the sentinel must be stored at masked positions
    with pytest.raises(InputError):
        Labeling((1, 2, 1), frozenset({1}))


def test_response_of_checks_abstention_first():
    f = Labeling.with_masked((1, 2), masked={0})
    k = AbstentionPattern((1, 0))
    assert response_of(f, k, 0) is ABSTAIN
    assert response_of(f, k, 1) == Response(2)
    # unmasked but abstained: still Abstain
    g = Labeling((1, 2))
    assert response_of(g, k, 0).is_abstain


def test_response_wire_values():
    assert ABSTAIN.wire_value() == 0
    assert Response(3).wire_value() == 3
    with pytest.raises(InputError):
        Response(0)
    with pytest.raises(InputError):
        Response(-1)


def test_trace_invariants():
    steps = (
        TraceStep(1, 4, Response(2)),
        TraceStep(2, 0, ABSTAIN),
    )
    tr = SessionTrace(budget=3, steps=steps, seed=7)
    assert tr.queried_ids() == (4, 0)
    with pytest.raises(InputError):
        SessionTrace(budget=1, steps=steps, seed=7)
    with pytest.raises(InputError):
        SessionTrace(budget=3, steps=(TraceStep(2, 4, Response(2)),), seed=7)
    with pytest.raises(InputError):
        SessionTrace(
            budget=3,
            steps=(TraceStep(1, 4, Response(2)), TraceStep(2, 4, ABSTAIN)),
            seed=7,
        )


def test_trace_jsonl_round_trip():
    steps = (
        TraceStep(1, 5, Response(1)),
        TraceStep(2, 2, ABSTAIN),
        TraceStep(3, 0, Response(3)),
    )
    tr = SessionTrace(budget=5, steps=steps, seed=11)
    text = trace_to_jsonl(tr)
    lines = text.strip().split("\n")
    assert len(lines) == 3
    assert '"y": 0' in lines[1]
    back = trace_from_jsonl(text, budget=5, seed=11)
    assert back.steps == steps
    assert back.budget == 5 and back.seed == 11 and back.truncated is False


def test_trace_jsonl_empty():
    tr = SessionTrace(budget=2, steps=(), seed=0)
    assert trace_to_jsonl(tr) == ""
    back = trace_from_jsonl("", budget=2, seed=0)
    assert back.steps == ()


def test_random_traces_respect_budget():
    # all-abstain sessions still consume one budget unit per step
    rng = np.random.default_rng(123)
    for _ in range(50):
        n = int(rng.integers(1, 8))
        budget = int(rng.integers(1, 10))
        m = min(budget, n)
        order = rng.permutation(n)[:m]
        steps = tuple(TraceStep(t + 1, int(x), ABSTAIN) for t, x in enumerate(order))
        tr = SessionTrace(budget=budget, steps=steps, seed=1)
        assert len(tr.steps) == min(budget, n)
