"""Walk through one tiny session with exact posterior bookkeeping.

A belief is two independent weighted mixtures: one over classifiers, one
over per-example abstention rates.  Watch both sets of weights as a
scripted labeler answers: labels move both sides; abstentions move only
the abstention side.

Run from the repository root:  python3 demos/exact_posteriors.py
"""

from ablearn.core import ABSTAIN, Example, LabelAlphabet, Pool, Response
from ablearn.engine import start_session, step
from ablearn.exact import (
    DiscreteAbstentionHypothesis,
    DiscreteBelief,
    DiscreteHypothesis,
    label_marginal,
    mean_abstention,
)
from ablearn.strategies import StrategyKind


def show(tag, state):
    b = state.belief
    h = ", ".join(f"{w:.4f}" for w in b.h_weights)
    r = ", ".join(f"{w:.4f}" for w in b.r_weights)
    print(f"{tag}")
    print(f"  classifier weights  [{h}]")
    print(f"  abstention weights  [{r}]")
    for x in range(b.pool_size):
        dist = ", ".join(f"{p:.3f}" for p in label_marginal(b, x))
        print(f"  x{x}: label dist ({dist})  mean abstention {mean_abstention(b, x):.3f}")
    if state.outstanding is not None:
        print(f"  next query: x{state.outstanding}  "
              f"scores {[(x, round(s, 5)) for x, s in state.outstanding_scores]}")
    print()


pool = Pool(
    tuple(Example(i, ((0, 1.0 + i),)) for i in range(3)),
    LabelAlphabet(2),
)

# three classifier guesses and two theories about who gets refused
belief = DiscreteBelief(
    (
        DiscreteHypothesis(((1.0, 0.0), (1.0, 0.0), (0.0, 1.0))),
        DiscreteHypothesis(((0.0, 1.0), (1.0, 0.0), (1.0, 0.0))),
        DiscreteHypothesis(((1.0, 0.0), (0.0, 1.0), (1.0, 0.0))),
    ),
    (0.2, 0.5, 0.3),
    (
        DiscreteAbstentionHypothesis((0.1, 0.9, 0.5)),
        DiscreteAbstentionHypothesis((0.3, 0.7, 0.1)),
    ),
    (0.4, 0.6),
)

state = start_session(pool, StrategyKind.WORST_GAIN, belief, budget=2, seed=0,
                      record_scores=True)
show("prior", state)

print(f"labeler answers Label(2) on x{state.outstanding}:")
state = step(state, Response(2))
show("after one label (both mixtures reweighted)", state)

print(f"labeler abstains on x{state.outstanding}:")
state = step(state, ABSTAIN)
show("after one abstention (classifier weights untouched)", state)

print("budget spent; trace:", [(s.t, s.x, s.response.wire_value()) for s in state.steps])
