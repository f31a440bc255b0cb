"""Generate pools where 60% of examples are off-task, run two query
strategies against the same simulated labelers, and compare how fast each
one's classifier improves.

Single sessions at this toy scale are noisy, so the comparison averages
a handful of seeds.  Run from the repository root:

    python3 demos/quickstart.py
"""

import numpy as np

from ablearn.datasets import split_by_source, subset, synth_text_like
from ablearn.engine import DeterministicLabeler, run_session
from ablearn.evaluate import AccuracyCurve, accuracy_at_step, auac
from ablearn.map_models import MapBelief
from ablearn.scenarios import ScenarioKind, ScenarioSpec, generate
from ablearn.strategies import StrategyKind

BUDGET = 30
SEEDS = range(5)

ds = synth_text_like(n=500, dims=30, separation=1.5, redundant_classes=1, seed=7)
target, redundant = split_by_source(ds)

# hold out rows for measuring accuracy; the pool never sees them
order = np.random.default_rng(0).permutation(len(target))
test = subset(target, [int(i) for i in order[:120]])
train = subset(target, [int(i) for i in order[120:]])

print("pool: 120 examples per session, 60% off-task (labeler abstains)")
print(f"budget: {BUDGET} queries, averaged over {len(SEEDS)} seeds\n")

for kind in (StrategyKind.PASSIVE, StrategyKind.AVG_GAIN, StrategyKind.WORST_GAIN):
    areas, abstained = [], []
    for seed in SEEDS:
        spec = ScenarioSpec(ScenarioKind.UNRELATED, pct=0.6, seed=seed)
        instance = generate(spec, train, redundant, pool_size=120)
        labeler = DeterministicLabeler(instance.f_true, instance.k_true)
        accuracies = []

        def track(state):
            accuracies.append(accuracy_at_step(state.belief, test))

        trace, _ = run_session(
            instance.pool, kind, labeler, MapBelief.initial(instance.pool),
            BUDGET, seed=seed, on_step=track,
        )
        areas.append(auac(AccuracyCurve(tuple(accuracies))))
        abstained.append(sum(1 for s in trace.steps if s.response.is_abstain))
    print(f"{kind.value:>10}: mean area under accuracy curve {np.mean(areas):6.2f}, "
          f"abstentions hit {np.mean(abstained):4.1f}/{BUDGET}")

print("\nThe gain-based strategies learn where the labeler refuses and stop")
print("paying for those examples, so more of their budget buys real labels.")
print("tests/test_acceptance.py runs the same comparison at full scale")
print("(600-example pools, budget 150, ten seeds).")
