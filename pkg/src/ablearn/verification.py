"""Randomized self-checks of the exact machinery.

Generates small random beliefs and verifies, instance by instance, that
the one-step criteria agree with brute-force gain computations, that the
greedy policies stay within the (1 - 1/e) factor of brute-force optimal
policies, and that the marginal identities the criteria rely on hold.
Failures are dumped as JSON fixtures that replay deterministically.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .exact import (
    LEAF,
    DiscreteAbstentionHypothesis,
    DiscreteBelief,
    DiscreteHypothesis,
    ExactBeliefView,
    Objective,
    PolicyTree,
    belief_from_json,
    belief_to_json,
    check_joint_capacity,
    check_policy_capacity,
    greedy_policy,
    induce_joint_prior,
    mean_abstention,
    optimal_policy,
    policy_value,
)
from .strategies import score_avg, score_worst

NEAR_OPT_FACTOR = 1.0 - 1.0 / math.e
BOUND_SLACK = 1e-12
TIE_BAND = 1e-9
IDENTITY_TOL = 1e-12


def random_belief(
    rng: np.random.Generator,
    max_pool: int = 4,
    max_labels: int = 3,
    max_h: int = 5,
    max_r: int = 4,
) -> DiscreteBelief:
    """A random small belief, occasionally with deterministic components.

    Deterministic classifier rows and exact 0/1 abstention rates exercise
    the zero-mass branches; the tiny floor on random rows keeps purely
    random instances away from accidental near-zeros.
    """
    n = int(rng.integers(1, max_pool + 1))
    ell = int(rng.integers(2, max_labels + 1))
    nh = int(rng.integers(1, max_h + 1))
    nr = int(rng.integers(1, max_r + 1))
    hyps = []
    for _ in range(nh):
        if rng.random() < 0.25:
            rows = np.eye(ell)[rng.integers(0, ell, size=n)]
        else:
            rows = rng.random((n, ell)) + 1e-3
            rows = rows / rows.sum(axis=1, keepdims=True)
        hyps.append(DiscreteHypothesis(tuple(tuple(float(p) for p in row) for row in rows)))
    absts = []
    for _ in range(nr):
        rates = rng.random(n)
        if rng.random() < 0.2:
            snap = rng.random(n) < 0.5
            rates = np.where(snap, np.round(rates), rates)
        absts.append(DiscreteAbstentionHypothesis(tuple(float(r) for r in rates)))
    hw = rng.random(nh) + 1e-3
    rw = rng.random(nr) + 1e-3
    hw = hw / hw.sum()
    rw = rw / rw.sum()
    return DiscreteBelief(
        tuple(hyps),
        tuple(float(w) for w in hw),
        tuple(absts),
        tuple(float(w) for w in rw),
    )


def single_query_tree(x: int, n_labels: int) -> PolicyTree:
    children = tuple((wire, LEAF) for wire in range(n_labels + 1))
    return PolicyTree(x, children)


def brute_one_step_gain(q0, x: int, objective: Objective) -> float:
    """Gain of querying just x, straight from the joint prior."""
    return policy_value(q0, single_query_tree(x, q0.n_labels), objective)


def banded_pick(values, minimize: bool = False, band: float = TIE_BAND) -> int:
    """Lowest index whose value is within ``band`` of the extremum.

    The band absorbs float noise between two mathematically equal routes
    to the same quantity so tie-breaking stays comparable across them.
    """
    ext = min(values) if minimize else max(values)
    for i, v in enumerate(values):
        if (v <= ext + band) if minimize else (v >= ext - band):
            return i
    raise AssertionError("unreachable")


def _extend_leaves(tree: PolicyTree, queried: frozenset, n: int, n_labels: int) -> PolicyTree:
    if tree.is_leaf:
        free = [x for x in range(n) if x not in queried]
        if not free:
            return LEAF
        return single_query_tree(free[0], n_labels)
    sub = queried | {tree.x}
    children = tuple((wire, _extend_leaves(node, sub, n, n_labels)) for wire, node in tree.children)
    return PolicyTree(tree.x, children)


def _random_tree(rng: np.random.Generator, n: int, n_labels: int, depth: int, queried=frozenset()) -> PolicyTree:
    free = [x for x in range(n) if x not in queried]
    if depth == 0 or not free:
        return LEAF
    x = int(rng.choice(free))
    children = tuple(
        (wire, _random_tree(rng, n, n_labels, depth - 1, queried | {x}))
        for wire in range(n_labels + 1)
    )
    return PolicyTree(x, children)


def check_instance(
    b: DiscreteBelief,
    rng: np.random.Generator,
    max_budget: int = 3,
    check_bounds: bool = True,
    band: float = TIE_BAND,
) -> list[str]:
    """All per-instance checks; returns human-readable failure details."""
    failures: list[str] = []
    n, ell = b.pool_size, b.n_labels
    q0 = induce_joint_prior(b)
    view = ExactBeliefView(b)

    for x in range(n):
        exact_z = q0.k_marginal([x], [1])
        tilde = mean_abstention(b, x)
        if abs(exact_z - tilde) > IDENTITY_TOL:
            failures.append(f"identity-mean-abstention: x={x} exact={exact_z!r} mean={tilde!r}")

    for _ in range(3):
        size = int(rng.integers(0, n + 1))
        ids = sorted(rng.choice(n, size=size, replace=False).tolist())
        labels = [int(y) for y in rng.integers(1, ell + 1, size=size)]
        bits = [int(z) for z in rng.integers(0, 2, size=size)]
        joint = 0.0
        for fi in range(ell**n):
            f = q0.labeling_of(fi)
            if any(f[x] != y for x, y in zip(ids, labels)):
                continue
            wf = float(q0.f_weights[fi])
            for ki in range(2**n):
                k = q0.pattern_of(ki)
                if any(k[x] != z for x, z in zip(ids, bits)):
                    continue
                joint += wf * float(q0.k_weights[ki])
        product = q0.f_marginal(ids, labels) * q0.k_marginal(ids, bits)
        if abs(joint - product) > IDENTITY_TOL:
            failures.append(f"factorization: S={ids} joint={joint!r} product={product!r}")

    crit_avg = [score_avg(view, x) for x in range(n)]
    brute_avg = [brute_one_step_gain(q0, x, Objective.AVG) for x in range(n)]
    if banded_pick(crit_avg, band=band) != banded_pick(brute_avg, band=band):
        failures.append(f"greedy-equivalence-avg: criterion={crit_avg} brute={brute_avg}")

    crit_worst = [score_worst(view, x) for x in range(n)]
    brute_worst = [brute_one_step_gain(q0, x, Objective.WORST) for x in range(n)]
    if banded_pick(crit_worst, minimize=True, band=band) != banded_pick(brute_worst, band=band):
        failures.append(f"greedy-equivalence-worst: criterion={crit_worst} brute={brute_worst}")

    if check_bounds:
        for budget in range(1, min(max_budget, n) + 1):
            for objective in (Objective.AVG, Objective.WORST):
                tree = greedy_policy(b, budget, objective)
                greedy_value = policy_value(q0, tree, objective)
                _, optimal_value = optimal_policy(q0, budget, objective)
                if greedy_value < NEAR_OPT_FACTOR * optimal_value - BOUND_SLACK:
                    failures.append(
                        f"near-optimality-{objective.value}: budget={budget} "
                        f"greedy={greedy_value!r} optimal={optimal_value!r}"
                    )

    base = _random_tree(rng, n, ell, depth=min(2, n))
    extended = _extend_leaves(base, frozenset(), n, ell)
    v0 = policy_value(q0, base, Objective.AVG)
    v1 = policy_value(q0, extended, Objective.AVG)
    if v1 < v0 - BOUND_SLACK:
        failures.append(f"monotone-extension: base={v0!r} extended={v1!r}")

    return failures


@dataclass
class VerificationReport:
    instances: int
    bounds_instances: int
    seed: int
    failures: list[dict] = field(default_factory=list)
    elapsed_seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures


def run_verification(
    instances: int = 200,
    max_pool: int = 4,
    max_budget: int = 3,
    seed: int = 0,
    bounds_instances: int = 100,
    max_labels: int = 3,
    max_h: int = 5,
    max_r: int = 4,
    out_dir: str | Path | None = None,
) -> VerificationReport:
    """Run the full randomized suite; dump failing instances as fixtures."""
    if instances < 1:
        raise InputError(f"need at least 1 instance, got {instances}")
    check_joint_capacity(max_pool, max_labels)
    check_policy_capacity(max_pool, max_labels, max_budget)
    report = VerificationReport(instances=instances, bounds_instances=bounds_instances, seed=seed)
    started = time.perf_counter()
    for i in range(instances):
        rng = np.random.default_rng([seed, i])
        b = random_belief(rng, max_pool, max_labels, max_h, max_r)
        details = check_instance(b, rng, max_budget, check_bounds=i < bounds_instances)
        if details:
            record = {"instance": i, "seed": [seed, i], "details": details}
            if out_dir is not None:
                path = Path(out_dir) / f"verify_failure_{i}.json"
                path.parent.mkdir(parents=True, exist_ok=True)
                fixture = {
                    "instance": i,
                    "seed": [seed, i],
                    "max_pool": max_pool,
                    "max_labels": max_labels,
                    "max_h": max_h,
                    "max_r": max_r,
                    "max_budget": max_budget,
                    "belief": json.loads(belief_to_json(b)),
                    "details": details,
                }
                path.write_text(json.dumps(fixture, indent=2))
                record["fixture"] = str(path)
            report.failures.append(record)
    report.elapsed_seconds = time.perf_counter() - started
    return report


def replay_fixture(path: str | Path) -> list[str]:
    """Re-run a dumped failure fixture; returns the (current) failure list."""
    fixture = json.loads(Path(path).read_text())
    rng = np.random.default_rng(fixture["seed"])
    b = random_belief(
        rng,
        fixture.get("max_pool", 4),
        fixture.get("max_labels", 3),
        fixture.get("max_h", 5),
        fixture.get("max_r", 4),
    )
    saved = belief_from_json(json.dumps(fixture["belief"]))
    if b != saved:
        raise InputError("fixture belief does not match its seed; fixture corrupted")
    return check_instance(b, rng, fixture.get("max_budget", 3))
