"""Exact finite-hypothesis Bayesian machinery.

Beliefs are explicit weighted mixtures over a finite classifier set and a
finite abstention-rate set.  For small pools the belief induces a joint
prior over all full labelings f and abstention patterns k, which supports
the version-space utility, exact policy values, brute-force optimal
policies, and greedy policies.  Everything is exhaustively enumerable by
construction; capacity guards reject pools where it is not.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import ABSTAIN, AbstentionPattern, Labeling, Response, response_of
from .errors import CapacityError, ContradictionError, InputError
from .strategies import score_avg, score_worst

WEIGHT_TOL = 1e-12
PRIOR_TOL = 1e-10
SUPPORT_EPS = 1e-15
JOINT_CELL_GUARD = 10**6
POLICY_NODE_GUARD = 10**7


class Objective(str, Enum):
    AVG = "avg"
    WORST = "worst"


@dataclass(frozen=True)
class DiscreteHypothesis:
    """A probabilistic classifier given by one categorical row per example."""

    table: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        width = None
        for x, row in enumerate(self.table):
            if width is None:
                width = len(row)
                if width < 2:
                    raise InputError(f"need at least 2 labels per row, got {width}")
            elif len(row) != width:
                raise InputError(f"row {x} has {len(row)} entries, expected {width}")
            if any(p < 0.0 or p > 1.0 for p in row):
                raise InputError(f"row {x} has entries outside [0,1]")
            if abs(sum(row) - 1.0) > WEIGHT_TOL:
                raise InputError(f"row {x} sums to {sum(row)!r}, not 1")

    @property
    def pool_size(self) -> int:
        return len(self.table)

    @property
    def n_labels(self) -> int:
        return len(self.table[0])


@dataclass(frozen=True)
class DiscreteAbstentionHypothesis:
    """A per-example abstention rate r(x) in [0,1]."""

    rates: tuple[float, ...]

    def __post_init__(self):
        if any(r < 0.0 or r > 1.0 for r in self.rates):
            raise InputError("abstention rates must lie in [0,1]")

    @property
    def pool_size(self) -> int:
        return len(self.rates)


def _check_weights(weights: tuple[float, ...], what: str) -> None:
    if any(w < 0.0 for w in weights):
        raise InputError(f"{what} must be nonnegative")
    total = sum(weights)
    if abs(total - 1.0) > WEIGHT_TOL:
        raise InputError(f"{what} sum to {total!r}, not 1")


@dataclass(frozen=True)
class DiscreteBelief:
    """Independent weighted mixtures over classifiers and abstention rates.

    The joint weight of (h, r) is the product of the factor weights; the
    factors never become correlated because label and abstention evidence
    reweight them separately.
    """

    hypotheses: tuple[DiscreteHypothesis, ...]
    h_weights: tuple[float, ...]
    abstention: tuple[DiscreteAbstentionHypothesis, ...]
    r_weights: tuple[float, ...]

    def __post_init__(self):
        if not self.hypotheses or not self.abstention:
            raise InputError("belief needs at least one hypothesis of each kind")
        if len(self.hypotheses) != len(self.h_weights):
            raise InputError("hypothesis/weight length mismatch")
        if len(self.abstention) != len(self.r_weights):
            raise InputError("abstention hypothesis/weight length mismatch")
        n = self.hypotheses[0].pool_size
        ell = self.hypotheses[0].n_labels
        for h in self.hypotheses:
            if h.pool_size != n or h.n_labels != ell:
                raise InputError("hypotheses disagree on pool size or label count")
        for r in self.abstention:
            if r.pool_size != n:
                raise InputError("abstention hypotheses disagree on pool size")
        _check_weights(self.h_weights, "hypothesis weights")
        _check_weights(self.r_weights, "abstention weights")

    @property
    def pool_size(self) -> int:
        return self.hypotheses[0].pool_size

    @property
    def n_labels(self) -> int:
        return self.hypotheses[0].n_labels

    def _check_id(self, x: int) -> None:
        if not 0 <= x < self.pool_size:
            raise InputError(f"example id {x} outside pool of size {self.pool_size}")


@dataclass(frozen=True)
class ExactBeliefView:
    """BeliefView facade over a DiscreteBelief for the strategies module."""

    belief: DiscreteBelief

    def label_dist(self, x: int) -> np.ndarray:
        return label_marginal(self.belief, x)

    def abstention(self, x: int) -> float:
        return mean_abstention(self.belief, x)


def update_belief(b: DiscreteBelief, x: int, resp: Response) -> DiscreteBelief:
    """Posterior after observing one response on x.

    A label y reweights classifiers by P[h(x)=y] and abstention hypotheses
    by 1-r(x); an abstention reweights abstention hypotheses by r(x) and
    leaves the classifier factor untouched.
    """
    b._check_id(x)
    hw = np.asarray(b.h_weights, dtype=float)
    rw = np.asarray(b.r_weights, dtype=float)
    rates = np.array([r.rates[x] for r in b.abstention])
    if resp.is_abstain:
        rw = rw * rates
    else:
        y = resp.label
        if y > b.n_labels:
            raise InputError(f"label {y} outside alphabet of size {b.n_labels}")
        hw = hw * np.array([h.table[x][y - 1] for h in b.hypotheses])
        rw = rw * (1.0 - rates)
        hmass = float(hw.sum())
        if hmass <= 0.0:
            raise ContradictionError(f"label {y} on example {x} has zero mass under the belief")
        hw = hw / hmass
    rmass = float(rw.sum())
    if rmass <= 0.0:
        kind = "abstention" if resp.is_abstain else "non-abstention"
        raise ContradictionError(f"{kind} on example {x} has zero mass under the belief")
    rw = rw / rmass
    return DiscreteBelief(b.hypotheses, tuple(float(w) for w in hw), b.abstention, tuple(float(w) for w in rw))


def label_marginal(b: DiscreteBelief, x: int) -> np.ndarray:
    """p[Y=y;x] = sum_h p[h] P[h(x)=y], returned as a vector indexed by y-1."""
    b._check_id(x)
    rows = np.array([h.table[x] for h in b.hypotheses])
    return np.asarray(b.h_weights, dtype=float) @ rows


def mean_abstention(b: DiscreteBelief, x: int) -> float:
    """Posterior mean rate: sum_r p[r] r(x)."""
    b._check_id(x)
    rates = np.array([r.rates[x] for r in b.abstention])
    return float(np.asarray(b.r_weights, dtype=float) @ rates)


@dataclass(frozen=True)
class JointPrior:
    """Induced independent prior over all labelings f and patterns k.

    Flat index i decodes with example 0 as the most significant digit:
    labelings in base n_labels, patterns in base 2.
    """

    pool_size: int
    n_labels: int
    f_weights: np.ndarray
    k_weights: np.ndarray

    def __post_init__(self):
        n, ell = self.pool_size, self.n_labels
        if self.f_weights.shape != (ell**n,):
            raise InputError(f"expected {ell**n} labeling weights, got {self.f_weights.shape}")
        if self.k_weights.shape != (2**n,):
            raise InputError(f"expected {2**n} pattern weights, got {self.k_weights.shape}")
        for name, w in (("labeling", self.f_weights), ("pattern", self.k_weights)):
            if np.any(w < 0.0):
                raise InputError(f"{name} weights must be nonnegative")
            if abs(float(w.sum()) - 1.0) > PRIOR_TOL:
                raise InputError(f"{name} weights sum to {float(w.sum())!r}, not 1")
        self.f_weights.setflags(write=False)
        self.k_weights.setflags(write=False)
        object.__setattr__(self, "_f_cube", self.f_weights.reshape((ell,) * n))
        object.__setattr__(self, "_k_cube", self.k_weights.reshape((2,) * n))

    def labeling_of(self, index: int) -> Labeling:
        digits = np.unravel_index(index, (self.n_labels,) * self.pool_size)
        return Labeling(tuple(int(d) + 1 for d in digits))

    def pattern_of(self, index: int) -> AbstentionPattern:
        bits = np.unravel_index(index, (2,) * self.pool_size)
        return AbstentionPattern(tuple(int(b) for b in bits))

    def index_of_labeling(self, f: Labeling) -> int:
        return int(np.ravel_multi_index(tuple(y - 1 for y in f.labels), (self.n_labels,) * self.pool_size))

    def index_of_pattern(self, k: AbstentionPattern) -> int:
        return int(np.ravel_multi_index(k.bits, (2,) * self.pool_size))

    def _marginal(self, cube: np.ndarray, ids, values, offset: int) -> float:
        ids = list(ids)
        if len(set(ids)) != len(ids):
            raise InputError("duplicate ids in marginal query")
        if not ids:
            return 1.0
        sel: list = [slice(None)] * self.pool_size
        for x, v in zip(ids, values):
            if not 0 <= x < self.pool_size:
                raise InputError(f"example id {x} outside pool of size {self.pool_size}")
            sel[x] = v - offset
        return float(np.sum(cube[tuple(sel)]))

    def f_marginal(self, ids, labels) -> float:
        """q0[Y = labels on ids]; 1.0 for the empty observation."""
        return self._marginal(self._f_cube, ids, labels, offset=1)

    def k_marginal(self, ids, bits) -> float:
        """q0[Z = bits on ids]; 1.0 for the empty observation."""
        return self._marginal(self._k_cube, ids, bits, offset=0)

    def support_pairs(self, eps: float = SUPPORT_EPS):
        """All (weight, f, k) with both factor weights above eps."""
        f_idx = np.nonzero(self.f_weights > eps)[0]
        k_idx = np.nonzero(self.k_weights > eps)[0]
        pairs = []
        for fi in f_idx:
            f = self.labeling_of(int(fi))
            wf = float(self.f_weights[fi])
            for ki in k_idx:
                pairs.append((wf * float(self.k_weights[ki]), f, self.pattern_of(int(ki))))
        return pairs


def check_joint_capacity(pool_size: int, n_labels: int) -> None:
    if n_labels**pool_size > JOINT_CELL_GUARD:
        raise CapacityError(
            f"{n_labels}^{pool_size} labelings exceed the {JOINT_CELL_GUARD} enumeration guard"
        )


def induce_joint_prior(b: DiscreteBelief) -> JointPrior:
    """Push the belief forward onto full labelings and abstention patterns.

    q0[f] = sum_h p[h] prod_x P[h(x)=f(x)] and q0[k] = sum_r p[r] prod_x
    (1-r(x))^(1-k(x)) r(x)^k(x), both renormalized against float drift.
    """
    n, ell = b.pool_size, b.n_labels
    check_joint_capacity(n, ell)
    f_cube = np.zeros((ell,) * n)
    for w, h in zip(b.h_weights, b.hypotheses):
        acc = np.array(w)
        for x in range(n):
            acc = np.multiply.outer(acc, np.array(h.table[x]))
        f_cube += acc
    k_cube = np.zeros((2,) * n)
    for w, r in zip(b.r_weights, b.abstention):
        acc = np.array(w)
        for x in range(n):
            acc = np.multiply.outer(acc, np.array([1.0 - r.rates[x], r.rates[x]]))
        k_cube += acc
    f_weights = f_cube.reshape(-1)
    k_weights = k_cube.reshape(-1)
    return JointPrior(n, ell, f_weights / f_weights.sum(), k_weights / k_weights.sum())


def utility(q0: JointPrior, S, f: Labeling, k: AbstentionPattern) -> float:
    """Version-space mass removed by observing the labeler's responses on S.

    An abstained example reveals only its abstention bit, so the labeling
    factor is constrained on the labeled part of S alone: with L = {x in S
    : k(x)=0}, the value is 1 - q0[Y=f(L);L] * q0[Z=k(S);S].
    """
    S = sorted(S)
    labeled = [x for x in S if k[x] == 0]
    mf = q0.f_marginal(labeled, [f[x] for x in labeled])
    mk = q0.k_marginal(S, [k[x] for x in S])
    return 1.0 - mf * mk


@dataclass(frozen=True)
class PolicyTree:
    """Adaptive query plan: a leaf, or a query with one child per response.

    Children are keyed by the response wire value (0 for abstain, y for
    label y) and kept sorted; branches that are impossible under the
    belief that built the tree hold a bare leaf.
    """

    x: int | None = None
    children: tuple[tuple[int, "PolicyTree"], ...] = ()

    def __post_init__(self):
        if self.x is None and self.children:
            raise InputError("leaf cannot have children")
        keys = [key for key, _ in self.children]
        if keys != sorted(set(keys)):
            raise InputError("children must be sorted by wire value, without duplicates")

    @property
    def is_leaf(self) -> bool:
        return self.x is None

    def child(self, resp: Response) -> "PolicyTree":
        key = resp.wire_value()
        for k, node in self.children:
            if k == key:
                return node
        return LEAF

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max((node.depth() for _, node in self.children), default=0)


LEAF = PolicyTree()


def selected_set(tree: PolicyTree, f: Labeling, k: AbstentionPattern) -> tuple[int, ...]:
    """The ids the policy queries when the labeler is driven by (f, k)."""
    out: list[int] = []
    node = tree
    while not node.is_leaf:
        if node.x in out:
            raise InputError(f"policy queries example {node.x} twice on one path")
        out.append(node.x)
        node = node.child(response_of(f, k, node.x))
    return tuple(out)


def policy_value(q0: JointPrior, tree: PolicyTree, objective: Objective) -> float:
    """Run the policy against every (f,k) in the prior's support.

    Returns the expected utility for AVG, the support minimum for WORST.
    """
    pairs = q0.support_pairs()
    if objective is Objective.AVG:
        return sum(w * utility(q0, selected_set(tree, f, k), f, k) for w, f, k in pairs)
    return min(utility(q0, selected_set(tree, f, k), f, k) for _, f, k in pairs)


def check_policy_capacity(pool_size: int, n_labels: int, budget: int) -> None:
    depth = min(budget, pool_size)
    nodes = math.comb(pool_size, depth) * (n_labels + 1) ** depth
    if nodes > POLICY_NODE_GUARD:
        raise CapacityError(
            f"policy search space ~{nodes} nodes exceeds the {POLICY_NODE_GUARD} guard"
        )


def optimal_policy(q0: JointPrior, budget: int, objective: Objective) -> tuple[PolicyTree, float]:
    """Exhaustive search over adaptive policies of depth min(budget, pool).

    The utility is monotone in the selected set, so some full-depth policy
    attains the optimum over all policies of depth <= budget.  Ties at
    every node go to the lowest query id.
    """
    if budget < 0:
        raise InputError(f"budget must be >= 0, got {budget}")
    n = q0.pool_size
    check_policy_capacity(n, q0.n_labels, budget)
    depth = min(budget, n)
    pairs = q0.support_pairs()
    avg = objective is Objective.AVG

    def leaf_value(alive: tuple[int, ...], queried: frozenset) -> float:
        if avg:
            return sum(pairs[i][0] * utility(q0, queried, pairs[i][1], pairs[i][2]) for i in alive)
        return min(utility(q0, queried, pairs[i][1], pairs[i][2]) for i in alive)

    memo: dict = {}

    def search(alive: tuple[int, ...], queried: frozenset, remaining: int) -> tuple[PolicyTree, float]:
        if remaining == 0:
            return LEAF, leaf_value(alive, queried)
        key = (alive, queried)
        hit = memo.get(key)
        if hit is not None:
            return hit
        best: tuple[PolicyTree, float] | None = None
        for x in range(n):
            if x in queried:
                continue
            groups: dict[int, list[int]] = {}
            for i in alive:
                _, f, k = pairs[i]
                groups.setdefault(response_of(f, k, x).wire_value(), []).append(i)
            sub = queried | {x}
            children = []
            total = 0.0
            worst = math.inf
            for wire in sorted(groups):
                node, val = search(tuple(groups[wire]), sub, remaining - 1)
                children.append((wire, node))
                total += val
                worst = min(worst, val)
            value = total if avg else worst
            if best is None or value > best[1]:
                best = (PolicyTree(x, tuple(children)), value)
        assert best is not None
        memo[key] = best
        return best

    everything = tuple(range(len(pairs)))
    if depth == 0:
        return LEAF, leaf_value(everything, frozenset())
    return search(everything, frozenset(), depth)


def greedy_policy(b: DiscreteBelief, budget: int, objective: Objective) -> PolicyTree:
    """Adaptive tree built by the one-step criterion at each reachable node.

    AVG maximizes the expected-gain score, WORST minimizes the worst-case
    score; both are evaluated on the branch's updated belief.  Responses
    with zero posterior mass get a bare leaf, since no labeler consistent
    with the belief can produce them.
    """
    if budget < 0:
        raise InputError(f"budget must be >= 0, got {budget}")
    check_joint_capacity(b.pool_size, b.n_labels)
    depth = min(budget, b.pool_size)
    avg = objective is Objective.AVG

    def build(belief: DiscreteBelief, queried: frozenset, remaining: int) -> PolicyTree:
        if remaining == 0:
            return LEAF
        view = ExactBeliefView(belief)
        best_x, best_s = None, 0.0
        for x in range(belief.pool_size):
            if x in queried:
                continue
            s = score_avg(view, x) if avg else score_worst(view, x)
            if best_x is None or ((s > best_s) if avg else (s < best_s)):
                best_x, best_s = x, s
        assert best_x is not None
        responses = [ABSTAIN] + [Response(y) for y in range(1, belief.n_labels + 1)]
        children = []
        for resp in responses:
            try:
                child_belief = update_belief(belief, best_x, resp)
            except ContradictionError:
                children.append((resp.wire_value(), LEAF))
                continue
            children.append((resp.wire_value(), build(child_belief, queried | {best_x}, remaining - 1)))
        children.sort(key=lambda pair: pair[0])
        return PolicyTree(best_x, tuple(children))

    return build(b, frozenset(), depth)


def belief_to_json(b: DiscreteBelief) -> str:
    """Fixture form: hypothesis tables, abstention rate rows, and weights."""
    return json.dumps(
        {
            "hypotheses": [[list(row) for row in h.table] for h in b.hypotheses],
            "h_weights": list(b.h_weights),
            "abstention": [list(r.rates) for r in b.abstention],
            "r_weights": list(b.r_weights),
        }
    )


def belief_from_json(text: str) -> DiscreteBelief:
    obj = json.loads(text)
    hyps = tuple(
        DiscreteHypothesis(tuple(tuple(float(p) for p in row) for row in table))
        for table in obj["hypotheses"]
    )
    absts = tuple(
        DiscreteAbstentionHypothesis(tuple(float(r) for r in rates)) for rates in obj["abstention"]
    )
    return DiscreteBelief(
        hyps,
        tuple(float(w) for w in obj["h_weights"]),
        absts,
        tuple(float(w) for w in obj["r_weights"]),
    )
