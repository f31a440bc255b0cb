"""Query-selection criteria over the unqueried pool.

Every strategy scores candidates through a BeliefView, which exposes only
two posterior summaries: a label distribution and a mean abstention rate
per example.  The two gain-based criteria trade label uncertainty against
the chance of wasting budget on an abstention; their fixed variants read
abstention from a pre-fitted estimator instead of the live posterior.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Protocol

import numpy as np

from .errors import ExhaustionError, InputError


class BeliefView(Protocol):
    def label_dist(self, x: int) -> np.ndarray:
        """Posterior label distribution on x; index y-1 holds p[Y=y;x]."""
        ...

    def abstention(self, x: int) -> float:
        """Posterior mean abstention rate on x."""
        ...


class StrategyKind(str, Enum):
    PASSIVE = "passive"
    MAX_GIBBS = "max-gibbs"
    AVG_GAIN = "avg-gain"
    WORST_GAIN = "worst-gain"
    AVG_GAIN_FIXED = "avg-gain-fixed"
    WORST_GAIN_FIXED = "worst-gain-fixed"

    @property
    def needs_fixed_estimate(self) -> bool:
        return self in (StrategyKind.AVG_GAIN_FIXED, StrategyKind.WORST_GAIN_FIXED)

    @property
    def minimizes(self) -> bool:
        return self in (StrategyKind.WORST_GAIN, StrategyKind.WORST_GAIN_FIXED)


def avg_gain_formula(r: float, probs: np.ndarray) -> float:
    """1 - r^2 - (1-r)^2 * sum_y p_y^2, the expected one-step utility gain."""
    probs = np.asarray(probs, dtype=float)
    return float(1.0 - r * r - (1.0 - r) ** 2 * np.sum(probs * probs))


def worst_gain_formula(r: float, probs: np.ndarray) -> float:
    """max{r, (1-r) * max_y p_y}; lower is better.

    The worst-case utility gain of querying x is 1 minus this, so
    minimizing the score maximizes the guaranteed gain.
    """
    probs = np.asarray(probs, dtype=float)
    return float(max(r, (1.0 - r) * float(np.max(probs))))


def score_avg(view: BeliefView, x: int) -> float:
    return avg_gain_formula(view.abstention(x), view.label_dist(x))


def score_worst(view: BeliefView, x: int) -> float:
    return worst_gain_formula(view.abstention(x), view.label_dist(x))


def score_gibbs(view: BeliefView, x: int) -> float:
    probs = np.asarray(view.label_dist(x), dtype=float)
    return float(1.0 - np.sum(probs * probs))


@dataclass(frozen=True)
class FixedAbstentionView:
    """A view whose abstention estimate comes from a frozen side model."""

    base: BeliefView
    fixed_abstention: Callable[[int], float]

    def label_dist(self, x: int) -> np.ndarray:
        return self.base.label_dist(x)

    def abstention(self, x: int) -> float:
        return float(self.fixed_abstention(x))


_SCORERS = {
    StrategyKind.MAX_GIBBS: score_gibbs,
    StrategyKind.AVG_GAIN: score_avg,
    StrategyKind.WORST_GAIN: score_worst,
    StrategyKind.AVG_GAIN_FIXED: score_avg,
    StrategyKind.WORST_GAIN_FIXED: score_worst,
}


def _resolve_view(kind: StrategyKind, view: BeliefView, fixed_abstention) -> BeliefView:
    if kind.needs_fixed_estimate:
        if fixed_abstention is None:
            raise InputError(f"strategy {kind.value} requires a fixed abstention estimator")
        return FixedAbstentionView(view, fixed_abstention)
    return view


def scores(
    kind: StrategyKind,
    view: BeliefView,
    unqueried,
    fixed_abstention: Callable[[int], float] | None = None,
) -> tuple[tuple[int, float], ...]:
    """Per-candidate scores in ascending id order; empty for passive."""
    if kind is StrategyKind.PASSIVE:
        return ()
    scorer = _SCORERS[kind]
    v = _resolve_view(kind, view, fixed_abstention)
    return tuple((x, scorer(v, x)) for x in sorted(unqueried))


def select_with_scores(
    kind: StrategyKind,
    view: BeliefView,
    unqueried,
    rng: np.random.Generator,
    fixed_abstention: Callable[[int], float] | None = None,
) -> tuple[int, tuple[tuple[int, float], ...]]:
    """The pick plus the score snapshot it was drawn from."""
    ids = sorted(unqueried)
    if not ids:
        raise ExhaustionError("no unqueried examples left")
    if kind is StrategyKind.PASSIVE:
        return ids[int(rng.integers(len(ids)))], ()
    scored = scores(kind, view, ids, fixed_abstention)
    best_x, best_s = scored[0]
    for x, s in scored[1:]:
        if (s < best_s) if kind.minimizes else (s > best_s):
            best_x, best_s = x, s
    return best_x, scored


def select(
    kind: StrategyKind,
    view: BeliefView,
    unqueried,
    rng: np.random.Generator,
    fixed_abstention: Callable[[int], float] | None = None,
) -> int:
    """Pick the next query; ties go to the lowest id, passive draws uniformly."""
    return select_with_scores(kind, view, unqueried, rng, fixed_abstention)[0]
