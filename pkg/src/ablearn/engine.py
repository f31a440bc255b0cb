"""The query loop: select an example, ask the labeler, update the belief.

Each step consumes one unit of budget whether the labeler answered or
abstained.  A label updates both the label belief and the abstention
belief; an abstention updates only the abstention belief and the example
is never asked again.  Sessions are immutable values, serializable to
JSON after every step, so an interrupted interactive session resumes
exactly where it stopped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable, Protocol

import numpy as np

from .core import (
    ABSTAIN,
    AbstentionPattern,
    Labeling,
    Pool,
    Response,
    SessionTrace,
    TraceStep,
    response_of,
)
from .errors import InputError, ProtocolError
from .exact import DiscreteBelief, ExactBeliefView, belief_from_json, belief_to_json, label_marginal, update_belief
from .map_models import (
    LinearModel,
    MapBelief,
    model_from_checkpoint,
    model_to_checkpoint,
    predict_abstention,
)
from .strategies import BeliefView, StrategyKind, select_with_scores


class Labeler(Protocol):
    def respond(self, x: int) -> Response: ...


@dataclass(frozen=True)
class DeterministicLabeler:
    """Answers from a fixed labeling and abstention pattern."""

    f_true: Labeling
    k_true: AbstentionPattern

    def respond(self, x: int) -> Response:
        return response_of(self.f_true, self.k_true, x)


@dataclass(frozen=True)
class StochasticLabeler:
    """Abstains on x with probability rate_of(x), else labels with f_true.

    The draw for x depends only on (seed, x), so a given labeler gives the
    same answer no matter when or how often x comes up.
    """

    f_true: Labeling
    rate_of: Callable[[int], float]
    seed: int

    def respond(self, x: int) -> Response:
        draw = float(np.random.default_rng([self.seed, x]).random())
        if draw < float(self.rate_of(x)):
            return ABSTAIN
        return Response(self.f_true[x])


@dataclass
class ScriptedLabeler:
    """Replays a fixed response sequence; for tests and trace replays."""

    responses: tuple[Response, ...]
    cursor: int = 0
    asked: list = field(default_factory=list)

    def respond(self, x: int) -> Response:
        if self.cursor >= len(self.responses):
            raise ProtocolError("scripted labeler ran out of responses")
        self.asked.append(x)
        resp = self.responses[self.cursor]
        self.cursor += 1
        return resp


def view_of(belief) -> BeliefView:
    if isinstance(belief, DiscreteBelief):
        return ExactBeliefView(belief)
    return belief


def update_of(belief, x: int, resp: Response):
    if isinstance(belief, DiscreteBelief):
        return update_belief(belief, x, resp)
    return belief.updated(x, resp)


def predict(belief, x: int) -> np.ndarray:
    """Posterior label distribution: exact mixture or MAP plug-in."""
    if isinstance(belief, DiscreteBelief):
        return label_marginal(belief, x)
    return belief.label_dist(x)


@dataclass(frozen=True)
class SessionState:
    """Everything one session carries between steps."""

    pool: Pool
    strategy: StrategyKind
    belief: object
    budget: int
    seed: int
    steps: tuple[TraceStep, ...] = ()
    outstanding: int | None = None
    outstanding_scores: tuple[tuple[int, float], ...] = ()
    fixed_model: LinearModel | None = None
    record_scores: bool = False

    @property
    def queried(self) -> tuple[int, ...]:
        return tuple(s.x for s in self.steps)

    @property
    def remaining(self) -> int:
        return self.budget - len(self.steps)

    @property
    def complete(self) -> bool:
        return self.outstanding is None

    @property
    def truncated(self) -> bool:
        return self.outstanding is None and self.remaining > 0

    def unqueried(self) -> list[int]:
        seen = set(self.queried)
        return [x for x in self.pool.ids if x not in seen]

    def trace(self) -> SessionTrace:
        return SessionTrace(self.budget, self.steps, self.seed, truncated=self.truncated)


def _fixed_abstention(state: SessionState) -> Callable[[int], float] | None:
    if state.fixed_model is None:
        return None
    model, pool = state.fixed_model, state.pool
    return lambda x: predict_abstention(model, pool[x])


def _with_next_query(state: SessionState) -> SessionState:
    free = state.unqueried()
    if state.remaining <= 0 or not free:
        return replace(state, outstanding=None, outstanding_scores=())
    t = len(state.steps) + 1
    rng = np.random.default_rng([state.seed, t])
    x, snap = select_with_scores(
        state.strategy, view_of(state.belief), free, rng, _fixed_abstention(state)
    )
    return replace(state, outstanding=x, outstanding_scores=snap)


def start_session(
    pool: Pool,
    strategy: StrategyKind,
    belief,
    budget: int,
    seed: int,
    fixed_model: LinearModel | None = None,
    record_scores: bool = False,
) -> SessionState:
    if budget < 1:
        raise InputError(f"budget must be >= 1, got {budget}")
    if strategy.needs_fixed_estimate and fixed_model is None:
        raise InputError(f"strategy {strategy.value} requires a fixed abstention model")
    state = SessionState(
        pool=pool,
        strategy=strategy,
        belief=belief,
        budget=budget,
        seed=seed,
        fixed_model=fixed_model,
        record_scores=record_scores,
    )
    return _with_next_query(state)


def step(state: SessionState, resp: Response) -> SessionState:
    """Consume the outstanding query with the labeler's response."""
    if state.outstanding is None:
        raise ProtocolError("no query outstanding")
    x = state.outstanding
    belief = update_of(state.belief, x, resp)
    t = len(state.steps) + 1
    recorded = state.outstanding_scores if state.record_scores else None
    steps = state.steps + (TraceStep(t, x, resp, recorded),)
    state = replace(state, belief=belief, steps=steps, outstanding=None, outstanding_scores=())
    assert len(state.steps) + state.remaining == state.budget
    return _with_next_query(state)


def run_session(
    pool: Pool,
    strategy: StrategyKind,
    labeler: Labeler,
    belief,
    budget: int,
    seed: int,
    fixed_model: LinearModel | None = None,
    record_scores: bool = False,
    on_step: Callable[[SessionState], None] | None = None,
) -> tuple[SessionTrace, object]:
    """Run the loop to completion; on_step sees the state after each response."""
    state = start_session(pool, strategy, belief, budget, seed, fixed_model, record_scores)
    while state.outstanding is not None:
        resp = labeler.respond(state.outstanding)
        state = step(state, resp)
        if on_step is not None:
            on_step(state)
    return state.trace(), state.belief


def _checkpoint_or_none(model: LinearModel | None):
    return None if model is None else model_to_checkpoint(model)


def _model_or_none(obj, dimension: int):
    return None if obj is None else model_from_checkpoint(obj, dimension)


def _belief_payload(belief) -> dict:
    if isinstance(belief, DiscreteBelief):
        return {"type": "exact", "fixture": json.loads(belief_to_json(belief))}
    if isinstance(belief, MapBelief):
        return {
            "type": "map",
            "label_obs": [list(item) for item in belief.label_obs.items],
            "abst_obs": [list(item) for item in belief.abst_obs.items],
            "label_model": model_to_checkpoint(belief.label_model),
            "abst_model": model_to_checkpoint(belief.abst_model),
            "label_prior": _checkpoint_or_none(belief.label_prior),
            "abst_prior": _checkpoint_or_none(belief.abst_prior),
        }
    raise InputError(f"cannot snapshot belief of type {type(belief).__name__}")


def _belief_from_payload(obj: dict, pool: Pool):
    if obj["type"] == "exact":
        return belief_from_json(json.dumps(obj["fixture"]))
    if obj["type"] == "map":
        from .map_models import ABSTENTION_KIND, LABEL_KIND, LabeledObservations

        d = pool.dimension
        return MapBelief(
            pool=pool,
            label_obs=LabeledObservations(LABEL_KIND, tuple((int(x), int(y)) for x, y in obj["label_obs"])),
            abst_obs=LabeledObservations(ABSTENTION_KIND, tuple((int(x), int(z)) for x, z in obj["abst_obs"])),
            label_model=model_from_checkpoint(obj["label_model"], d),
            abst_model=model_from_checkpoint(obj["abst_model"], d),
            label_prior=_model_or_none(obj.get("label_prior"), d),
            abst_prior=_model_or_none(obj.get("abst_prior"), d),
        )
    raise InputError(f"unknown belief snapshot type {obj['type']!r}")


def session_to_json(state: SessionState) -> str:
    """Full snapshot; everything but the pool, which the bundle provides."""
    obj = {
        "strategy": state.strategy.value,
        "budget": state.budget,
        "seed": state.seed,
        "step_count": len(state.steps),
        "steps": [
            {
                "t": s.t,
                "x": s.x,
                "y": s.response.wire_value(),
                "scores": None if s.scores is None else [list(pair) for pair in s.scores],
            }
            for s in state.steps
        ],
        "outstanding": state.outstanding,
        "outstanding_scores": [list(pair) for pair in state.outstanding_scores],
        "belief": _belief_payload(state.belief),
        "fixed_model": _checkpoint_or_none(state.fixed_model),
        "record_scores": state.record_scores,
    }
    return json.dumps(obj)


def session_from_json(text: str, pool: Pool) -> SessionState:
    obj = json.loads(text)
    steps = []
    for s in obj["steps"]:
        resp = ABSTAIN if s["y"] == 0 else Response(s["y"])
        scores = None if s["scores"] is None else tuple((int(x), float(v)) for x, v in s["scores"])
        steps.append(TraceStep(s["t"], s["x"], resp, scores))
    return SessionState(
        pool=pool,
        strategy=StrategyKind(obj["strategy"]),
        belief=_belief_from_payload(obj["belief"], pool),
        budget=obj["budget"],
        seed=obj["seed"],
        steps=tuple(steps),
        outstanding=obj["outstanding"],
        outstanding_scores=tuple((int(x), float(v)) for x, v in obj["outstanding_scores"]),
        fixed_model=_model_or_none(obj.get("fixed_model"), pool.dimension),
        record_scores=obj.get("record_scores", False),
    )
