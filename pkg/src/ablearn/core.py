"""Domain types for pool-based active learning with abstention feedback.

A labeler answering queries over a fixed pool either returns a label from
a finite alphabet {1..l} or abstains.  Ground truth is a total labeling
``f`` plus a 0/1 abstention pattern ``k`` over the pool; a query on x gets
``Abstain`` when k(x)=1 and the label f(x) otherwise.  Everything here is
an immutable value, safe to share between concurrent sessions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import InputError, MaskedLabelError


@dataclass(frozen=True)
class LabelAlphabet:
    """The label set {1, 2, ..., size}."""

    size: int

    def __post_init__(self):
        if self.size < 2:
            raise InputError(f"label alphabet needs at least 2 labels, got {self.size}")

    @property
    def labels(self) -> range:
        return range(1, self.size + 1)

    def __contains__(self, y: object) -> bool:
        return isinstance(y, int) and 1 <= y <= self.size


@dataclass(frozen=True)
class Example:
    """One pool element: an id and a sparse feature vector.

    Features are (index, value) pairs sorted by strictly increasing index,
    with no explicit zero entries.
    """

    id: int
    features: tuple[tuple[int, float], ...]

    def __post_init__(self):
        if self.id < 0:
            raise InputError(f"example id must be nonnegative, got {self.id}")
        prev = -1
        for idx, val in self.features:
            if idx <= prev:
                raise InputError(f"feature indices must be strictly increasing, got {idx} after {prev}")
            if idx < 0:
                raise InputError(f"feature index must be nonnegative, got {idx}")
            if val == 0.0:
                raise InputError(f"explicit zero entry at feature {idx}")
            prev = idx

    @property
    def max_feature_index(self) -> int:
        return self.features[-1][0] if self.features else -1


@dataclass(frozen=True)
class Pool:
    """A fixed, finite, ordered collection of examples with ids 0..n-1.

    min_dimension widens the feature space beyond what the examples use,
    so models stay shape-compatible with data whose trailing features
    happen to be absent from this particular pool.
    """

    examples: tuple[Example, ...]
    alphabet: LabelAlphabet
    min_dimension: int = 0

    def __post_init__(self):
        if self.min_dimension < 0:
            raise InputError(f"min_dimension must be >= 0, got {self.min_dimension}")
        for i, ex in enumerate(self.examples):
            if ex.id != i:
                raise InputError(f"pool ids must be 0..n-1 in order; position {i} has id {ex.id}")

    def __len__(self) -> int:
        return len(self.examples)

    def __getitem__(self, x: int) -> Example:
        _check_id(x, len(self.examples))
        return self.examples[x]

    @property
    def ids(self) -> range:
        return range(len(self.examples))

    @property
    def dimension(self) -> int:
        """Max feature index + 1 across the pool, widened to min_dimension."""
        used = max((ex.max_feature_index for ex in self.examples), default=-1) + 1
        return max(used, self.min_dimension)


@dataclass(frozen=True)
class Response:
    """A labeler's reply to one query: a label in 1..l, or an abstention."""

    label: int | None = None

    def __post_init__(self):
        if self.label is not None and self.label < 1:
            raise InputError(f"label must be >= 1, got {self.label}")

    @property
    def is_abstain(self) -> bool:
        return self.label is None

    def wire_value(self) -> int:
        """0 encodes an abstention in serialized traces."""
        return 0 if self.label is None else self.label


ABSTAIN = Response()


def _check_id(x: int, size: int) -> None:
    if not isinstance(x, int) or isinstance(x, bool) or not 0 <= x < size:
        raise InputError(f"unknown example id {x!r} (pool size {size})")


@dataclass(frozen=True)
class Labeling:
    """A total assignment of labels to pool ids.

    Positions in ``masked`` hold a sentinel (stored as 0) whose label is
    never revealed; reading one raises MaskedLabelError.  Plain labelings
    have an empty mask.
    """

    labels: tuple[int, ...]
    masked: frozenset[int] = field(default=frozenset())

    def __post_init__(self):
        for i, y in enumerate(self.labels):
            if i in self.masked:
                if y != 0:
                    raise InputError(f"masked position {i} must store the 0 sentinel, got {y}")
            elif y < 1:
                raise InputError(f"label at position {i} must be >= 1, got {y}")
        for i in self.masked:
            if not 0 <= i < len(self.labels):
                raise InputError(f"masked id {i} outside 0..{len(self.labels) - 1}")

    @classmethod
    def with_masked(cls, labels: tuple[int, ...], masked) -> "Labeling":
        masked = frozenset(masked)
        stored = tuple(0 if i in masked else y for i, y in enumerate(labels))
        return cls(stored, masked)

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, x: int) -> int:
        _check_id(x, len(self.labels))
        if x in self.masked:
            raise MaskedLabelError(f"label of example {x} is masked and never revealed")
        return self.labels[x]


@dataclass(frozen=True)
class AbstentionPattern:
    """A total 0/1 assignment over pool ids; 1 means the labeler abstains."""

    bits: tuple[int, ...]

    def __post_init__(self):
        for i, b in enumerate(self.bits):
            if b not in (0, 1):
                raise InputError(f"abstention bit at position {i} must be 0 or 1, got {b}")

    def __len__(self) -> int:
        return len(self.bits)

    def __getitem__(self, x: int) -> int:
        _check_id(x, len(self.bits))
        return self.bits[x]

    def abstained_ids(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b == 1)


def restrict(assignment, ids) -> tuple:
    """Values of a labeling or abstention pattern on ``ids``, in their order."""
    return tuple(assignment[x] for x in ids)


def response_of(f: Labeling, k: AbstentionPattern, x: int) -> Response:
    """The labeler's deterministic reply on x: Abstain when k(x)=1, else f(x).

    Checks k first, so a masked f(x) under k(x)=1 is never read.
    """
    if k[x] == 1:
        return ABSTAIN
    return Response(f[x])


@dataclass(frozen=True)
class TraceStep:
    """One realized step: which example was queried and what came back."""

    t: int  # 1-based step number
    x: int
    response: Response
    scores: tuple[tuple[int, float], ...] | None = None


@dataclass(frozen=True)
class SessionTrace:
    """The realized query/response sequence of one session.

    Every step consumed one unit of budget, abstentions included, so
    ``len(steps) == min(budget, pool size)`` for a completed session.
    """

    budget: int
    steps: tuple[TraceStep, ...]
    seed: int
    truncated: bool = False

    def __post_init__(self):
        if self.budget < 1:
            raise InputError(f"budget must be >= 1, got {self.budget}")
        if len(self.steps) > self.budget:
            raise InputError(f"{len(self.steps)} steps exceed budget {self.budget}")
        seen = set()
        for pos, step in enumerate(self.steps, start=1):
            if step.t != pos:
                raise InputError(f"step numbers must run 1..{len(self.steps)}; position {pos} has t={step.t}")
            if step.x in seen:
                raise InputError(f"example {step.x} queried twice")
            seen.add(step.x)

    def queried_ids(self) -> tuple[int, ...]:
        return tuple(s.x for s in self.steps)


def trace_to_jsonl(trace: SessionTrace) -> str:
    """One step per line: {"t": step, "x": id, "y": 0 for abstain else label}."""
    lines = [
        json.dumps({"t": s.t, "x": s.x, "y": s.response.wire_value()})
        for s in trace.steps
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def trace_from_jsonl(text: str, budget: int, seed: int, truncated: bool = False) -> SessionTrace:
    """Rebuild a trace from its wire form (score snapshots are not carried)."""
    steps = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        resp = ABSTAIN if obj["y"] == 0 else Response(obj["y"])
        steps.append(TraceStep(t=obj["t"], x=obj["x"], response=resp))
    return SessionTrace(budget=budget, steps=tuple(steps), seed=seed, truncated=truncated)
