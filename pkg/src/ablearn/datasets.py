"""Sparse binary datasets: svmlight text parsing and a synthetic generator.

The on-disk format is one example per line, ``<label> <idx>:<val> ...``
with strictly increasing feature indices.  Binary labels arrive in one of
three conventions ({-1,1}, {0,1} or {1,2}); the file as a whole decides
which applies, and everything downstream uses {1,2}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import Example, LabelAlphabet, Labeling, Pool
from .errors import InputError, ParseError

TARGET_SOURCES = (0, 1)

# label sets that pin down a convention; checked incrementally so the
# error points at the first line that breaks every remaining reading.
# one-two first: a file of bare 1s reads as identity, keeping
# parse(render(ds)) exact even when every row has label 1
_CONVENTIONS = (
    ("one-two", frozenset({1, 2}), {1: 1, 2: 2}),
    ("signed", frozenset({-1, 1}), {-1: 1, 1: 2}),
    ("zero-one", frozenset({0, 1}), {0: 1, 1: 2}),
)


@dataclass(frozen=True)
class Dataset:
    """Labeled sparse examples plus where each row came from.

    ``source_classes[i]`` is 0 or 1 for rows of the two target classes
    (label = source + 1) and >= 2 for redundant-class rows, whose labels
    are placeholders that scenario generators mask before use.
    """

    examples: tuple[Example, ...]
    labels: tuple[int, ...]
    dimension: int
    source_classes: tuple[int, ...] = ()
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.examples)
        if len(self.labels) != n:
            raise InputError(f"{n} examples but {len(self.labels)} labels")
        for i, e in enumerate(self.examples):
            if e.id != i:
                raise InputError(f"example at row {i} has id {e.id}")
            if e.max_feature_index >= self.dimension:
                raise InputError(
                    f"row {i} uses feature {e.max_feature_index} outside dimension {self.dimension}"
                )
        for y in self.labels:
            if y not in (1, 2):
                raise InputError(f"label {y} outside {{1, 2}}")
        sources = self.source_classes if self.source_classes else (0,) * n
        if len(sources) != n:
            raise InputError(f"{n} examples but {len(sources)} source classes")
        if not self.source_classes:
            object.__setattr__(self, "source_classes", tuple(y - 1 for y in self.labels))

    def __len__(self) -> int:
        return len(self.examples)

    def to_pool(self) -> Pool:
        return Pool(self.examples, LabelAlphabet(2), min_dimension=self.dimension)

    def labeling(self) -> Labeling:
        return Labeling(self.labels)

    def target_rows(self) -> list[int]:
        return [i for i, s in enumerate(self.source_classes) if s in TARGET_SOURCES]

    def redundant_rows(self) -> list[int]:
        return [i for i, s in enumerate(self.source_classes) if s not in TARGET_SOURCES]


def subset(ds: Dataset, rows: list[int] | tuple[int, ...]) -> Dataset:
    """New dataset from the given rows, reindexed to ids 0..k-1."""
    seen = set()
    for r in rows:
        if r < 0 or r >= len(ds):
            raise InputError(f"row {r} out of range for dataset of {len(ds)}")
        if r in seen:
            raise InputError(f"duplicate row {r}")
        seen.add(r)
    examples = tuple(
        Example(i, ds.examples[r].features) for i, r in enumerate(rows)
    )
    return Dataset(
        examples=examples,
        labels=tuple(ds.labels[r] for r in rows),
        dimension=ds.dimension,
        source_classes=tuple(ds.source_classes[r] for r in rows),
        manifest={"parent": ds.manifest, "rows": [int(r) for r in rows]},
    )


def split_by_source(ds: Dataset) -> tuple[Dataset, Dataset]:
    """(target-class rows, redundant-class rows)."""
    return subset(ds, ds.target_rows()), subset(ds, ds.redundant_rows())


def _parse_label_token(token: str, line_no: int) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ParseError(f"malformed label token {token!r}", line=line_no)
    if value not in (-1, 0, 1, 2):
        raise ParseError(f"unsupported label {value}", line=line_no)
    return value


def _parse_feature_tokens(tokens: list[str], line_no: int) -> tuple[tuple[int, float], ...]:
    feats = []
    prev = -1
    for token in tokens:
        idx_s, sep, val_s = token.partition(":")
        if not sep:
            raise ParseError(f"malformed token {token!r}", line=line_no)
        try:
            idx = int(idx_s)
            val = float(val_s)
        except ValueError:
            raise ParseError(f"malformed token {token!r}", line=line_no)
        if not np.isfinite(val):
            raise ParseError(f"non-finite value in token {token!r}", line=line_no)
        if idx < 0:
            raise ParseError(f"negative feature index in token {token!r}", line=line_no)
        if idx <= prev:
            raise ParseError("non-increasing index", line=line_no)
        prev = idx
        if val != 0.0:
            feats.append((idx, val))
    return tuple(feats)


def parse_svmlight(text: str) -> Dataset:
    """Parse svmlight lines, resolving the label convention file-wide.

    A -1 anywhere means {-1,1}; a 0 means {0,1}; a 2 means {1,2}; a file
    of bare 1s reads as {1,2}.  The first line whose label fits none of
    the conventions still open raises ParseError with that line number.
    """
    raw: list[tuple[int, tuple[tuple[int, float], ...]]] = []
    seen: set[int] = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        tokens = stripped.split()
        label = _parse_label_token(tokens[0], line_no)
        seen.add(label)
        if not any(seen <= allowed for _, allowed, _ in _CONVENTIONS):
            raise ParseError(
                f"mixed label conventions {sorted(seen)}", line=line_no
            )
        raw.append((label, _parse_feature_tokens(tokens[1:], line_no)))
    if not raw:
        raise ParseError("no data lines")
    name, mapping = next(
        (name, mapping) for name, allowed, mapping in _CONVENTIONS if seen <= allowed
    )
    labels = tuple(mapping[y] for y, _ in raw)
    dim = max((feats[-1][0] + 1 for _, feats in raw if feats), default=0)
    examples = tuple(Example(i, feats) for i, (_, feats) in enumerate(raw))
    return Dataset(
        examples=examples,
        labels=labels,
        dimension=max(dim, 1),
        manifest={"kind": "svmlight", "convention": name, "rows": len(raw)},
    )


def render_svmlight(ds: Dataset) -> str:
    """One line per row, labels in {1,2}, repr-exact float values."""
    lines = []
    for e, y in zip(ds.examples, ds.labels):
        parts = [str(y)] + [f"{i}:{v!r}" for i, v in e.features]
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def parse_abstention_sidecar(text: str, n: int) -> tuple[int, ...]:
    """One 0/1 per line, aligned with the dataset's row order."""
    bits = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped not in ("0", "1"):
            raise ParseError(f"expected 0 or 1, got {stripped!r}", line=line_no)
        bits.append(int(stripped))
    if len(bits) != n:
        raise ParseError(f"sidecar has {len(bits)} rows, dataset has {n}")
    return tuple(bits)


def render_abstention_sidecar(bits: tuple[int, ...]) -> str:
    return "\n".join(str(b) for b in bits) + "\n"


def synth_text_like(
    n: int,
    dims: int,
    separation: float = 3.0,
    redundant_classes: int = 0,
    seed: int = 0,
) -> Dataset:
    """Bag-of-words-like sparse counts from per-class feature prototypes.

    Rows cycle through 2 + redundant_classes source classes; target rows
    (sources 0 and 1) get label source+1, redundant rows get an arbitrary
    coin-flip label that scenario generators mask.  Raising ``separation``
    sharpens each class's prototype distribution, so a linear model
    separates the targets more easily.
    """
    if n < 1:
        raise InputError(f"need at least one example, got {n}")
    if dims < 2:
        raise InputError(f"dims must be >= 2, got {dims}")
    if redundant_classes < 0:
        raise InputError(f"redundant_classes must be >= 0, got {redundant_classes}")
    if separation < 0.0:
        raise InputError(f"separation must be >= 0, got {separation}")
    rng = np.random.default_rng(seed)
    n_classes = 2 + redundant_classes
    logits = separation * rng.normal(size=(n_classes, dims))
    protos = np.exp(logits - logits.max(axis=1, keepdims=True))
    protos /= protos.sum(axis=1, keepdims=True)
    examples = []
    labels = []
    sources = []
    for i in range(n):
        c = i % n_classes
        length = 3 + int(rng.poisson(8.0))
        counts = rng.multinomial(length, protos[c])
        feats = tuple((int(j), float(counts[j])) for j in np.flatnonzero(counts))
        examples.append(Example(i, feats))
        sources.append(c)
        labels.append(c + 1 if c in TARGET_SOURCES else 1 + int(rng.integers(2)))
    return Dataset(
        examples=tuple(examples),
        labels=tuple(labels),
        dimension=dims,
        source_classes=tuple(sources),
        manifest={
            "kind": "synthetic",
            "generator": "text-like-v1",
            "n": n,
            "dims": dims,
            "separation": separation,
            "redundant_classes": redundant_classes,
            "seed": seed,
        },
    )


def dataset_to_files(ds: Dataset) -> dict[str, str]:
    """Text payloads keyed by suffix, as written into a bundle directory."""
    return {
        "svmlight": render_svmlight(ds),
        "manifest.json": json.dumps(
            {
                "dimension": ds.dimension,
                "source_classes": list(ds.source_classes),
                "provenance": ds.manifest,
            },
            indent=2,
        )
        + "\n",
    }
