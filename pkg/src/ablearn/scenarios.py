"""Turn a labeled dataset into a pool with a planted abstention pattern.

Three generators: mix in off-task examples the labeler always skips
("unrelated"), or make the labeler skip the examples a reference model
finds easiest or hardest.  Each yields (pool, true labeling, abstention
pattern) plus a manifest sufficient to regenerate or reload it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .core import AbstentionPattern, Example, LabelAlphabet, Labeling, Pool
from .datasets import (
    Dataset,
    parse_abstention_sidecar,
    parse_svmlight,
    render_abstention_sidecar,
    render_svmlight,
)
from .errors import InputError
from .map_models import (
    ABSTENTION_KIND,
    LABEL_KIND,
    LabeledObservations,
    LinearModel,
    fit_map,
    predict_abstention,
    predict_label_dist,
)

GENERATOR_SIGMA2 = 0.5

# tolerate float dust when pct*n lands a hair off an integer
_COUNT_EPS = 1e-9


class ScenarioKind(str, Enum):
    UNRELATED = "unrelated"
    EASY = "easy"
    HARD = "hard"


@dataclass(frozen=True)
class ScenarioSpec:
    kind: ScenarioKind
    pct: float
    sigma2: float = GENERATOR_SIGMA2
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.pct <= 1.0:
            raise InputError(f"pct must be in [0, 1], got {self.pct}")
        if self.sigma2 <= 0.0:
            raise InputError(f"sigma2 must be positive, got {self.sigma2}")


@dataclass(frozen=True)
class ScenarioInstance:
    """A pool plus the labeler's ground truth, ready to run sessions on."""

    pool: Pool
    f_true: Labeling
    k_true: AbstentionPattern
    manifest: dict

    def __post_init__(self):
        n = len(self.pool.examples)
        if len(self.f_true) != n or len(self.k_true) != n:
            raise InputError("pool, labeling and abstention pattern sizes differ")
        for x in self.f_true.masked:
            if self.k_true[x] != 1:
                raise InputError(f"masked label at {x} requires k_true[{x}] = 1")


def nearest_count(pct: float, n: int) -> int:
    """round(pct*n) with halves up."""
    return int(math.floor(pct * n + 0.5 + _COUNT_EPS))


def ceil_count(pct: float, n: int) -> int:
    return int(math.ceil(pct * n - _COUNT_EPS))


def gen_unrelated(
    target: Dataset, redundant: Dataset, pct: float, pool_size: int, seed: int = 0
) -> ScenarioInstance:
    """Pool of target rows plus off-task rows the labeler always skips.

    The off-task fraction is pct rounded to the nearest count.  Off-task
    rows get k_true=1 and a masked label that nothing may read; which
    rows abstain depends only on their source dataset, never on a label.
    """
    if pool_size < 1:
        raise InputError(f"pool_size must be >= 1, got {pool_size}")
    if target.dimension != redundant.dimension:
        raise InputError("target and redundant datasets have different dimensions")
    n_red = nearest_count(pct, pool_size)
    n_tgt = pool_size - n_red
    if n_tgt > len(target):
        raise InputError(f"need {n_tgt} target rows, dataset has {len(target)}")
    if n_red > len(redundant):
        raise InputError(f"need {n_red} redundant rows, dataset has {len(redundant)}")
    rng = np.random.default_rng(seed)
    tgt_rows = sorted(int(r) for r in rng.choice(len(target), n_tgt, replace=False))
    red_rows = sorted(int(r) for r in rng.choice(len(redundant), n_red, replace=False))
    slots = [("t", r) for r in tgt_rows] + [("r", r) for r in red_rows]
    order = rng.permutation(len(slots))
    examples = []
    labels = []
    masked = []
    placement = []
    for i, j in enumerate(order):
        src, row = slots[j]
        if src == "t":
            examples.append(Example(i, target.examples[row].features))
            labels.append(target.labels[row])
        else:
            examples.append(Example(i, redundant.examples[row].features))
            labels.append(0)
            masked.append(i)
        placement.append([src, row])
    pool = Pool(tuple(examples), LabelAlphabet(2), min_dimension=target.dimension)
    f_true = Labeling(tuple(labels), frozenset(masked))
    k_true = AbstentionPattern(tuple(1 if i in set(masked) else 0 for i in range(pool_size)))
    manifest = {
        "kind": ScenarioKind.UNRELATED.value,
        "pct": pct,
        "seed": seed,
        "pool_size": pool_size,
        "placement": placement,
    }
    return ScenarioInstance(pool, f_true, k_true, manifest)


def prediction_margins(train: Dataset, sigma2: float = GENERATOR_SIGMA2) -> tuple[float, ...]:
    """|p(x) - 0.5| under one reference model fit on every training row."""
    pool = train.to_pool()
    obs = LabeledObservations(LABEL_KIND, tuple(enumerate(train.labels)))
    model = fit_map(obs, pool, sigma2)
    return tuple(
        float(abs(predict_label_dist(model, e)[1] - 0.5)) for e in train.examples
    )


def gen_easy_hard(
    train: Dataset, kind: ScenarioKind, pct: float, sigma2: float = GENERATOR_SIGMA2
) -> AbstentionPattern:
    """Abstain on the ceil(pct*n) most (easy) or least (hard) confident rows.

    Confidence is the margin of a single reference fit on the full
    training set; that model is never reused by any learner.  Margin
    ties break toward the lower id.
    """
    if kind not in (ScenarioKind.EASY, ScenarioKind.HARD):
        raise InputError(f"kind must be easy or hard, got {kind}")
    n = len(train)
    m = ceil_count(pct, n)
    margins = prediction_margins(train, sigma2)
    if kind is ScenarioKind.EASY:
        ranked = sorted(range(n), key=lambda i: (-margins[i], i))
    else:
        ranked = sorted(range(n), key=lambda i: (margins[i], i))
    chosen = set(ranked[:m])
    return AbstentionPattern(tuple(1 if i in chosen else 0 for i in range(n)))


def generate(
    spec: ScenarioSpec,
    target: Dataset,
    redundant: Dataset | None = None,
    pool_size: int | None = None,
) -> ScenarioInstance:
    """Build the pool named by the spec from prepared dataset splits."""
    if spec.kind is ScenarioKind.UNRELATED:
        if redundant is None:
            raise InputError("unrelated scenario needs a redundant dataset")
        size = pool_size if pool_size is not None else len(target)
        return gen_unrelated(target, redundant, spec.pct, size, spec.seed)
    k_true = gen_easy_hard(target, spec.kind, spec.pct, spec.sigma2)
    manifest = {
        "kind": spec.kind.value,
        "pct": spec.pct,
        "sigma2": spec.sigma2,
        "seed": spec.seed,
        "pool_size": len(target),
    }
    return ScenarioInstance(target.to_pool(), target.labeling(), k_true, manifest)


@dataclass(frozen=True)
class OracleEstimate:
    """A fixed abstention model fit on the whole true pattern up front."""

    model: LinearModel
    degenerate: bool


def fit_oracle_estimator(
    pool: Pool, k_true: AbstentionPattern, sigma2: float = GENERATOR_SIGMA2
) -> OracleEstimate:
    """Fit abstention rates against the full true pattern, once.

    An all-0 or all-1 pattern still fits (the prior keeps it finite) but
    is flagged degenerate.
    """
    if len(k_true) != len(pool.examples):
        raise InputError("pattern size does not match pool")
    obs = LabeledObservations(
        ABSTENTION_KIND, tuple((x, k_true[x]) for x in pool.ids)
    )
    model = fit_map(obs, pool, sigma2)
    bits = set(k_true.bits)
    return OracleEstimate(model, degenerate=len(bits) < 2)


def oracle_rate_of(estimate: OracleEstimate, pool: Pool):
    """Per-example abstention probability under the fixed estimate."""
    return lambda x: predict_abstention(estimate.model, pool[x])


DATA_FILE = "data.svmlight"
SIDECAR_FILE = "data.abst"
MANIFEST_FILE = "manifest.json"

# svmlight needs a label token on every line; masked rows write this
# placeholder and the manifest's masked list restores the mask on load
PLACEHOLDER_LABEL = 1


def write_bundle(directory, instance: ScenarioInstance) -> None:
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    n = len(instance.pool.examples)
    labels = tuple(
        PLACEHOLDER_LABEL if i in instance.f_true.masked else instance.f_true.labels[i]
        for i in range(n)
    )
    ds = Dataset(
        examples=instance.pool.examples,
        labels=labels,
        dimension=instance.pool.dimension,
    )
    (path / DATA_FILE).write_text(render_svmlight(ds))
    (path / SIDECAR_FILE).write_text(render_abstention_sidecar(instance.k_true.bits))
    manifest = {
        "scenario": instance.manifest,
        "masked": sorted(instance.f_true.masked),
        "dimension": instance.pool.dimension,
        "alphabet_size": instance.pool.alphabet.size,
    }
    (path / MANIFEST_FILE).write_text(json.dumps(manifest, indent=2) + "\n")


def read_bundle(directory) -> ScenarioInstance:
    path = Path(directory)
    for name in (DATA_FILE, SIDECAR_FILE, MANIFEST_FILE):
        if not (path / name).exists():
            raise InputError(f"bundle is missing {name}: {path / name}")
    manifest = json.loads((path / MANIFEST_FILE).read_text())
    ds = parse_svmlight((path / DATA_FILE).read_text())
    bits = parse_abstention_sidecar((path / SIDECAR_FILE).read_text(), len(ds))
    masked = frozenset(int(i) for i in manifest.get("masked", ()))
    dimension = int(manifest.get("dimension", ds.dimension))
    if dimension < ds.dimension:
        raise InputError("manifest dimension smaller than data requires")
    pool = Pool(
        ds.examples,
        LabelAlphabet(int(manifest.get("alphabet_size", 2))),
        min_dimension=dimension,
    )
    f_true = Labeling.with_masked(ds.labels, masked)
    k_true = AbstentionPattern(bits)
    return ScenarioInstance(pool, f_true, k_true, manifest.get("scenario", {}))
