"""Accuracy curves, AUAC scores, and the seeds-by-strategies experiment grid.

A cell = (dataset, scenario kind, abstention pct, strategy, seed).  Every
cell is computed by a pure function of the config and the cell key, so
results are identical no matter how cells are scheduled across workers.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datasets import Dataset, parse_svmlight, split_by_source, subset, synth_text_like
from .engine import DeterministicLabeler, run_session
from .errors import InputError
from .map_models import MapBelief, predict_label_dist
from .scenarios import (
    GENERATOR_SIGMA2,
    ScenarioInstance,
    ScenarioKind,
    fit_oracle_estimator,
    gen_easy_hard,
    gen_unrelated,
)
from .strategies import StrategyKind


@dataclass(frozen=True)
class AccuracyCurve:
    """Test accuracy after each query of one session."""

    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise InputError("accuracy curve must have at least one point")
        for i, a in enumerate(self.values):
            if not 0.0 <= a <= 1.0:
                raise InputError(f"accuracy at step {i + 1} outside [0, 1]: {a}")

    def __len__(self) -> int:
        return len(self.values)


def auac(curve: AccuracyCurve) -> float:
    """Area under the accuracy curve, normalized to [0, 100]."""
    return 100.0 * float(np.mean(curve.values))


def accuracy_at_step(belief, test: Dataset) -> float:
    """Fraction of test rows whose predicted label matches; ties pick label 1.

    Evaluation targets the scalable model path: the belief must expose a
    label model usable on examples outside its own pool.
    """
    if len(test) == 0:
        raise InputError("test set is empty")
    if not isinstance(belief, MapBelief):
        raise InputError(
            f"accuracy evaluation needs a model-backed belief, got {type(belief).__name__}"
        )
    hits = 0
    for e, y in zip(test.examples, test.labels):
        dist = predict_label_dist(belief.label_model, e)
        pred = int(np.argmax(dist)) + 1
        hits += pred == y
    return hits / len(test)


@dataclass(frozen=True)
class DataSource:
    """Where a dataset comes from: the synthesizer or svmlight files."""

    name: str
    kind: str = "synth"
    n: int = 1800
    dims: int = 50
    separation: float = 3.0
    redundant_classes: int = 2
    seed: int = 0
    path: str | None = None
    redundant_path: str | None = None

    def __post_init__(self):
        if self.kind not in ("synth", "files"):
            raise InputError(f"unknown source kind {self.kind!r}")
        if self.kind == "files" and not self.path:
            raise InputError("files source needs a path")


def materialize(source: DataSource) -> tuple[Dataset, Dataset]:
    """(target-class data, redundant-class data) for one source."""
    if source.kind == "synth":
        ds = synth_text_like(
            source.n,
            source.dims,
            source.separation,
            source.redundant_classes,
            source.seed,
        )
        return split_by_source(ds)
    target = parse_svmlight(Path(source.path).read_text())
    if source.redundant_path:
        redundant = parse_svmlight(Path(source.redundant_path).read_text())
        if redundant.dimension != target.dimension:
            dim = max(redundant.dimension, target.dimension)
            target = Dataset(target.examples, target.labels, dim, target.source_classes, target.manifest)
            redundant = Dataset(redundant.examples, redundant.labels, dim, (2,) * len(redundant), redundant.manifest)
        else:
            redundant = Dataset(redundant.examples, redundant.labels, redundant.dimension, (2,) * len(redundant), redundant.manifest)
        return target, redundant
    return target, Dataset((), (), target.dimension)


@dataclass(frozen=True)
class ExperimentConfig:
    sources: tuple[DataSource, ...]
    kinds: tuple[ScenarioKind, ...]
    pcts: tuple[float, ...]
    strategies: tuple[StrategyKind, ...]
    seeds: tuple[int, ...]
    budget: int = 150
    pool_size: int = 600
    test_size: int = 300
    learner_sigma2: float = 1.0
    oracle_sigma2: float = GENERATOR_SIGMA2

    def __post_init__(self):
        if not (self.sources and self.kinds and self.pcts and self.strategies and self.seeds):
            raise InputError("experiment grid has an empty axis")
        if self.budget < 1:
            raise InputError(f"budget must be >= 1, got {self.budget}")
        if self.pool_size < 1 or self.test_size < 1:
            raise InputError("pool_size and test_size must be >= 1")
        for p in self.pcts:
            if not 0.0 <= p <= 1.0:
                raise InputError(f"pct {p} outside [0, 1]")


@dataclass(frozen=True)
class CellResult:
    dataset: str
    scenario: str
    pct: float
    strategy: str
    seed: int
    auac: float | None = None
    curve: tuple[float, ...] = ()
    error: str | None = None


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    cells: list[CellResult]
    elapsed_seconds: float = 0.0

    @property
    def failures(self) -> list[CellResult]:
        return [c for c in self.cells if c.error is not None]

    def aggregates(self) -> list[dict]:
        """Per-(dataset, scenario, pct, strategy) mean and stddev over seeds."""
        out = []
        for source in self.config.sources:
            for kind in self.config.kinds:
                for pct in self.config.pcts:
                    for strategy in self.config.strategies:
                        vals = [
                            c.auac
                            for c in self.cells
                            if c.error is None
                            and (c.dataset, c.scenario, c.pct, c.strategy)
                            == (source.name, kind.value, pct, strategy.value)
                        ]
                        out.append(
                            {
                                "dataset": source.name,
                                "scenario": kind.value,
                                "pct": pct,
                                "strategy": strategy.value,
                                "seeds": len(vals),
                                "auac_mean": float(np.mean(vals)) if vals else None,
                                "auac_std": float(np.std(vals)) if vals else None,
                            }
                        )
        return out

    def mean_auac(self, dataset: str, kind: ScenarioKind, pct: float, strategy: StrategyKind) -> float:
        vals = [
            c.auac
            for c in self.cells
            if c.error is None
            and (c.dataset, c.scenario, c.pct, c.strategy)
            == (dataset, kind.value, pct, strategy.value)
        ]
        if not vals:
            raise InputError(f"no successful cells for {dataset}/{kind.value}/{pct}/{strategy.value}")
        return float(np.mean(vals))


SPLIT_TAG = 101


def prepare_instance(
    config: ExperimentConfig, source: DataSource, kind: ScenarioKind, pct: float, seed: int
) -> tuple[ScenarioInstance, Dataset]:
    """(scenario instance, held-out test set) for one grid point.

    The test set comes only from target-class rows, disjoint from every
    pool row; its composition varies with the run seed.
    """
    target, redundant = materialize(source)
    if len(target) < config.test_size + 1:
        raise InputError(
            f"source {source.name}: {len(target)} target rows cannot cover test size {config.test_size}"
        )
    order = [int(r) for r in np.random.default_rng([source.seed, SPLIT_TAG, seed]).permutation(len(target))]
    test = subset(target, order[: config.test_size])
    rest = subset(target, order[config.test_size :])
    if kind is ScenarioKind.UNRELATED:
        instance = gen_unrelated(rest, redundant, pct, config.pool_size, seed)
    else:
        if len(rest) < config.pool_size:
            raise InputError(
                f"source {source.name}: {len(rest)} rows left for a pool of {config.pool_size}"
            )
        train = subset(rest, list(range(config.pool_size)))
        k_true = gen_easy_hard(train, kind, pct, config.oracle_sigma2)
        instance = ScenarioInstance(
            train.to_pool(),
            train.labeling(),
            k_true,
            {"kind": kind.value, "pct": pct, "seed": seed},
        )
    return instance, test


def run_cell_group(
    config: ExperimentConfig, source: DataSource, kind: ScenarioKind, pct: float, seed: int
) -> list[CellResult]:
    """All strategies on one prepared scenario; failures become rows."""
    try:
        instance, test = prepare_instance(config, source, kind, pct, seed)
        labeler = DeterministicLabeler(instance.f_true, instance.k_true)
        fixed = None
        if any(s.needs_fixed_estimate for s in config.strategies):
            fixed = fit_oracle_estimator(instance.pool, instance.k_true, config.oracle_sigma2).model
    except Exception as e:
        return [
            CellResult(source.name, kind.value, pct, s.value, seed, error=f"{type(e).__name__}: {e}")
            for s in config.strategies
        ]
    results = []
    for strategy in config.strategies:
        try:
            curve_points: list[float] = []
            belief = MapBelief.initial(
                instance.pool,
                sigma2_label=config.learner_sigma2,
                sigma2_abst=config.learner_sigma2,
            )
            run_session(
                instance.pool,
                strategy,
                labeler,
                belief,
                config.budget,
                seed,
                fixed_model=fixed if strategy.needs_fixed_estimate else None,
                on_step=lambda st: curve_points.append(accuracy_at_step(st.belief, test)),
            )
            curve = AccuracyCurve(tuple(curve_points))
            results.append(
                CellResult(source.name, kind.value, pct, strategy.value, seed, auac(curve), curve.values)
            )
        except Exception as e:
            results.append(
                CellResult(
                    source.name, kind.value, pct, strategy.value, seed,
                    error=f"{type(e).__name__}: {e}",
                )
            )
    return results


def _group_keys(config: ExperimentConfig):
    for si, source in enumerate(config.sources):
        for kind in config.kinds:
            for pct in config.pcts:
                for seed in config.seeds:
                    yield si, source, kind, pct, seed


def _run_group_by_key(args):
    config, si, kind, pct, seed = args
    return run_cell_group(config, config.sources[si], kind, pct, seed)


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    """The full grid; cell order in the report follows the config axes."""
    started = time.monotonic()
    keys = list(_group_keys(config))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            groups = list(
                pool.map(_run_group_by_key, [(config, si, kind, pct, seed) for si, _, kind, pct, seed in keys])
            )
    else:
        groups = [run_cell_group(config, source, kind, pct, seed) for _, source, kind, pct, seed in keys]
    cells = [cell for group in groups for cell in group]
    return ExperimentReport(config, cells, elapsed_seconds=time.monotonic() - started)


CSV_HEADER = "dataset,scenario,pct,strategy,seed,auac"


def report_to_csv(report: ExperimentReport) -> str:
    """One row per successful cell, in grid order; reruns are byte-identical."""
    lines = [CSV_HEADER]
    for c in report.cells:
        if c.error is None:
            lines.append(f"{c.dataset},{c.scenario},{c.pct!r},{c.strategy},{c.seed},{c.auac!r}")
    return "\n".join(lines) + "\n"


def report_to_summary(report: ExperimentReport) -> dict:
    return {
        "aggregates": report.aggregates(),
        "failures": [
            {
                "dataset": c.dataset,
                "scenario": c.scenario,
                "pct": c.pct,
                "strategy": c.strategy,
                "seed": c.seed,
                "error": c.error,
            }
            for c in report.failures
        ],
        "cells": len(report.cells),
        "elapsed_seconds": report.elapsed_seconds,
    }


def write_report(report: ExperimentReport, out_dir) -> None:
    """report.csv + summary.json + curves.jsonl under out_dir."""
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / "report.csv").write_text(report_to_csv(report))
    (path / "summary.json").write_text(json.dumps(report_to_summary(report), indent=2) + "\n")
    with open(path / "curves.jsonl", "w") as fh:
        for c in report.cells:
            if c.error is None:
                fh.write(
                    json.dumps(
                        {
                            "dataset": c.dataset,
                            "scenario": c.scenario,
                            "pct": c.pct,
                            "strategy": c.strategy,
                            "seed": c.seed,
                            "auac": c.auac,
                            "curve": list(c.curve),
                        }
                    )
                    + "\n"
                )
