"""Command-line entry point: simulate, verify, gen-scenario, serve.

Exit codes: 0 success, 1 usage or config error, 2 partial failure
(simulate cells that errored, or verify checks that did not hold).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .datasets import parse_svmlight, split_by_source, synth_text_like
from .errors import AblearnError, InputError
from .evaluate import DataSource, ExperimentConfig, run_experiment, write_report
from .scenarios import ScenarioKind, ScenarioSpec, generate, write_bundle
from .strategies import StrategyKind
from .verification import run_verification

_TOP_KEYS = {
    "datasets", "scenarios", "pcts", "strategies", "seeds",
    "budget", "pool_size", "test_size", "learner_sigma2", "oracle_sigma2",
    "out", "jobs",
}
_DATASET_KEYS = {
    "name", "kind", "n", "dims", "separation", "redundant_classes", "seed",
    "path", "redundant_path",
}
VERIFY_FIXTURE_DIR = "verify-failures"


def config_from_json(text: str):
    """Parse a run config file into (ExperimentConfig, out_dir, jobs).

    Unknown keys anywhere are rejected so typos fail loudly instead of
    silently falling back to defaults.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"config is not valid JSON: {e}") from e
    if not isinstance(obj, dict):
        raise InputError("config must be a JSON object")
    unknown = set(obj) - _TOP_KEYS
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    for key in ("datasets", "scenarios", "pcts", "strategies", "seeds"):
        if key not in obj:
            raise InputError(f"config is missing required key {key!r}")
        if not isinstance(obj[key], list) or not obj[key]:
            raise InputError(f"config key {key!r} must be a non-empty list")
    sources = []
    for i, entry in enumerate(obj["datasets"]):
        if not isinstance(entry, dict):
            raise InputError(f"datasets[{i}] must be an object")
        unknown = set(entry) - _DATASET_KEYS
        if unknown:
            raise InputError(f"datasets[{i}] has unknown keys: {sorted(unknown)}")
        try:
            sources.append(DataSource(**entry))
        except TypeError as e:
            raise InputError(f"datasets[{i}]: {e}") from e
    try:
        kinds = tuple(ScenarioKind(k) for k in obj["scenarios"])
        strategies = tuple(StrategyKind(s) for s in obj["strategies"])
    except ValueError as e:
        raise InputError(str(e)) from e
    try:
        config = ExperimentConfig(
            sources=tuple(sources),
            kinds=kinds,
            pcts=tuple(float(p) for p in obj["pcts"]),
            strategies=strategies,
            seeds=tuple(int(s) for s in obj["seeds"]),
            budget=int(obj.get("budget", 150)),
            pool_size=int(obj.get("pool_size", 600)),
            test_size=int(obj.get("test_size", 300)),
            learner_sigma2=float(obj.get("learner_sigma2", 1.0)),
            oracle_sigma2=float(obj.get("oracle_sigma2", 0.5)),
        )
    except (ValueError, TypeError) as e:
        raise InputError(f"invalid config value: {e}") from e
    return config, obj.get("out"), obj.get("jobs")


def _check_source_files(config: ExperimentConfig) -> None:
    for source in config.sources:
        for p in (source.path, source.redundant_path):
            if p is not None and not Path(p).exists():
                raise InputError(f"dataset file not found: {p}")


def cmd_simulate(args) -> int:
    path = Path(args.config)
    if not path.exists():
        raise InputError(f"config file not found: {path}")
    config, out, jobs = config_from_json(path.read_text())
    _check_source_files(config)
    out_dir = args.out if args.out is not None else (out or "results")
    jobs = args.jobs if args.jobs is not None else int(jobs or 1)
    report = run_experiment(config, jobs=jobs)
    write_report(report, out_dir)
    done = sum(1 for c in report.cells if c.error is None)
    print(f"{done}/{len(report.cells)} cells in {report.elapsed_seconds:.1f}s -> {out_dir}")
    if report.failures:
        for c in report.failures:
            print(
                f"failed: {c.dataset}/{c.scenario}/pct={c.pct}/{c.strategy}/seed={c.seed}: {c.error}",
                file=sys.stderr,
            )
        return 2
    return 0


def cmd_verify(args) -> int:
    report = run_verification(
        instances=args.instances,
        max_pool=args.max_pool,
        max_budget=args.max_budget,
        seed=args.seed,
        out_dir=VERIFY_FIXTURE_DIR,
    )
    status = "ok" if report.ok else f"{len(report.failures)} FAILURES"
    print(
        f"{report.instances} instances ({report.bounds_instances} with policy bounds), "
        f"seed {report.seed}: {status} in {report.elapsed_seconds:.1f}s"
    )
    if report.ok:
        return 0
    for failure in report.failures:
        where = failure.get("fixture", f"instance {failure['instance']}")
        print(f"failed: {where}", file=sys.stderr)
        for detail in failure["details"]:
            print(f"  {detail}", file=sys.stderr)
    return 2


def cmd_gen_scenario(args) -> int:
    if args.data is not None:
        target = parse_svmlight(Path(args.data).read_text())
        redundant = None
        if args.redundant_data is not None:
            redundant = parse_svmlight(Path(args.redundant_data).read_text())
    else:
        target, redundant = split_by_source(
            synth_text_like(
                args.synth_n,
                args.synth_dims,
                args.synth_separation,
                args.synth_redundant,
                args.synth_seed,
            )
        )
    spec = ScenarioSpec(ScenarioKind(args.kind), args.pct, sigma2=args.sigma2, seed=args.seed)
    instance = generate(spec, target, redundant, pool_size=args.pool_size)
    write_bundle(args.out, instance)
    masked = len(instance.f_true.masked)
    print(f"{args.kind} pct={args.pct}: pool {len(instance.pool)}, {masked} masked -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    host, _, port_text = args.bind.rpartition(":")
    if not host or not port_text.isdigit():
        raise InputError(f"--bind must be addr:port, got {args.bind!r}")
    console = None
    if args.console is not None:
        console = Path(args.console)
        if not (console / "index.html").is_file():
            raise InputError(f"console dir {args.console!r} has no index.html")
    from .service import create_app

    app = create_app(args.bundle, console_dir=console)
    import uvicorn

    try:
        uvicorn.run(app, host=host, port=int(port_text), log_level="warning")
    except OSError as e:
        print(f"error: cannot bind {args.bind}: {e}", file=sys.stderr)
        return 1
    return 0


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here reserves 2 for
    partial failures, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ablearn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run an experiment grid from a JSON config")
    p.add_argument("--config", required=True, help="run config JSON file")
    p.add_argument("--out", default=None, help="output directory (overrides config)")
    p.add_argument("--jobs", type=int, default=None, help="parallel workers (overrides config)")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("verify", help="check exact-posterior theory on random small instances")
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--max-pool", type=int, default=4)
    p.add_argument("--max-budget", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("gen-scenario", help="generate a pool bundle for labeling sessions")
    p.add_argument("--kind", required=True, choices=[k.value for k in ScenarioKind])
    p.add_argument("--pct", required=True, type=float)
    p.add_argument("--out", required=True, help="bundle directory to write")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pool-size", type=int, default=None)
    p.add_argument("--sigma2", type=float, default=0.5, help="generator model variance")
    p.add_argument("--data", default=None, help="target dataset (svmlight); default: synthesize")
    p.add_argument("--redundant-data", default=None, help="redundant-task dataset (svmlight)")
    p.add_argument("--synth-n", type=int, default=600)
    p.add_argument("--synth-dims", type=int, default=30)
    p.add_argument("--synth-separation", type=float, default=1.5)
    p.add_argument("--synth-redundant", type=int, default=1)
    p.add_argument("--synth-seed", type=int, default=0)
    p.set_defaults(handler=cmd_gen_scenario)

    p = sub.add_parser("serve", help="serve the labeling session API for one bundle")
    p.add_argument("--bind", default="127.0.0.1:8000", help="addr:port to listen on")
    p.add_argument("--bundle", required=True, help="bundle directory to host")
    p.add_argument("--console", default=None,
                   help="built labeler console directory to serve at /")
    p.set_defaults(handler=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except AblearnError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: file not found: {e.filename}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
