"""Record real service exchanges for the console's replay tests.

Runs one scripted session against the live app (in process), answering
every query from the scenario's ground truth, and writes each HTTP
exchange in order to tests/fixtures/session.json.  The second step is
POSTed twice with the same Idempotency-Key so the fixture carries a real
replay response.  The equivalent headless engine trace is embedded too;
recording fails if the two traces ever disagree.

Rerun after changing the service:  python3 frontend/tools/record_fixtures.py
"""

import json
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from ablearn.core import response_of
from ablearn.datasets import split_by_source, synth_text_like
from ablearn.engine import DeterministicLabeler, run_session
from ablearn.map_models import MapBelief
from ablearn.scenarios import ScenarioKind, ScenarioSpec, generate, write_bundle
from ablearn.service import create_app
from ablearn.strategies import StrategyKind

BUNDLE = "fixture-bundle"
STRATEGY = "worst-gain"
BUDGET = 5
SEED = 11
OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "session.json"


def build_instance():
    ds = synth_text_like(60, dims=10, separation=2.0, redundant_classes=1, seed=3)
    target, redundant = split_by_source(ds)
    return generate(ScenarioSpec(ScenarioKind.UNRELATED, 0.3, seed=0), target, redundant,
                    pool_size=14)


def main() -> int:
    instance = build_instance()
    workdir = Path(tempfile.mkdtemp(prefix="fixture-"))
    write_bundle(workdir / BUNDLE, instance)
    client = TestClient(create_app(workdir / BUNDLE))

    exchanges = []

    def call(method, path, body=None, key=None):
        headers = {} if key is None else {"Idempotency-Key": key}
        r = client.request(method, path, json=body, headers=headers)
        exchanges.append({
            "method": method,
            "path": path,
            "request": body,
            "idempotency_key": key,
            "status": r.status_code,
            "body": r.json(),
        })
        return r.json()

    created = call("POST", "/sessions",
                   {"bundle": BUNDLE, "strategy": STRATEGY, "budget": BUDGET, "seed": SEED})
    sid = created["id"]

    state = call("GET", f"/sessions/{sid}")
    duplicated = False
    while state["state"] != "completed":
        q = state["query"]
        resp = response_of(instance.f_true, instance.k_true, q["x"])
        choice = {"abstain": True} if resp.is_abstain else {"label": resp.label}
        body = dict(choice, step=q["t"])
        key = f"k{q['t']}"
        first = call("POST", f"/sessions/{sid}/respond", body, key)
        if not duplicated:
            # a real replay: same key, identical body, no step consumed
            second = call("POST", f"/sessions/{sid}/respond", body, key)
            assert second == first, "replay body differs"
            duplicated = True
        state = call("GET", f"/sessions/{sid}")

    trace, _ = run_session(
        instance.pool,
        StrategyKind(STRATEGY),
        DeterministicLabeler(instance.f_true, instance.k_true),
        MapBelief.initial(instance.pool),
        BUDGET,
        SEED,
    )
    headless = [{"t": s.t, "x": s.x, "y": s.response.wire_value()} for s in trace.steps]
    assert state["trace"] == headless, "console trace diverged from headless engine"

    answers = [e["request"] for e in exchanges
               if e["method"] == "POST" and e["path"].endswith("/respond")]
    kinds = {"abstain" in a for a in answers}
    assert kinds == {True, False}, "fixture should contain both labels and abstentions"

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({
        "bundle": BUNDLE,
        "strategy": STRATEGY,
        "budget": BUDGET,
        "seed": SEED,
        "session_id": sid,
        "exchanges": exchanges,
        "headless_trace": headless,
    }, indent=2) + "\n")
    print(f"recorded {len(exchanges)} exchanges -> {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
