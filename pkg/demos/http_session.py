"""Drive one labeling session over the HTTP API, in process.

Generates a small scenario bundle, mounts the service on it with a test
client (no network), and answers each query from the scenario's ground
truth.  Along the way it retries one respond call with the same
Idempotency-Key to show the replay: same body back, step counter
unchanged.

Run from the repository root:  python3 demos/http_session.py
"""

import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from ablearn.datasets import split_by_source, synth_text_like
from ablearn.scenarios import ScenarioKind, ScenarioSpec, generate, write_bundle
from ablearn.service import create_app

workdir = Path(tempfile.mkdtemp(prefix="ablearn-demo-"))
bundle_dir = workdir / "demo-bundle"

target, redundant = split_by_source(synth_text_like(80, dims=12, separation=2.0,
                                                    redundant_classes=1, seed=5))
instance = generate(ScenarioSpec(ScenarioKind.UNRELATED, pct=0.4, seed=5),
                    target, redundant, pool_size=20)
write_bundle(bundle_dir, instance)
print(f"bundle: {bundle_dir}  pool {len(instance.pool.examples)}, "
      f"{len(instance.f_true.masked)} off-task rows\n")

client = TestClient(create_app(bundle_dir))

created = client.post("/sessions", json={
    "bundle": "demo-bundle",
    "strategy": "worst-gain",
    "budget": 5,
    "seed": 11,
})
assert created.status_code == 201, created.text
sid = created.json()["id"]
query = created.json()["query"]
print(f"session {sid}: budget 5, strategy worst-gain")

replay_shown = False
while query is not None:
    t, x = query["t"], query["x"]
    if instance.k_true[x]:
        body = {"step": t, "abstain": True}
        answer = "abstain"
    else:
        body = {"step": t, "label": instance.f_true[x]}
        answer = f"label {instance.f_true[x]}"
    key = f"demo-{sid}-{t}"
    r = client.post(f"/sessions/{sid}/respond", json=body,
                    headers={"Idempotency-Key": key})
    assert r.status_code == 200, r.text
    first = r.json()
    print(f"  t={t}: queried x{x}, sent {answer}; remaining {first['remaining']}")

    if not replay_shown:
        again = client.post(f"/sessions/{sid}/respond", json=body,
                            headers={"Idempotency-Key": key})
        same = again.status_code == 200 and again.json() == first
        print(f"    retried with the same Idempotency-Key: "
              f"{'identical body, no extra step taken' if same else 'MISMATCH'}")
        replay_shown = True

    query = first["query"]

state = client.get(f"/sessions/{sid}").json()
print(f"\nfinal state: {state['state']}, trace {[(s['t'], s['x'], s['y']) for s in state['trace']]}")

preds = client.get(f"/sessions/{sid}/predictions").json()
risky = sorted(preds["predictions"], key=lambda e: -e["abstention"])[:3]
print("highest predicted abstention:")
for e in risky:
    print(f"  x{e['x']}: abstention {e['abstention']:.3f}  label dist "
          f"{[round(p, 3) for p in e['label_dist']]}")

ckpt = client.get(f"/sessions/{sid}/checkpoints/r").json()
print(f"\nabstention checkpoint: {len(ckpt['weights'])} nonzero weights, "
      f"bias {ckpt['bias']:.4f}, sigma2 {ckpt['sigma2']}")
print("a new session could pass this object as abst_prior to start warm.")
