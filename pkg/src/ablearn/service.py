"""HTTP session API for interactive labeling against a pool bundle.

One server hosts one bundle.  Each session runs the query loop with a
human (or scripted client) as the labeler: create a session, GET the
current query, POST an answer or abstention, repeat until the budget is
spent.  Every step is persisted to disk before the response goes out, so
a killed server resumes sessions exactly where they stopped; replaying a
POST with the same Idempotency-Key returns the stored result without
advancing anything.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .core import ABSTAIN, Response
from .engine import (
    SessionState,
    predict,
    session_from_json,
    session_to_json,
    start_session,
    step,
)
from .errors import InputError
from .map_models import MapBelief, model_from_checkpoint, model_to_checkpoint
from .scenarios import ScenarioInstance, read_bundle
from .strategies import StrategyKind

SESSION_DIR = "sessions"

_CONFIG_KEYS = {
    "bundle",
    "strategy",
    "budget",
    "seed",
    "label_sigma2",
    "abst_sigma2",
    "label_prior",
    "abst_prior",
    "fixed_model",
    "record_scores",
}


def _error(status: int, code: str, message: str, **extra) -> JSONResponse:
    return JSONResponse({"code": code, "message": message, **extra}, status_code=status)


@dataclass
class SessionRecord:
    """In-memory handle: engine state plus the idempotency replay cache."""

    state: SessionState
    replays: dict[str, dict] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    """Sessions for one bundle, mirrored to one JSON file per session."""

    def __init__(self, instance: ScenarioInstance, directory: Path):
        self.instance = instance
        self.directory = directory
        self.directory.mkdir(parents=True, exist_ok=True)
        self._records: dict[str, SessionRecord] = {}
        self._registry_lock = threading.Lock()

    def _path(self, sid: str) -> Path:
        return self.directory / f"{sid}.json"

    def create(self, state: SessionState) -> str:
        sid = uuid.uuid4().hex
        record = SessionRecord(state)
        with self._registry_lock:
            self._records[sid] = record
        self.persist(sid, record)
        return sid

    def get(self, sid: str) -> SessionRecord | None:
        with self._registry_lock:
            record = self._records.get(sid)
            if record is not None:
                return record
            path = self._path(sid)
            if not (sid and sid.isalnum() and path.exists()):
                return None
            obj = json.loads(path.read_text())
            record = SessionRecord(
                session_from_json(json.dumps(obj["session"]), self.instance.pool),
                replays=obj.get("replays", {}),
            )
            self._records[sid] = record
            return record

    def persist(self, sid: str, record: SessionRecord) -> None:
        payload = {
            "session": json.loads(session_to_json(record.state)),
            "replays": record.replays,
        }
        tmp = self._path(sid).with_suffix(".tmp")
        tmp.write_text(json.dumps(payload))
        tmp.replace(self._path(sid))


def _build_belief(store: SessionStore, body: dict) -> MapBelief:
    pool = store.instance.pool
    d = pool.dimension

    def prior_of(obj):
        return None if obj is None else model_from_checkpoint(obj, d)

    return MapBelief.initial(
        pool,
        sigma2_label=float(body.get("label_sigma2", 1.0)),
        sigma2_abst=float(body.get("abst_sigma2", 1.0)),
        label_prior=prior_of(body.get("label_prior")),
        abst_prior=prior_of(body.get("abst_prior")),
    )


def _query_payload(store: SessionStore, state: SessionState) -> dict | None:
    if state.outstanding is None:
        return None
    x = state.outstanding
    example = store.instance.pool[x]
    display = store.instance.manifest.get("display", {})
    return {
        "t": len(state.steps) + 1,
        "x": x,
        "features": [[i, v] for i, v in example.features],
        "display": display.get(str(x)) if isinstance(display, dict) else None,
        "scores": [[x_, s] for x_, s in state.outstanding_scores],
    }


def _checkpoint_links(sid: str) -> dict:
    return {"h": f"/sessions/{sid}/checkpoints/h", "r": f"/sessions/{sid}/checkpoints/r"}


def _state_payload(store: SessionStore, sid: str, state: SessionState) -> dict:
    unqueried = state.unqueried()
    return {
        "id": sid,
        "state": "completed" if state.complete else "awaiting_response",
        "strategy": state.strategy.value,
        "alphabet": store.instance.pool.alphabet.size,
        "budget": state.budget,
        "step": len(state.steps),
        "remaining": state.remaining,
        "trace": [
            {"t": s.t, "x": s.x, "y": s.response.wire_value()} for s in state.steps
        ],
        "query": _query_payload(store, state),
        "unqueried": [
            {
                "x": x,
                "label_dist": [float(p) for p in predict(state.belief, x)],
                "abstention": float(state.belief.abstention(x)),
            }
            for x in unqueried
        ],
        "checkpoints": _checkpoint_links(sid),
    }


def _respond_result(store: SessionStore, sid: str, state: SessionState) -> dict:
    done = state.complete
    out = {
        "id": sid,
        "step": len(state.steps),
        "remaining": state.remaining,
        "completed": done,
        "query": _query_payload(store, state),
    }
    if done:
        out["summary"] = {
            "trace_length": len(state.steps),
            "truncated": state.truncated,
            "checkpoints": _checkpoint_links(sid),
        }
    return out


def create_app(bundle_dir, sessions_dir=None, console_dir=None) -> FastAPI:
    """App bound to one bundle; sessions persist under sessions_dir.

    console_dir, if given, is a directory of static files (the labeler
    console build) served at / alongside the API.
    """
    bundle_path = Path(bundle_dir)
    instance = read_bundle(bundle_path)
    store = SessionStore(
        instance,
        Path(sessions_dir) if sessions_dir is not None else bundle_path / SESSION_DIR,
    )
    app = FastAPI(title="ablearn session service")
    app.state.store = store
    bundle_name = bundle_path.name

    @app.post("/sessions")
    async def create_session(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "invalid_config", "request body is not JSON")
        if not isinstance(body, dict):
            return _error(400, "invalid_config", "request body must be a JSON object")
        unknown = set(body) - _CONFIG_KEYS
        if unknown:
            return _error(400, "invalid_config", f"unknown config keys: {sorted(unknown)}")
        wanted = body.get("bundle")
        if wanted is not None and wanted != bundle_name:
            return _error(404, "unknown_bundle", f"this server hosts {bundle_name!r}, not {wanted!r}")
        try:
            strategy = StrategyKind(body.get("strategy", "avg-gain"))
            budget = int(body.get("budget", 0))
            seed = int(body.get("seed", 0))
            belief = _build_belief(store, body)
            fixed = body.get("fixed_model")
            fixed_model = (
                None if fixed is None else model_from_checkpoint(fixed, store.instance.pool.dimension)
            )
            state = start_session(
                store.instance.pool,
                strategy,
                belief,
                budget,
                seed,
                fixed_model=fixed_model,
                record_scores=bool(body.get("record_scores", False)),
            )
        except (InputError, ValueError, TypeError, KeyError) as e:
            return _error(400, "invalid_config", str(e))
        sid = store.create(state)
        return JSONResponse(
            {"id": sid, "state": "awaiting_response", "query": _query_payload(store, state)},
            status_code=201,
        )

    @app.get("/sessions/{sid}")
    async def get_state(sid: str):
        record = store.get(sid)
        if record is None:
            return _error(404, "unknown_session", f"no session {sid!r}")
        with record.lock:
            return JSONResponse(_state_payload(store, sid, record.state))

    @app.get("/sessions/{sid}/query")
    async def get_query(sid: str):
        record = store.get(sid)
        if record is None:
            return _error(404, "unknown_session", f"no session {sid!r}")
        with record.lock:
            state = record.state
            return JSONResponse(
                {"completed": state.complete, "query": _query_payload(store, state)}
            )

    @app.post("/sessions/{sid}/respond")
    async def respond(sid: str, request: Request):
        record = store.get(sid)
        if record is None:
            return _error(404, "unknown_session", f"no session {sid!r}")
        try:
            body = await request.json()
        except Exception:
            return _error(422, "malformed_body", "request body is not JSON")
        if not isinstance(body, dict):
            return _error(422, "malformed_body", "request body must be a JSON object")
        has_label = "label" in body
        has_abstain = bool(body.get("abstain", False))
        if has_label == has_abstain:
            return _error(422, "malformed_body", "send exactly one of label or abstain")
        key = request.headers.get("Idempotency-Key")
        with record.lock:
            state = record.state
            if key is not None and key in record.replays:
                stored = record.replays[key]
                return JSONResponse(stored["body"], status_code=stored["status"])
            if state.outstanding is None:
                return _error(
                    409, "out_of_order", "session is complete; no query outstanding",
                    step=len(state.steps),
                )
            expected_t = len(state.steps) + 1
            if "step" in body and int(body["step"]) != expected_t:
                return _error(
                    409, "out_of_order",
                    f"response targets step {body['step']}, current step is {expected_t}",
                    step=expected_t,
                )
            if has_label:
                label = body["label"]
                if not isinstance(label, int) or label not in store.instance.pool.alphabet:
                    return _error(
                        422, "invalid_label",
                        f"label must be an integer in 1..{store.instance.pool.alphabet.size}",
                    )
                resp = Response(label)
            else:
                resp = ABSTAIN
            record.state = step(state, resp)
            result = _respond_result(store, sid, record.state)
            if key is not None:
                record.replays[key] = {"status": 200, "body": result}
            store.persist(sid, record)
            return JSONResponse(result)

    @app.get("/sessions/{sid}/predictions")
    async def predictions(sid: str):
        record = store.get(sid)
        if record is None:
            return _error(404, "unknown_session", f"no session {sid!r}")
        with record.lock:
            state = record.state
            queried = set(state.queried)
            rows = []
            for x in store.instance.pool.ids:
                rows.append(
                    {
                        "x": x,
                        "queried": x in queried,
                        "label_dist": [float(p) for p in predict(state.belief, x)],
                        "abstention": float(state.belief.abstention(x)),
                    }
                )
            return JSONResponse({"id": sid, "step": len(state.steps), "predictions": rows})

    @app.get("/sessions/{sid}/checkpoints/{which}")
    async def checkpoints(sid: str, which: str):
        record = store.get(sid)
        if record is None:
            return _error(404, "unknown_session", f"no session {sid!r}")
        if which not in ("h", "r"):
            return _error(404, "unknown_checkpoint", "checkpoint name must be h or r")
        with record.lock:
            belief = record.state.belief
            model = belief.label_model if which == "h" else belief.abst_model
            return JSONResponse(model_to_checkpoint(model))

    if console_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(console_dir), html=True), name="console")

    return app
