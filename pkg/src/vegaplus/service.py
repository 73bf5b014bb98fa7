"""HTTP front door: dataset ingestion, session lifecycle, interactions,
plan overrides, timing history, and cache metrics.

Sessions are in-memory with a TTL. Requests to one session serialize on its
lock (FIFO); different sessions run concurrently. Prefetch work happens in
FastAPI background tasks, which only run after the response is sent, i.e.
while the session is otherwise idle; a new request preempts the queue.
"""
from __future__ import annotations

import threading
import time

from fastapi import BackgroundTasks, FastAPI, File, Form, Query, Request, UploadFile
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from . import schemas
from .config import Config, load_config
from .drivers import DbDriver, SimulatedNetwork
from .errors import (
    DriverError,
    OverrideRejected,
    SignalDomainError,
    SpecError,
    UnknownDatasetError,
    UnknownSessionError,
    UnknownSignalError,
    VegaPlusError,
)
from .session import Session
from .stats import NetworkProfile

_STATUS_BY_CODE = {
    "spec_invalid": 422,
    "spec_cycle": 422,
    "expr_syntax": 422,
    "expr_type": 422,
    "signal_domain": 422,
    "unknown_signal": 422,
    "unknown_dataset": 409,
    "override_rejected": 409,
    "unknown_session": 404,
    "driver_error": 500,
    "eval_error": 500,
    "unsupported_on_dialect": 409,
    "internal_error": 500,
}


class SpecRequest(BaseModel):
    spec: dict | str
    bindings: dict[str, str] | None = None
    network: dict | None = None  # {latency_ms, bandwidth_mbps}


class SignalRequest(BaseModel):
    name: str
    value: float | bool | str | None


class PartitionRequest(BaseModel):
    node_id: int
    side: str


class ServiceState:
    def __init__(self, driver: DbDriver, config: Config):
        self.driver = driver
        self.config = config
        self.sessions: dict[str, Session] = {}
        self.lock = threading.Lock()

    def reap(self):
        ttl = self.config.server.session_ttl_s
        now = time.monotonic()
        with self.lock:
            dead = [sid for sid, s in self.sessions.items() if now - s.last_used > ttl]
            for sid in dead:
                del self.sessions[sid]

    def get_session(self, sid: str) -> Session:
        self.reap()
        with self.lock:
            if sid not in self.sessions:
                raise UnknownSessionError(f"unknown session {sid!r}")
            s = self.sessions[sid]
        s.touch()
        return s


def _error_response(exc: VegaPlusError) -> JSONResponse:
    status = _STATUS_BY_CODE.get(exc.code, 500)
    body = {"status": status, "code": exc.code, "message": str(exc)}
    if isinstance(exc, SpecError):
        body["path"] = exc.path
    return JSONResponse(status_code=status, content=body)


def _sinks_json(sinks: dict) -> dict:
    return {name: t.to_records() for name, t in sinks.items() if t is not None}


def create_app(driver: DbDriver, config: Config | None = None) -> FastAPI:
    config = config or load_config()
    app = FastAPI(title="vegaplus", version="0.1.0")
    state = ServiceState(driver, config)
    app.state.engine = state

    if config.server.cors_origins:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=config.server.cors_origins,
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(VegaPlusError)
    async def handle_engine_error(_request: Request, exc: VegaPlusError):
        return _error_response(exc)

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.get("/api/schemas")
    def get_schemas():
        return schemas.ALL_SCHEMAS

    @app.get("/api/metrics")
    def metrics():
        state.reap()
        with state.lock:
            sessions = list(state.sessions.values())
        totals = {"hits": 0, "misses": 0, "evictions": 0, "bytes": 0, "entries": 0}
        for s in sessions:
            m = s.cache.metrics()
            totals["hits"] += m.hits
            totals["misses"] += m.misses
            totals["evictions"] += m.evictions
            totals["bytes"] += m.bytes
            totals["entries"] += m.entries
        totals["sessions"] = len(sessions)
        return totals

    @app.post("/api/datasets")
    async def upload_dataset(name: str = Form(...), file: UploadFile = File(...)):
        raw = await file.read()
        if len(raw) > config.server.max_upload_bytes:
            return JSONResponse(
                status_code=413,
                content={"status": 413, "code": "too_large", "message": "upload exceeds the configured size cap"},
            )
        try:
            text = raw.decode("utf-8-sig")
            rows = state.driver.ingest(name, text)
        except (ValueError, DriverError) as exc:
            return JSONResponse(
                status_code=400,
                content={"status": 400, "code": "malformed_csv", "message": str(exc)},
            )
        schema = state.driver.table_schema(name)
        return {"name": name, "rows": rows, "schema": [{"field": f, "type": t} for f, t in schema]}

    @app.get("/api/datasets/{name}")
    def dataset_info(name: str):
        schema = state.driver.table_schema(name)
        st = state.driver.table_stats(name)
        return {"name": name, "rows": st.row_count, "schema": [{"field": f, "type": t} for f, t in schema]}

    @app.post("/api/specs")
    def create_session(body: SpecRequest, background: BackgroundTasks, compare: str | None = Query(default=None)):
        state.reap()
        net = None
        sim_driver = state.driver
        if body.network:
            net = NetworkProfile.from_mbps(
                float(body.network.get("latency_ms", 0.0)),
                float(body.network.get("bandwidth_mbps", 0.0)) or None,
            )
            if not net.is_zero:
                sim_driver = SimulatedNetwork(state.driver, net)
        elif config.network.latency_ms or config.network.bandwidth_mbps:
            net = config.network.profile()
            sim_driver = SimulatedNetwork(state.driver, net)
        spec_text = body.spec if isinstance(body.spec, str) else __import__("json").dumps(body.spec)
        session = Session(
            spec_text,
            sim_driver,
            config=config,
            net=net,
            bindings=body.bindings,
            compare_baseline=compare == "baseline",
        )
        with state.lock:
            state.sessions[session.id] = session
        background.add_task(session.prefetch_now)
        return {
            "session_id": session.id,
            "plan": session.plan_json(),
            "candidates": session.candidates_json(),
            "sinks": _sinks_json(session.sink_tables()),
            "timings": [t.to_json() for t in session.timings],
        }

    @app.post("/api/sessions/{sid}/signals")
    def post_signal(sid: str, body: SignalRequest, background: BackgroundTasks):
        session = state.get_session(sid)
        with session.lock:
            sinks, timing, label = session.handle_interaction(body.name, body.value)
        background.add_task(session.prefetch_now)
        return {
            "changed": sorted(k for k, v in sinks.items() if v is not None),
            "sinks": _sinks_json(sinks),
            "timing": timing.to_json(),
            "plan_label": label,
        }

    @app.post("/api/sessions/{sid}/partition")
    def post_partition(sid: str, body: PartitionRequest):
        session = state.get_session(sid)
        with session.lock:
            _sinks, timing = session.set_override(body.node_id, body.side)
            plan = session.plan_json()
        return {"plan": plan, "timing": timing.to_json()}

    @app.get("/api/sessions/{sid}/plan")
    def get_plan(sid: str):
        session = state.get_session(sid)
        with session.lock:
            return {
                "plan": session.plan_json(),
                "baseline": session.plan_json(session.baseline),
                "candidates": session.candidates_json(),
            }

    @app.get("/api/sessions/{sid}/timings")
    def get_timings(sid: str):
        session = state.get_session(sid)
        with session.lock:
            return {"timings": [t.to_json() for t in session.timings]}

    @app.get("/api/sessions/{sid}/datasets/{name}")
    def get_dataset(sid: str, name: str, limit: int | None = Query(default=None)):
        session = state.get_session(sid)
        with session.lock:
            table = session.dataset_table(name)
            if limit is not None:
                table = table.head(limit)
            return PlainTextResponse(table.to_ndjson(), media_type="application/x-ndjson")

    return app


__all__ = ["create_app", "ServiceState"]
