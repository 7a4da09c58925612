"""The assistant's HTTP service.

Wraps the dialog engine behind a small JSON API: chat, app registration,
a proxy onto the home agent, an aggregate health check and a server-sent
event stream for the console. The web console is served as static files
when a build directory is present.
"""
from __future__ import annotations

import json
import logging
import queue as queue_mod
import socket
from contextlib import asynccontextmanager
from dataclasses import dataclass
from pathlib import Path

import httpx
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, ValidationError
from starlette.concurrency import run_in_threadpool

from ..bus.client import BusClient
from ..dialog import DialogEngine, EngineConfig, Reply
from ..embeddings import load_embeddings, toy_store
from ..errors import (
    DuplicateIntent,
    EmptyInput,
    NameConflict,
    NotFound,
    OversizeInput,
    SchemaViolation,
    TwoParamsSameType,
    UnreachableIntent,
)
from ..registry import Registry, parse_descriptor, serialize_descriptor
from .events import EventHub

log = logging.getLogger(__name__)

PROXY_TIMEOUT = 5.0
HEALTH_TIMEOUT = 1.0


@dataclass
class ServiceConfig:
    apps_dir: str = "./apps"
    embeddings_path: str | None = None  # None -> packaged toy fixture
    threshold: float = 1.0
    drop_stopwords: bool = True
    max_reasks: int = 2
    agent_url: str | None = "http://127.0.0.1:7878"
    bus_host: str | None = None
    bus_port: int = 1883
    transcript_path: str | None = None
    static_dir: str | None = None
    reference_time: object = None  # datetime pin for reproducible runs


class ChatRequest(BaseModel):
    session_id: str
    text: str


class ChatResponse(BaseModel):
    reply_kind: str
    reply_text: str
    dispatched_command: dict | None = None


class AppState:
    """Everything the handlers share; owned by the FastAPI app."""

    def __init__(self, cfg: ServiceConfig):
        self.cfg = cfg
        self.hub = EventHub()
        self.registry = Registry(cfg.apps_dir)
        store = load_embeddings(cfg.embeddings_path) if cfg.embeddings_path else toy_store()
        self.engine = DialogEngine(
            registry=self.registry,
            store=store,
            config=EngineConfig(
                threshold=cfg.threshold,
                drop_stopwords=cfg.drop_stopwords,
                max_reasks=cfg.max_reasks,
                reference_time=cfg.reference_time,
            ),
            transcript_path=cfg.transcript_path,
            event_sink=self.hub.publish,
        )
        self._bus_observer: BusClient | None = None

    def start_bus_observer(self):
        if self.cfg.bus_host is None:
            return
        try:
            client = BusClient("dpa-console", self.cfg.bus_host, self.cfg.bus_port,
                               on_message=self._on_bus_event)
            client.connect()
            client.subscribe("home/#")
            self._bus_observer = client
        except Exception as exc:
            log.warning("console event feed unavailable, bus unreachable: %s", exc)

    def stop_bus_observer(self):
        if self._bus_observer is not None:
            self._bus_observer.close()
            self._bus_observer = None

    def _on_bus_event(self, frame):
        try:
            payload = json.loads(frame.payload)
        except (json.JSONDecodeError, TypeError):
            return
        if frame.topic == "home/sensorData":
            self.hub.publish({"type": "reading", **payload})
        elif frame.topic == "home/commands":
            self.hub.publish({"type": "actuator", **payload})

    def broker_reachable(self) -> bool:
        if self.cfg.bus_host is None:
            return False
        try:
            with socket.create_connection((self.cfg.bus_host, self.cfg.bus_port), timeout=HEALTH_TIMEOUT):
                return True
        except OSError:
            return False

    def agent_reachable(self) -> bool:
        if not self.cfg.agent_url:
            return False
        try:
            r = httpx.get(self.cfg.agent_url.rstrip("/") + "/healthz",
                          timeout=HEALTH_TIMEOUT)
            return r.status_code == 200
        except httpx.HTTPError:
            return False


def create_app(cfg: ServiceConfig | None = None) -> FastAPI:
    state = AppState(cfg or ServiceConfig())

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        state.start_bus_observer()
        yield
        state.stop_bus_observer()

    app = FastAPI(title="openpda", docs_url=None, redoc_url=None, lifespan=lifespan)
    app.state.dpa = state

    @app.exception_handler(Exception)
    async def _internal_error(request: Request, exc: Exception):
        log.exception("unhandled error on %s", request.url.path)
        return PlainTextResponse("internal error", status_code=500)

    # chat

    @app.post("/api/chat")
    async def chat(request: Request):
        try:
            body = json.loads(await request.body())
            req = ChatRequest.model_validate(body)
        except (json.JSONDecodeError, ValidationError) as exc:
            return PlainTextResponse(f"bad chat request: {exc}", status_code=400)
        if not req.text.strip():
            return PlainTextResponse("text must not be empty", status_code=400)
        if not req.session_id:
            return PlainTextResponse("session_id must not be empty", status_code=400)
        try:
            reply: Reply = await run_in_threadpool(
                state.engine.handle_message, req.session_id, req.text)
        except (EmptyInput, OversizeInput) as exc:
            return PlainTextResponse(str(exc), status_code=400)
        dispatched = json.loads(reply.command_bytes) if reply.command_bytes else None
        return JSONResponse(ChatResponse(
            reply_kind=reply.kind,
            reply_text=reply.text,
            dispatched_command=dispatched,
        ).model_dump())

    # app registry

    @app.post("/api/apps", status_code=201)
    async def register_app(request: Request):
        raw = await request.body()
        try:
            descriptor = parse_descriptor(raw)
        except (SchemaViolation, UnreachableIntent, DuplicateIntent, TwoParamsSameType) as exc:
            return PlainTextResponse(str(exc), status_code=422)
        try:
            state.registry.register(descriptor)
        except NameConflict as exc:
            return PlainTextResponse(str(exc), status_code=409)
        return JSONResponse(json.loads(serialize_descriptor(descriptor)), status_code=201)

    @app.get("/api/apps")
    async def list_apps():
        return JSONResponse([
            json.loads(serialize_descriptor(a)) for a in state.registry.list()
        ])

    @app.delete("/api/apps/{name}", status_code=204)
    async def remove_app(name: str):
        try:
            state.registry.remove(name)
        except NotFound as exc:
            return PlainTextResponse(str(exc), status_code=404)
        return Response(status_code=204)

    # home agent proxy

    async def _proxy(method: str, path: str, content: bytes | None = None):
        if not state.cfg.agent_url:
            return PlainTextResponse("no home agent configured", status_code=502)
        url = state.cfg.agent_url.rstrip("/") + path
        try:
            r = await run_in_threadpool(
                httpx.request, method, url, content=content, timeout=PROXY_TIMEOUT)
        except httpx.HTTPError as exc:
            return PlainTextResponse(f"home agent unreachable: {exc}", status_code=502)
        return Response(content=r.content, status_code=r.status_code,
                        media_type=r.headers.get("content-type"))

    @app.get("/api/home/state")
    async def home_state():
        return await _proxy("GET", "/state")

    @app.post("/api/home/actuators/{relay_id}")
    async def home_actuator(relay_id: str, request: Request):
        return await _proxy("POST", f"/actuators/{relay_id}", await request.body())

    # health and events

    @app.get("/api/healthz")
    async def healthz():
        agent_ok = await run_in_threadpool(state.agent_reachable)
        broker_ok = await run_in_threadpool(state.broker_reachable)
        return JSONResponse({"dpa": True, "agent": agent_ok, "broker": broker_ok})

    @app.get("/api/events")
    def events():
        q = state.hub.subscribe()

        def stream():
            try:
                yield ": connected\n\n"
                while True:
                    try:
                        event = q.get(timeout=15.0)
                    except queue_mod.Empty:
                        yield ": keep-alive\n\n"
                        continue
                    yield f"data: {json.dumps(event, ensure_ascii=False)}\n\n"
            finally:
                state.hub.unsubscribe(q)

        return StreamingResponse(stream(), media_type="text/event-stream",
                                 headers={"cache-control": "no-cache"})

    static_dir = cfg.static_dir if cfg else None
    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app
