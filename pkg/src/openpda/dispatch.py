"""Command serialization and HTTP delivery to third-party apps.

A resolved intent becomes one flat JSON object: AppName, Intent, then the
parameter surfaces under their declared names. The object is POSTed to
the app's /command endpoint and the response body is returned verbatim
for display. Failures are values, never exceptions, so a dead app can
only ever cost the user one error message.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass

import httpx

DEFAULT_TIMEOUT = 5.0
COMMAND_PATH = "/command"


@dataclass(frozen=True)
class CommandMessage:
    app_name: str
    intent: str
    params: tuple[tuple[str, str], ...] = ()  # (name, surface) in declared order

    def as_dict(self) -> dict:
        out = {"AppName": self.app_name, "Intent": self.intent}
        for name, surface in self.params:
            out[name] = surface
        return out


@dataclass(frozen=True)
class DispatchResult:
    status: str  # "ok" | "app_error" | "unreachable"
    text: str
    code: int | None = None
    latency: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def encode(command: CommandMessage) -> bytes:
    """Serialize to the wire form: one flat JSON object, UTF-8."""
    return json.dumps(command.as_dict(), ensure_ascii=False).encode("utf-8")


def send(command: CommandMessage, url: str, timeout: float = DEFAULT_TIMEOUT) -> DispatchResult:
    """POST the command to the app and wrap whatever happens in a result."""
    target = url.rstrip("/") + COMMAND_PATH
    body = encode(command)
    start = time.monotonic()
    try:
        response = httpx.post(
            target,
            content=body,
            headers={"content-type": "application/json"},
            timeout=timeout,
        )
    except httpx.HTTPError as exc:
        return DispatchResult(
            status="unreachable",
            text=f"{type(exc).__name__}: {exc}",
            latency=time.monotonic() - start,
        )
    latency = time.monotonic() - start
    if 200 <= response.status_code < 300:
        return DispatchResult(status="ok", text=response.text,
                              code=response.status_code, latency=latency)
    return DispatchResult(status="app_error", text=response.text,
                          code=response.status_code, latency=latency)
