"""Run a FastAPI app under uvicorn in a background thread.

Used by the demo subcommand and the end-to-end tests, where several
services share one process.
"""
from __future__ import annotations

import threading
import time

import uvicorn
from fastapi import FastAPI


class UvicornThread:
    def __init__(self, app: FastAPI, host: str = "127.0.0.1", port: int = 0):
        config = uvicorn.Config(app, host=host, port=port, log_level="warning",
                                access_log=False)
        self.server = uvicorn.Server(config)
        self._thread = threading.Thread(target=self.server.run, daemon=True,
                                        name="uvicorn")

    def start(self, timeout: float = 10.0) -> "UvicornThread":
        self._thread.start()
        deadline = time.monotonic() + timeout
        while not self.server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("server did not start in time")
            if not self._thread.is_alive():
                raise RuntimeError("server thread died during startup")
            time.sleep(0.01)
        return self

    @property
    def port(self) -> int:
        return self.server.servers[0].sockets[0].getsockname()[1]

    @property
    def url(self) -> str:
        host = self.server.config.host
        return f"http://{host}:{self.port}"

    @property
    def alive(self) -> bool:
        return self._thread.is_alive()

    def stop(self):
        self.server.should_exit = True
        self._thread.join(timeout=5)
