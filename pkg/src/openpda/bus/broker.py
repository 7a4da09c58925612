"""Topic broker with at-least-once delivery.

Publishers get an immediate acknowledgment when the broker accepts a
message; delivery to each matching subscriber is tracked separately and
retried on a fixed interval until that subscriber acknowledges. Per
subscriber, messages go out strictly in arrival order: the next message
is not attempted until the previous one is acknowledged, so first
deliveries are observed in publish order even across retries.

Nothing is persisted: pending deliveries die with the connection and
subscriptions die with the session.
"""
from __future__ import annotations

import asyncio
import itertools
import logging
import threading
import time
from collections import deque
from dataclasses import dataclass

from ..errors import BindFailure
from .frames import (
    MAX_FRAME_BYTES,
    Frame,
    FrameError,
    decode_frame,
    encode_frame,
    filter_matches,
    validate_filter,
)

log = logging.getLogger(__name__)


@dataclass
class PendingDelivery:
    msg_id: int
    frame: Frame
    attempts: int
    deadline: float


class _Conn:
    def __init__(self, client_id: str, writer: asyncio.StreamWriter):
        self.client_id = client_id
        self.writer = writer
        self.filters: list[str] = []
        self.queue: deque[tuple[int, Frame]] = deque()
        self.inflight: PendingDelivery | None = None
        self.write_lock = asyncio.Lock()
        self.closed = False


class Broker:
    def __init__(self, host: str = "127.0.0.1", port: int = 1883,
                 retry_interval: float = 1.0):
        self.host = host
        self.port = port
        self.retry_interval = retry_interval
        self._server: asyncio.AbstractServer | None = None
        self._conns: dict[str, _Conn] = {}
        self._msg_ids = itertools.count(1)
        self._retry_task: asyncio.Task | None = None
        self._loop: asyncio.AbstractEventLoop | None = None
        # observability for tests and logs
        self.accepted_publishes = 0
        self.delivery_attempts = 0

    async def start(self) -> None:
        self._loop = asyncio.get_running_loop()
        try:
            self._server = await asyncio.start_server(
                self._handle_conn, self.host, self.port, limit=MAX_FRAME_BYTES
            )
        except OSError as exc:
            raise BindFailure(f"cannot bind {self.host}:{self.port}: {exc}") from None
        self.port = self._server.sockets[0].getsockname()[1]
        self._retry_task = asyncio.create_task(self._retry_loop())
        log.info("broker listening on %s:%d", self.host, self.port)

    async def stop(self) -> None:
        if self._retry_task:
            self._retry_task.cancel()
            try:
                await self._retry_task
            except asyncio.CancelledError:
                pass
        if self._server:
            self._server.close()
            await self._server.wait_closed()
        for conn in list(self._conns.values()):
            conn.writer.close()
        self._conns.clear()

    async def serve_forever(self) -> None:
        await self.start()
        async with self._server:
            await self._server.serve_forever()

    # connection handling

    async def _handle_conn(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        conn: _Conn | None = None
        try:
            first = await reader.readline()
            if not first:
                writer.close()
                return
            try:
                frame = decode_frame(first)
            except FrameError as exc:
                log.warning("rejecting connection: %s", exc)
                writer.close()
                return
            if frame.op != "CONNECT" or not frame.client:
                log.warning("first frame must be CONNECT with a client id")
                writer.close()
                return
            old = self._conns.get(frame.client)
            if old is not None:
                old.closed = True
                old.writer.close()
            conn = _Conn(frame.client, writer)
            self._conns[frame.client] = conn
            await self._send(conn, Frame(op="CONNACK", client=frame.client, payload="ok"))

            while True:
                line = await reader.readline()
                if not line:
                    break
                try:
                    frame = decode_frame(line)
                except FrameError as exc:
                    log.warning("dropping bad frame from %s: %s", conn.client_id, exc)
                    continue
                await self._dispatch(conn, frame)
        except (ConnectionResetError, asyncio.IncompleteReadError,
                asyncio.LimitOverrunError, ValueError):
            pass  # oversize or torn frames drop the connection
        finally:
            if conn is not None and self._conns.get(conn.client_id) is conn:
                del self._conns[conn.client_id]
                conn.closed = True
            writer.close()

    async def _dispatch(self, conn: _Conn, frame: Frame):
        if frame.op == "PING":
            await self._send(conn, Frame(op="PONG", client=conn.client_id, id=frame.id))
        elif frame.op == "SUBSCRIBE":
            try:
                validate_filter(frame.topic)
            except Exception as exc:
                await self._send(conn, Frame(op="SUBACK", client=conn.client_id,
                                             topic=frame.topic, payload=f"error: {exc}"))
                return
            if frame.topic not in conn.filters:
                conn.filters.append(frame.topic)
            await self._send(conn, Frame(op="SUBACK", client=conn.client_id,
                                         topic=frame.topic, payload="ok"))
        elif frame.op == "PUBLISH":
            await self._accept_publish(conn, frame)
        elif frame.op == "PUBACK":
            self._handle_ack(conn, frame)
            await self._pump(conn)
        elif frame.op == "CONNECT":
            log.warning("%s sent CONNECT twice, ignoring", conn.client_id)
        else:
            log.warning("unexpected %s from %s", frame.op, conn.client_id)

    async def _accept_publish(self, publisher: _Conn, frame: Frame):
        msg_id = next(self._msg_ids)
        self.accepted_publishes += 1
        # acknowledge acceptance right away; fan-out is the broker's problem
        await self._send(publisher, Frame(op="PUBACK", client=publisher.client_id,
                                          topic=frame.topic, id=frame.id,
                                          payload=str(msg_id)))
        out = Frame(op="PUBLISH", client=publisher.client_id, topic=frame.topic,
                    id=msg_id, payload=frame.payload)
        for conn in list(self._conns.values()):
            if conn.closed:
                continue
            if any(filter_matches(f, frame.topic) for f in conn.filters):
                conn.queue.append((msg_id, out))
                await self._pump(conn)

    def _handle_ack(self, conn: _Conn, frame: Frame):
        pending = conn.inflight
        if pending is not None and frame.id == pending.msg_id:
            conn.inflight = None
        else:
            log.info("ignoring PUBACK for unknown id %s from %s", frame.id, conn.client_id)

    async def _pump(self, conn: _Conn):
        """Send the next queued message if nothing is awaiting an ack."""
        if conn.inflight is not None or not conn.queue or conn.closed:
            return
        msg_id, frame = conn.queue.popleft()
        conn.inflight = PendingDelivery(
            msg_id=msg_id, frame=frame, attempts=1,
            deadline=time.monotonic() + self.retry_interval,
        )
        self.delivery_attempts += 1
        await self._send(conn, frame)

    async def _retry_loop(self):
        tick = max(self.retry_interval / 5, 0.02)
        while True:
            await asyncio.sleep(tick)
            now = time.monotonic()
            for conn in list(self._conns.values()):
                pending = conn.inflight
                if pending is None or conn.closed or now < pending.deadline:
                    continue
                pending.attempts += 1
                pending.deadline = now + self.retry_interval
                self.delivery_attempts += 1
                await self._send(conn, pending.frame)

    async def _send(self, conn: _Conn, frame: Frame):
        if conn.closed:
            return
        try:
            async with conn.write_lock:
                conn.writer.write(encode_frame(frame))
                await conn.writer.drain()
        except (ConnectionResetError, BrokenPipeError, RuntimeError):
            conn.closed = True


class BrokerThread:
    """Run a broker on its own event loop in a daemon thread."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 retry_interval: float = 1.0):
        self.broker = Broker(host=host, port=port, retry_interval=retry_interval)
        self._loop = asyncio.new_event_loop()
        self._started = threading.Event()
        self._startup_error: BaseException | None = None
        self._thread = threading.Thread(target=self._run, daemon=True)

    def _run(self):
        asyncio.set_event_loop(self._loop)

        async def boot():
            try:
                await self.broker.start()
            except BaseException as exc:
                self._startup_error = exc
                self._loop.stop()
            finally:
                self._started.set()

        self._loop.create_task(boot())
        self._loop.run_forever()

    def start(self) -> "BrokerThread":
        self._thread.start()
        self._started.wait(timeout=10)
        if self._startup_error is not None:
            raise self._startup_error
        return self

    @property
    def port(self) -> int:
        return self.broker.port

    def stop(self):
        async def shutdown():
            await self.broker.stop()
            self._loop.stop()

        asyncio.run_coroutine_threadsafe(shutdown(), self._loop)
        self._thread.join(timeout=5)
        if not self._loop.is_closed():
            self._loop.close()
