"""Blocking bus client with a background reader thread.

Incoming publishes are handed to the on_message callback and then
acknowledged (unless auto_ack is off), so a crashing handler can never
wedge redelivery for everyone else. One client may publish and subscribe
at the same time.
"""
from __future__ import annotations

import itertools
import logging
import queue
import socket
import threading

from ..errors import BadFilter, NotConnected
from .frames import Frame, FrameError, decode_frame, encode_frame, validate_filter

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 5.0


class BusClient:
    def __init__(self, client_id: str, host: str = "127.0.0.1", port: int = 1883,
                 on_message=None, auto_ack: bool = True, timeout: float = DEFAULT_TIMEOUT):
        self.client_id = client_id
        self.host = host
        self.port = port
        self.on_message = on_message
        self.auto_ack = auto_ack
        self.timeout = timeout
        self._sock: socket.socket | None = None
        self._file = None
        self._reader: threading.Thread | None = None
        self._send_lock = threading.Lock()
        self._publish_lock = threading.Lock()
        self._local_ids = itertools.count(1)
        self._connack: queue.Queue[Frame] = queue.Queue()
        self._suback: queue.Queue[Frame] = queue.Queue()
        self._puback: queue.Queue[Frame] = queue.Queue()
        self._pong: queue.Queue[Frame] = queue.Queue()
        self._closed = threading.Event()

    # lifecycle

    def connect(self) -> "BusClient":
        sock = socket.create_connection((self.host, self.port), timeout=self.timeout)
        sock.settimeout(None)
        self._sock = sock
        self._file = sock.makefile("rb")
        self._closed.clear()
        self._reader = threading.Thread(target=self._read_loop, daemon=True,
                                        name=f"bus-reader-{self.client_id}")
        self._reader.start()
        self._send(Frame(op="CONNECT", client=self.client_id))
        self._wait(self._connack, "CONNACK")
        return self

    def close(self):
        self._closed.set()
        if self._sock is not None:
            try:
                self._sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            self._sock.close()
            self._sock = None

    @property
    def connected(self) -> bool:
        return self._sock is not None and not self._closed.is_set()

    # operations

    def subscribe(self, topic_filter: str) -> None:
        validate_filter(topic_filter)
        self._send(Frame(op="SUBSCRIBE", client=self.client_id, topic=topic_filter))
        ack = self._wait(self._suback, "SUBACK")
        if ack.payload and ack.payload.startswith("error"):
            raise BadFilter(ack.payload)

    def publish(self, topic: str, payload: str) -> int:
        """Send one message; returns the broker-assigned message id.

        When called from inside a message handler (the reader thread) the
        acknowledgment cannot be awaited without blocking the thread that
        would deliver it, so the send is fire-and-forget and 0 is returned.
        """
        local_id = next(self._local_ids)
        frame = Frame(op="PUBLISH", client=self.client_id, topic=topic,
                      id=local_id, payload=payload)
        if threading.current_thread() is self._reader:
            self._send(frame)
            return 0
        with self._publish_lock:
            self._send(frame)
            while True:
                ack = self._wait(self._puback, "PUBACK")
                if ack.id != local_id:
                    continue  # ack for an earlier fire-and-forget publish
                try:
                    return int(ack.payload or "0")
                except ValueError:
                    return 0

    def ack(self, msg_id: int) -> None:
        self._send(Frame(op="PUBACK", client=self.client_id, id=msg_id))

    def ping(self) -> None:
        self._send(Frame(op="PING", client=self.client_id))
        self._wait(self._pong, "PONG")

    # internals

    def _send(self, frame: Frame) -> None:
        if self._sock is None:
            raise NotConnected(f"{self.client_id} is not connected")
        data = encode_frame(frame)
        with self._send_lock:
            try:
                self._sock.sendall(data)
            except OSError as exc:
                self.close()
                raise NotConnected(f"send failed: {exc}") from None

    def _wait(self, q: queue.Queue, what: str) -> Frame:
        try:
            return q.get(timeout=self.timeout)
        except queue.Empty:
            raise NotConnected(f"timed out waiting for {what}") from None

    def _read_loop(self):
        try:
            while not self._closed.is_set():
                line = self._file.readline()
                if not line:
                    break
                try:
                    frame = decode_frame(line)
                except FrameError as exc:
                    log.warning("%s: dropping bad frame: %s", self.client_id, exc)
                    continue
                if frame.op == "PUBLISH":
                    self._handle_publish(frame)
                elif frame.op == "CONNACK":
                    self._connack.put(frame)
                elif frame.op == "SUBACK":
                    self._suback.put(frame)
                elif frame.op == "PUBACK":
                    self._puback.put(frame)
                elif frame.op == "PONG":
                    self._pong.put(frame)
        except (OSError, ValueError):
            pass
        finally:
            self._closed.set()

    def _handle_publish(self, frame: Frame):
        try:
            if self.on_message is not None:
                self.on_message(frame)
        except Exception:
            log.exception("%s: message handler failed for topic %s",
                          self.client_id, frame.topic)
        finally:
            if self.auto_ack:
                try:
                    self.ack(frame.id)
                except NotConnected:
                    pass
