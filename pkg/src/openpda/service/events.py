"""Fan-out hub for the console event stream.

Producers (chat handler, bus observer) push dicts; each SSE subscriber
gets its own queue. Slow or dead subscribers are dropped once their
queue backs up.
"""
from __future__ import annotations

import queue
import threading

MAX_QUEUED = 256


class EventHub:
    def __init__(self):
        self._lock = threading.Lock()
        self._subscribers: list[queue.Queue] = []

    def publish(self, event: dict) -> None:
        with self._lock:
            stale = []
            for q in self._subscribers:
                try:
                    q.put_nowait(event)
                except queue.Full:
                    stale.append(q)
            for q in stale:
                self._subscribers.remove(q)

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue(maxsize=MAX_QUEUED)
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    @property
    def subscriber_count(self) -> int:
        with self._lock:
            return len(self._subscribers)
