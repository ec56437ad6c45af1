"""In-process event bus (multi-producer, synchronous dispatch)."""

from __future__ import annotations

import threading
from collections import defaultdict
from typing import Callable

TOPIC_STEP = "step"
TOPIC_RUN_STARTED = "run_started"
TOPIC_RUN_FINISHED = "run_finished"


class EventBus:
    """Topic-based pub/sub. Subscribers run synchronously on the publisher's
    thread; per-topic handler lists are guarded for concurrent producers."""

    def __init__(self) -> None:
        self._subscribers: dict[str, list[Callable[[dict], None]]] = defaultdict(list)
        self._lock = threading.Lock()

    def subscribe(self, topic: str, handler: Callable[[dict], None]) -> None:
        with self._lock:
            self._subscribers[topic].append(handler)

    def publish(self, topic: str, payload: dict) -> None:
        with self._lock:
            handlers = list(self._subscribers.get(topic, ()))
        for handler in handlers:
            handler(payload)
