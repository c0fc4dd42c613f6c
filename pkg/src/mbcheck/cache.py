"""Response caching, rate limiting, and retry plumbing for providers.

Every provider response is stored as a content-addressed JSON file under
`<cache_dir>/<namespace>/<hash>.json`; replaying a cached request never
touches the network, which is what makes pipeline runs reproducible.
"""

from __future__ import annotations

import json
import os
import random
import threading
import time
from pathlib import Path
from typing import Any, Callable, TypeVar

from .errors import ProviderError
from .textutil import canonical_json, sha256_hex

T = TypeVar("T")


class ResponseCache:
    """File-backed request/response store.

    Keys are JSON-serializable dicts; the file name is the sha256 of the
    canonical key encoding and the file holds the canonical JSON of the
    response. Writes go through a temp file and an atomic rename, so
    concurrent readers never observe a partial value.
    """

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)

    @staticmethod
    def key_hash(key: dict) -> str:
        return sha256_hex(canonical_json(key))

    def path_for(self, namespace: str, key: dict) -> Path:
        return self.root / namespace / f"{self.key_hash(key)}.json"

    def get(self, namespace: str, key: dict) -> Any | None:
        path = self.path_for(namespace, key)
        try:
            raw = path.read_text("utf-8")
        except FileNotFoundError:
            return None
        return json.loads(raw)

    def put(self, namespace: str, key: dict, value: Any) -> Path:
        path = self.path_for(namespace, key)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(f".tmp.{os.getpid()}.{threading.get_ident()}")
        tmp.write_text(canonical_json(value), encoding="utf-8")
        os.replace(tmp, path)
        return path


class TokenBucket:
    """Blocking token-bucket limiter for outbound provider calls.

    `rate` is tokens per second; `capacity` defaults to the rate (one
    second of burst). The clock and sleep functions are injectable so
    tests never wait on wall time.
    """

    def __init__(
        self,
        rate: float,
        capacity: float | None = None,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate
        self.capacity = capacity if capacity is not None else max(rate, 1.0)
        self._clock = clock
        self._sleep = sleep
        self._tokens = self.capacity
        self._updated = clock()
        self._lock = threading.Lock()

    def _refill(self) -> None:
        now = self._clock()
        self._tokens = min(self.capacity, self._tokens + (now - self._updated) * self.rate)
        self._updated = now

    def acquire(self, tokens: float = 1.0) -> None:
        if tokens > self.capacity:
            raise ValueError("requested more tokens than bucket capacity")
        while True:
            with self._lock:
                self._refill()
                # Tolerance keeps float dust from demanding a sleep shorter
                # than the clock can represent.
                if self._tokens >= tokens - 1e-9:
                    self._tokens = max(0.0, self._tokens - tokens)
                    return
                wait = (tokens - self._tokens) / self.rate
            self._sleep(wait)


def call_with_retries(
    fn: Callable[[], T],
    attempts: int = 3,
    base_delay: float = 1.0,
    max_delay: float = 30.0,
    sleep: Callable[[float], None] = time.sleep,
    rng: random.Random | None = None,
    retry_on: tuple[type[Exception], ...] = (ProviderError,),
) -> T:
    """Call `fn`, retrying on `retry_on` with exponential backoff and
    jitter. The final failure is re-raised unchanged."""
    if attempts < 1:
        raise ValueError("attempts must be at least 1")
    rng = rng or random.Random()
    for attempt in range(attempts):
        try:
            return fn()
        except retry_on:
            if attempt + 1 >= attempts:
                raise
            delay = min(base_delay * 2**attempt, max_delay)
            sleep(delay * (0.5 + rng.random()))
    raise AssertionError("unreachable")
