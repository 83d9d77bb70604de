# vidscore/limits.py
from __future__ import annotations

import asyncio
import time
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Callable, Deque, DefaultDict, Tuple


@dataclass
class SlidingWindowLimiter:
    """
    In-memory sliding window limiter for outgoing endpoint requests.
    per_minute <= 0 disables it.
    """
    per_minute: int
    window_seconds: float = 60.0
    clock: Callable[[], float] = time.monotonic

    _events: DefaultDict[str, Deque[float]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._events = defaultdict(deque)

    def allow(self, key: str = "default") -> Tuple[bool, float]:
        """
        returns: (allowed, retry_after_seconds)
        """
        if self.per_minute <= 0:
            return True, 0.0
        now = self.clock()
        q = self._events[key]

        # drop old events
        cutoff = now - self.window_seconds
        while q and q[0] <= cutoff:
            q.popleft()

        if len(q) >= self.per_minute:
            return False, max((q[0] + self.window_seconds) - now, 0.001)

        q.append(now)
        return True, 0.0

    async def acquire(self, key: str = "default") -> None:
        while True:
            allowed, retry_after = self.allow(key)
            if allowed:
                return
            await asyncio.sleep(retry_after)


class ConcurrencyGate:
    """Semaphore that also records how many holders are inside and the peak."""

    def __init__(self, limit: int) -> None:
        if limit < 1:
            raise ValueError("limit must be >= 1")
        self.limit = limit
        self._sem = asyncio.Semaphore(limit)
        self.in_flight = 0
        self.peak = 0

    async def __aenter__(self) -> "ConcurrencyGate":
        await self._sem.acquire()
        self.in_flight += 1
        self.peak = max(self.peak, self.in_flight)
        return self

    async def __aexit__(self, *exc: object) -> None:
        self.in_flight -= 1
        self._sem.release()
