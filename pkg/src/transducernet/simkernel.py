"""Deterministic discrete-event engine.

Time is an integer count of milliseconds. Events are ordered by
``(time, seq)`` where ``seq`` is assigned in scheduling order, so two runs
that schedule the same events in the same order replay identically.
"""

from __future__ import annotations

import enum
import hashlib
import heapq
import random
from dataclasses import dataclass, field
from typing import IO, Protocol

from .errors import PastEvent

DAY_MS = 86_400_000


class Tag(enum.IntEnum):
    SENSOR_TICK = 0
    WINDOW_END = 1
    HOT_PLUG = 2
    FRAME_DELIVERY = 3
    ACTUATOR_EXPIRY = 4
    RULE_FIRE = 5


_TAG_NAMES = {t: t.name for t in Tag}


@dataclass(frozen=True)
class SimEvent:
    time: int
    seq: int
    tag: Tag
    payload: tuple = ()

    def record(self) -> str:
        return f"{self.time}\t{self.seq}\t{self.tag.name}\t{' '.join(map(str, self.payload))}"


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    horizon_ms: int = DAY_MS
    tick_ms: int = 1

    def __post_init__(self):
        if self.tick_ms <= 0:
            raise ValueError("tick_ms must be positive")
        if self.horizon_ms < 0 or self.horizon_ms % self.tick_ms:
            raise ValueError("horizon_ms must be a non-negative multiple of tick_ms")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


def derive_seed(seed: int, label: str) -> int:
    """Stable 64-bit sub-seed for one named consumer of randomness."""
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


class Streams:
    """One root seed split into independent per-consumer generators.

    Each label gets its own generator, so adding a consumer never shifts the
    draws seen by the others.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self._streams: dict[str, random.Random] = {}

    def rng(self, label: str) -> random.Random:
        stream = self._streams.get(label)
        if stream is None:
            stream = self._streams[label] = random.Random(derive_seed(self.seed, label))
        return stream


class EventLog:
    """Append-only record of processed events.

    Lines are hashed as they arrive; the full text is kept in memory only
    when ``keep`` is set, and streamed to ``sink`` when one is given.
    """

    _FLUSH = 8192

    def __init__(self, keep: bool = False, sink: IO[str] | None = None):
        self.keep = keep
        self.sink = sink
        self.lines: list[str] = []
        self.count = 0
        self.counts = {t.name: 0 for t in Tag}
        self._hash = hashlib.sha256()
        self._pending: list[str] = []

    def append(self, line: str, tag_name: str) -> None:
        self.count += 1
        self.counts[tag_name] += 1
        self._pending.append(line)
        if len(self._pending) >= self._FLUSH:
            self._flush()

    def _flush(self) -> None:
        if not self._pending:
            return
        text = "\n".join(self._pending) + "\n"
        self._hash.update(text.encode())
        if self.sink is not None:
            self.sink.write(text)
        if self.keep:
            self.lines.extend(self._pending)
        self._pending = []

    def digest(self) -> str:
        self._flush()
        return self._hash.hexdigest()

    def records(self) -> list[str]:
        self._flush()
        return list(self.lines)

    def summary(self) -> dict:
        return {"events": self.count, "by_tag": dict(self.counts), "sha256": self.digest()}


class World(Protocol):
    def dispatch(self, time: int, tag: Tag, payload: tuple) -> None: ...


class Kernel:
    def __init__(self, config: SimConfig | None = None, log: EventLog | None = None):
        self.config = config or SimConfig()
        self.now = 0
        self.log = log if log is not None else EventLog()
        self._queue: list[tuple] = []
        self._seq = 0

    def __len__(self) -> int:
        return len(self._queue)

    def schedule(self, time: int, tag: Tag, payload: tuple = ()) -> int:
        if time < self.now:
            raise PastEvent(f"cannot schedule at {time}, clock is at {self.now}")
        if time % self.config.tick_ms:
            raise ValueError(f"time {time} is off the {self.config.tick_ms} ms grid")
        seq = self._seq
        self._seq = seq + 1
        heapq.heappush(self._queue, (time, seq, tag, payload))
        return seq

    def peek_time(self) -> int | None:
        return self._queue[0][0] if self._queue else None

    def run_until(self, world: World, t_end: int) -> EventLog:
        """Process every queued event with ``time <= t_end`` in order.

        A world may expose ``handlers``, a sequence indexed by tag of
        ``f(time, payload)`` callables, instead of ``dispatch``.
        """
        if t_end > self.config.horizon_ms:
            raise ValueError(f"t_end {t_end} is past the horizon {self.config.horizon_ms}")
        handlers = getattr(world, "handlers", None)
        if handlers is None:
            handlers = [lambda time, payload, tag=tag: world.dispatch(time, tag, payload) for tag in Tag]
        queue = self._queue
        pop = heapq.heappop
        log = self.log
        counts = [0] * len(Tag)
        names = [t.name for t in Tag]
        # formatted (tag, payload) prefixes for the periodic events
        cache: dict = {}
        pending = log._pending
        flush_at = log._FLUSH
        try:
            while queue and queue[0][0] <= t_end:
                time, seq, tag, payload = pop(queue)
                self.now = time
                counts[tag] += 1
                key = (tag, payload)
                text = cache.get(key)
                if text is None:
                    text = f"{names[tag]}\t{' '.join(map(str, payload))}"
                    if tag <= Tag.WINDOW_END:
                        cache[key] = text
                pending.append(f"{time}\t{seq}\t{text}")
                if len(pending) >= flush_at:
                    log._flush()
                    pending = log._pending
                handlers[tag](time, payload)
        finally:
            for t, n in enumerate(counts):
                log.counts[names[t]] += n
                log.count += n
        if self.now < t_end:
            self.now = t_end
        return log
