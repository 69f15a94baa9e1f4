"""Deterministic in-process message passing between simulated ranks.

Messages are queued per (sender, receiver) pair and only become visible after
:meth:`Transport.exchange`, which acts as the superstep barrier. Each receiver
then sees its messages grouped by ascending sender rank, in send order.
"""

from __future__ import annotations

import threading
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Hashable

__all__ = ["Transport", "TransferStats", "TransportError", "Delivery"]


class TransportError(ValueError):
    pass


@dataclass(frozen=True)
class Delivery:
    sender: int
    kind: int
    payload: bytes


@dataclass
class TransferStats:
    """Cumulative message and payload-byte counts.

    ``messages``/``bytes`` are keyed by message kind; ``property_bytes`` is
    filled by senders that attribute payload bytes to individual properties.
    The 1-byte kind tag is envelope and never counted.
    """

    messages: Counter = field(default_factory=Counter)
    bytes: Counter = field(default_factory=Counter)
    property_bytes: Counter = field(default_factory=Counter)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def record(self, kind: Hashable, nbytes: int) -> None:
        with self._lock:
            self.messages[kind] += 1
            self.bytes[kind] += nbytes

    def add_property_bytes(self, tally: Counter) -> None:
        with self._lock:
            self.property_bytes.update(tally)

    def reset(self) -> None:
        with self._lock:
            self.messages.clear()
            self.bytes.clear()
            self.property_bytes.clear()

    def snapshot(self) -> tuple[Counter, Counter]:
        with self._lock:
            return Counter(self.messages), Counter(self.bytes)

    @property
    def total_bytes(self) -> int:
        return sum(self.bytes.values())

    @property
    def total_messages(self) -> int:
        return sum(self.messages.values())


class Transport:
    """Barrier-synchronised mailbox for ``num_ranks`` ranks.

    ``send`` may be called concurrently by distinct sender ranks; ``exchange``
    must be called by a single coordinator while no rank is sending.
    """

    def __init__(self, num_ranks: int, kinds=None):
        if num_ranks < 1:
            raise TransportError("need at least one rank")
        self.num_ranks = num_ranks
        # optional int -> enum mapping applied to delivered kinds
        self._kinds = kinds
        self.stats = TransferStats()
        self._outbox: list[dict[int, list[bytes]]] = [defaultdict(list) for _ in range(num_ranks)]
        self._inbox: list[list[Delivery]] = [[] for _ in range(num_ranks)]
        self.transcript: list[tuple[int, int, int, bytes]] = []
        self.keep_transcript = False
        self.exchanges = 0

    def _check(self, rank: int) -> None:
        if not 0 <= rank < self.num_ranks:
            raise TransportError(f"invalid rank {rank}")

    def send(self, src: int, dst: int, kind: int, payload: bytes) -> None:
        self._check(src)
        self._check(dst)
        if src == dst:
            raise TransportError(f"rank {src} cannot send to itself")
        tag = int(kind)
        if not 0 <= tag < 256:
            raise TransportError(f"message kind {kind!r} does not fit the 1-byte tag")
        self._outbox[src][dst].append(bytes((tag,)) + bytes(payload))
        self.stats.record(kind, len(payload))

    def exchange(self) -> None:
        """Move every queued message to its receiver's inbox."""
        for dst in range(self.num_ranks):
            for src in range(self.num_ranks):
                queue = self._outbox[src].pop(dst, None)
                if not queue:
                    continue
                for wire in queue:
                    kind = wire[0] if self._kinds is None else self._kinds(wire[0])
                    self._inbox[dst].append(Delivery(src, kind, wire[1:]))
                    if self.keep_transcript:
                        self.transcript.append((src, dst, wire[0], wire[1:]))
        self.exchanges += 1

    def recv(self, rank: int) -> list[Delivery]:
        """Drain and return the inbox of ``rank``."""
        self._check(rank)
        out, self._inbox[rank] = self._inbox[rank], []
        return out

    def pending(self) -> int:
        return sum(len(q) for box in self._outbox for q in box.values())
