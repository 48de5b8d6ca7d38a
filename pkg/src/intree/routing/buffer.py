"""Node buffers, drop policy and transmission scheduling."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Collection, Sequence

from .messages import ForwardDecision, Message, Verdict


@dataclass
class Buffer:
    """Message copies in arrival order, so iteration runs oldest-received first."""

    capacity: float
    messages: dict[int, Message] = field(default_factory=dict)
    # may be shared between buffers to model a global purge oracle
    delivered_ids_seen: set[int] = field(default_factory=set)
    used: int = 0

    def __post_init__(self):
        self.used = sum(m.size for m in self.messages.values())
        self._expiry = [(m.created_at + m.ttl, m.id) for m in self.messages.values()]
        heapq.heapify(self._expiry)

    def __contains__(self, msg_id: int) -> bool:
        return msg_id in self.messages

    def __len__(self) -> int:
        return len(self.messages)

    def free(self) -> float:
        return self.capacity - self.used

    def add(self, msg: Message) -> None:
        self.messages[msg.id] = msg
        self.used += msg.size
        heapq.heappush(self._expiry, (msg.created_at + msg.ttl, msg.id))

    def remove(self, msg_id: int) -> Message | None:
        msg = self.messages.pop(msg_id, None)
        if msg is not None:
            self.used -= msg.size
        return msg

    def purge_stale(self, now: float, pinned: Collection[int] = ()) -> tuple[list[Message], list[Message]]:
        """Drop expired and already-delivered copies; returns ``(expired, delivered)``.

        Pinned ids (copies being transmitted) stay put.
        """
        expired, delivered = [], []
        seen = self.delivered_ids_seen
        if seen:
            for mid in [mid for mid in self.messages if mid in seen and mid not in pinned]:
                delivered.append(self.remove(mid))
        heap = self._expiry
        held = []
        while heap and heap[0][0] <= now:
            deadline, mid = heap[0]
            msg = self.messages.get(mid)
            if msg is None or msg.created_at + msg.ttl != deadline:
                heapq.heappop(heap)  # stale entry
                continue
            if not msg.expired(now):
                break
            heapq.heappop(heap)
            if mid in pinned:
                held.append((deadline, mid))
            else:
                expired.append(self.remove(mid))
        for entry in held:
            heapq.heappush(heap, entry)
        return expired, delivered


@dataclass
class AdmitResult:
    admitted: bool
    evicted: list[Message] = field(default_factory=list)
    expired: list[Message] = field(default_factory=list)
    purged: list[Message] = field(default_factory=list)
    reason: str = ""


def buffer_admit(buf: Buffer, msg: Message, now: float, pinned: Collection[int] = ()) -> AdmitResult:
    """Store ``msg``, making room by evicting the oldest-received copies.

    Expired or delivered copies go first.  Copies in ``pinned`` (currently
    being sent) are never evicted; if the message cannot fit without
    touching them, or is larger than the whole buffer, it is rejected.
    """
    if msg.id in buf.delivered_ids_seen:
        return AdmitResult(False, reason="already delivered")
    if msg.id in buf.messages:
        return AdmitResult(False, reason="duplicate")
    if msg.size > buf.capacity:
        return AdmitResult(False, reason="larger than buffer capacity")
    expired, purged = buf.purge_stale(now, pinned)
    result = AdmitResult(True, expired=expired, purged=purged)
    if buf.free() < msg.size:
        in_transit = sum(buf.messages[mid].size for mid in pinned if mid in buf.messages)
        if buf.capacity - in_transit < msg.size:
            result.admitted = False
            result.reason = "no room without evicting copies in transit"
            return result
        victims = []
        room = buf.free()
        for m in buf.messages.values():
            if room >= msg.size:
                break
            if m.id not in pinned:
                victims.append(m.id)
                room += m.size
        result.evicted = [buf.remove(mid) for mid in victims]
    buf.add(msg)
    return result


def schedule_key(msg: Message, decision: ForwardDecision) -> tuple:
    """Sort key for the transmission order; deliveries ignore the score."""
    if decision.verdict is Verdict.DELIVER:
        return (0, 0.0, msg.created_at, msg.id)
    return (1, -decision.score, msg.created_at, msg.id)


def schedule_transmissions(
    holder_buffer: Buffer,
    decisions: Sequence[tuple[Message, ForwardDecision]],
    link_bandwidth: float,
    contact_remaining: float = math.inf,
) -> list[tuple[Message, ForwardDecision]]:
    """Order transmissions: deliveries first, then relays by descending score.

    The plan is cut at the first message that no longer fits in
    ``contact_remaining * link_bandwidth`` bytes.  ``holder_buffer`` is used
    to drop decisions for copies the holder no longer has.
    """
    live = [(m, d) for m, d in decisions if d.transmits and m.id in holder_buffer.messages]
    live.sort(key=lambda md: schedule_key(*md))
    budget = contact_remaining * link_bandwidth
    plan = []
    for m, d in live:
        if m.size > budget:
            break
        budget -= m.size
        plan.append((m, d))
    return plan
