from __future__ import annotations

import enum
from dataclasses import dataclass


@dataclass(frozen=True)
class Message:
    """One holder's copy of a message."""

    id: int
    src: int
    dst: int
    dst_interest: int
    size: int
    created_at: float
    ttl: float
    hop_count: int = 0
    received_at_current_holder: float = 0.0

    def expired(self, now: float) -> bool:
        return now - self.created_at > self.ttl

    def relayed_copy(self, now: float) -> "Message":
        return Message(
            self.id, self.src, self.dst, self.dst_interest, self.size, self.created_at, self.ttl,
            self.hop_count + 1, now,
        )


class Verdict(enum.Enum):
    DELIVER = "deliver"
    RELAY = "relay"
    KEEP = "keep"


@dataclass(frozen=True)
class ForwardDecision:
    verdict: Verdict
    rule: str
    # forwarding-opportunity score used to order relays
    score: float = 0.0

    @property
    def transmits(self) -> bool:
        return self.verdict is not Verdict.KEEP
