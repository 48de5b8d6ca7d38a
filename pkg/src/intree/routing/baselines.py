"""Epidemic flooding and PROPHET, the two comparison routers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Collection

from .messages import ForwardDecision, Message, Verdict


def decide_epidemic(msg: Message, sn: int, in_: int, in_summary: Collection[int]) -> ForwardDecision:
    if in_ == msg.dst:
        return ForwardDecision(Verdict.DELIVER, "deliver")
    if msg.id in in_summary:
        return ForwardDecision(Verdict.KEEP, "has-copy")
    return ForwardDecision(Verdict.RELAY, "flood")


class EpidemicRouter:
    name = "epidemic"

    def __init__(self, tree=None, node_count: int = 0, params=None):
        pass

    def on_link_up(self, a: int, b: int, now: float) -> None:
        pass

    def on_window(self, window_index: int) -> None:
        pass

    def decide(self, msg: Message, holder: int, peer: int, peer_ids, now: float) -> ForwardDecision:
        return decide_epidemic(msg, holder, peer, peer_ids)


P_INIT = 0.75
BETA_TRANSITIVE = 0.25
GAMMA_AGING = 0.98
AGING_UNIT = 30.0


@dataclass
class ProphetState:
    owner: int
    predictability: dict[int, float] = field(default_factory=dict)
    p_init: float = P_INIT
    beta_transitive: float = BETA_TRANSITIVE
    gamma_aging: float = GAMMA_AGING
    last_aged: float = 0.0
    time_unit: float = AGING_UNIT

    def p(self, node: int) -> float:
        return self.predictability.get(node, 0.0)

    def age(self, now: float) -> None:
        elapsed = (now - self.last_aged) / self.time_unit
        if elapsed <= 0:
            return
        factor = self.gamma_aging**elapsed
        for k in self.predictability:
            self.predictability[k] *= factor
        self.last_aged = now

    def direct_update(self, peer: int) -> None:
        old = self.p(peer)
        self.predictability[peer] = old + (1.0 - old) * self.p_init

    def transitive_update(self, peer: int, peer_table: dict[int, float]) -> None:
        p_ab = self.p(peer)
        for c, p_bc in peer_table.items():
            if c == self.owner or c == peer:
                continue
            old = self.p(c)
            self.predictability[c] = old + (1.0 - old) * p_ab * p_bc * self.beta_transitive


def prophet_encounter(a: ProphetState, b: ProphetState, now: float) -> None:
    """Aging, direct and transitive updates for both ends of a new contact."""
    a.age(now)
    b.age(now)
    a.direct_update(b.owner)
    b.direct_update(a.owner)
    snap_a, snap_b = dict(a.predictability), dict(b.predictability)
    a.transitive_update(b.owner, snap_b)
    b.transitive_update(a.owner, snap_a)


def decide_prophet(msg: Message, sn_state: ProphetState, in_state: ProphetState) -> ForwardDecision:
    if in_state.owner == msg.dst:
        return ForwardDecision(Verdict.DELIVER, "deliver")
    p_in = in_state.p(msg.dst)
    if p_in > sn_state.p(msg.dst):
        return ForwardDecision(Verdict.RELAY, "higher-p", p_in)
    return ForwardDecision(Verdict.KEEP, "not-higher-p")


class ProphetRouter:
    name = "prophet"

    def __init__(self, tree=None, node_count: int = 0, params=None):
        self.states = [ProphetState(n) for n in range(node_count)]

    def on_link_up(self, a: int, b: int, now: float) -> None:
        prophet_encounter(self.states[a], self.states[b], now)

    def on_window(self, window_index: int) -> None:
        pass

    def decide(self, msg: Message, holder: int, peer: int, peer_ids, now: float) -> ForwardDecision:
        if peer != msg.dst and msg.id in peer_ids:
            return ForwardDecision(Verdict.KEEP, "has-copy")
        sn, in_ = self.states[holder], self.states[peer]
        # predictabilities are compared as of now
        sn.age(now)
        in_.age(now)
        return decide_prophet(msg, sn, in_)
