"""How much Int-Tree's forwarding decisions depend on the social parameters.

Separate simulations with different parameters diverge after the first
differing decision, so their decisions cannot be paired.  Instead one run
is driven by the base parameters while shadow social states, updated from
the same contacts, answer every forwarding question a second time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .config import SimConfig
from .engine import Simulation
from .interest_tree import InterestTree
from .routing.int_tree import IntTreeRouter, decide_int_tree
from .routing.messages import ForwardDecision, Message
from .social import SocialParams, SocialState
from .trace import CanonicalTrace


@dataclass
class DecisionTally:
    evaluations: int = 0
    disagreements: dict[float, int] = field(default_factory=dict)

    def fraction(self, value: float) -> float:
        return self.disagreements.get(value, 0) / self.evaluations if self.evaluations else 0.0


class ShadowIntTreeRouter(IntTreeRouter):
    """Int-Tree router that also scores each decision under alternative parameters."""

    def __init__(
        self,
        tree: InterestTree,
        node_count: int,
        params: SocialParams,
        shadows: dict[float, SocialParams],
    ):
        super().__init__(tree, node_count, params)
        self.shadow_states = {
            key: [SocialState(n, p) for n in range(node_count)] for key, p in shadows.items()
        }
        self.tally = DecisionTally(disagreements={key: 0 for key in shadows})

    def on_link_up(self, a: int, b: int, now: float) -> None:
        super().on_link_up(a, b, now)
        majors = self.tree.major_interest
        for states in self.shadow_states.values():
            states[a].on_contact(b, majors[b], self.tree, now)
            states[b].on_contact(a, majors[a], self.tree, now)

    def on_window(self, window_index: int) -> None:
        super().on_window(window_index)
        for states in self.shadow_states.values():
            for st in states:
                st.evaporate(window_index)

    def decide(self, msg: Message, holder: int, peer: int, peer_ids, now: float) -> ForwardDecision:
        base = super().decide(msg, holder, peer, peer_ids, now)
        self.tally.evaluations += 1
        for key, states in self.shadow_states.items():
            alt = decide_int_tree(msg, holder, peer, states[holder], states[peer], self.tree)
            if alt.verdict is not base.verdict:
                self.tally.disagreements[key] += 1
        return base


def decision_sensitivity(
    config: SimConfig,
    trace: CanonicalTrace,
    tree: InterestTree,
    parameter: str,
    values: Sequence[float],
) -> DecisionTally:
    """Tally decisions that flip when ``parameter`` (alpha, beta or gamma) takes each of ``values``."""
    if parameter not in ("alpha", "beta", "gamma"):
        raise ValueError(f"parameter must be alpha, beta or gamma, got {parameter!r}")
    base = config.social_params
    shadows = {
        v: SocialParams(**{**vars(base), parameter: v})
        for v in values
    }
    router = ShadowIntTreeRouter(tree, trace.node_count, base, shadows)
    Simulation(config.replace(router="int-tree"), trace, tree, router=router).run()
    return router.tally
