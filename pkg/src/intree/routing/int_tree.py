"""Interest-tree forwarding.

The decision depends on which of the holder (SN), the encountered node
(IN) and the destination (DN) share a major interest:

    IN is DN                     -> deliver
    I_IN == I_DN, I_SN == I_DN   -> relay iff SoTie(SN, DN) < SoTie(IN, DN)
    I_IN == I_DN, I_SN != I_DN   -> relay
    I_IN != I_DN, I_SN == I_DN   -> keep
    I_IN != I_DN, I_SN != I_DN   -> relay iff IN is denser than SN for some
                                    community on ComSeq(C_DN -> C_SN&DN)
"""

from __future__ import annotations

from ..interest_tree import InterestTree, com_seq, common_parent
from ..social import SocialParams, SocialState
from .messages import ForwardDecision, Message, Verdict

DELIVER = "a"
INTRA_TIE = "b"
ENTER_COMMUNITY = "c"
STAY_IN_COMMUNITY = "d"
INTER_DENSITY = "e"


def density_sequence(tree: InterestTree, dst_interest: int, sn_interest: int) -> list[int]:
    """ComSeq from the destination community up to its common parent with the holder's."""
    return com_seq(tree, dst_interest, common_parent(tree, sn_interest, dst_interest))


def decide_int_tree(
    msg: Message,
    sn: int,
    in_: int,
    sn_state: SocialState,
    in_state: SocialState,
    tree: InterestTree,
) -> ForwardDecision:
    if sn == in_:
        raise ValueError(f"node {sn} cannot forward to itself")
    dst = msg.dst
    if in_ == dst:
        return ForwardDecision(Verdict.DELIVER, DELIVER)
    majors = tree.major_interest
    i_dn = msg.dst_interest
    i_sn = majors[sn]
    i_in = majors[in_]
    if i_in == i_dn:
        in_tie = in_state.tie_of(dst)
        if i_sn != i_dn:
            return ForwardDecision(Verdict.RELAY, ENTER_COMMUNITY, in_tie)
        if sn_state.tie_of(dst) < in_tie:
            return ForwardDecision(Verdict.RELAY, INTRA_TIE, in_tie)
        return ForwardDecision(Verdict.KEEP, INTRA_TIE)
    if i_sn == i_dn:
        return ForwardDecision(Verdict.KEEP, STAY_IN_COMMUNITY)
    seq = density_sequence(tree, i_dn, i_sn)
    for c in seq:
        if sn_state.density_of(c) < in_state.density_of(c):
            score = max(in_state.density_of(x) for x in seq)
            return ForwardDecision(Verdict.RELAY, INTER_DENSITY, score)
    return ForwardDecision(Verdict.KEEP, INTER_DENSITY)


class IntTreeRouter:
    name = "int-tree"
    purges_on_delivery = True

    def __init__(self, tree: InterestTree, node_count: int, params: SocialParams | None = None):
        self.tree = tree
        self.params = params or SocialParams()
        self.states = [SocialState(n, self.params) for n in range(node_count)]

    def on_link_up(self, a: int, b: int, now: float) -> None:
        majors = self.tree.major_interest
        self.states[a].on_contact(b, majors[b], self.tree, now)
        self.states[b].on_contact(a, majors[a], self.tree, now)

    def on_window(self, window_index: int) -> None:
        for st in self.states:
            st.evaporate(window_index)

    def decide(self, msg: Message, holder: int, peer: int, peer_ids, now: float) -> ForwardDecision:
        return decide_int_tree(msg, holder, peer, self.states[holder], self.states[peer], self.tree)
