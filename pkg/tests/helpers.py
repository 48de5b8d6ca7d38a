"""Shared scaffolding for building test scenarios."""

from __future__ import annotations

import random

from intree.interest_tree import InterestMembership, InterestTree, build_tree
from intree.routing.messages import Message
from intree.social import Record, SocialParams, SocialState
from intree.trace import CanonicalTrace, ContactEvent, Kind, sort_events

from oracles import random_parent_map


def flat_tree(node_count: int) -> InterestTree:
    """Everyone in community 1 under the root."""
    return build_tree([InterestMembership(1, frozenset(range(node_count)))], {n: 1 for n in range(node_count)})


def scripted_trace(contacts, node_count: int, duration: float) -> CanonicalTrace:
    """``contacts`` as (up, down, a, b) tuples."""
    events = []
    for up, down, a, b in contacts:
        events.append(ContactEvent(float(up), Kind.UP, a, b))
        events.append(ContactEvent(float(down), Kind.DOWN, a, b))
    return CanonicalTrace(sort_events(events), node_count, float(duration))


def msg(mid, src, dst, created=0.0, size=1000, ttl=1e9, dst_interest=1, hops=0, received=None):
    return Message(mid, src, dst, dst_interest, size, float(created), float(ttl), hops,
                   float(created if received is None else received))


def _value(rec: Record | None, weight: float, gamma: float, open_window: int) -> float:
    if rec is None:
        return 0.0
    return (1 - weight) * rec.predicted * gamma ** (open_window + 1 - rec.last_update_window) + weight * rec.current_count


def random_forwarding_instance(rng: random.Random, max_communities: int = 15):
    """A random tree, three distinct nodes and two social states.

    Returns the arguments for ``decide_int_tree`` plus the plain tables the
    brute-force oracle reads.  Values are drawn from a small grid so that
    equal densities and ties come up often.
    """
    size = rng.randint(2, max_communities)
    parent = random_parent_map(rng, size)
    comms = [c for c in parent if c != 0]
    nodes = list(range(rng.randint(3, 8)))
    majors = {n: rng.choice(comms) for n in nodes}
    tree = InterestTree(parent, {}, majors)
    sn, in_, dst = rng.sample(nodes, 3)
    if rng.random() < 0.1:
        in_ = dst
    params = SocialParams(alpha=rng.choice([0.3, 0.7]), beta=rng.choice([0.1, 0.5]), gamma=rng.choice([0.9, 1.0]))
    window = rng.randint(3, 8)
    states = {}
    density, tie = {}, {}
    for owner in (sn, in_):
        s = SocialState(owner, params, window=window)
        for c in parent:
            if rng.random() < 0.6:
                s.density[c] = Record(rng.randint(0, 2), float(rng.randint(0, 2)), window - rng.randint(0, 1))
        for peer in nodes:
            if peer != owner and rng.random() < 0.6:
                s.ties[peer] = Record(rng.randint(0, 2), float(rng.randint(0, 2)), window - rng.randint(0, 1))
        s.__post_init__()
        states[owner] = s
        for c, rec in s.density.items():
            density[(owner, c)] = _value(rec, params.alpha, params.gamma, window)
        for peer, rec in s.ties.items():
            tie[(owner, peer)] = _value(rec, params.beta, params.gamma, window)
    m = msg(0, sn, dst, dst_interest=majors[dst])
    return (m, sn, in_, states[sn], states[in_], tree), (sn, in_, dst, majors, parent, density, tie)


def audit_scenario():
    """Five nodes, two communities, Epidemic, hand-checked ground truth.

    Transfers take exactly 1 s (1000 bytes at 8000 bit/s).

    t=50  link 0-1: m1 delivered (51, latency 31, 1 hop); m0 relayed (52,
          created in warm-up so not counted); m2 relayed (53, counted).
    t=100 link 1-4: m2 delivered (101, latency 81, 2 hops); m0 relayed.
    t=300 link 0-2: sends alternate ends: m0 (not counted), m3, m1, m2
          (three counted relays; copies are kept after delivery).
    m3 is never delivered.

    created 3, delivered 2, relayed 4: ratio 2/3, overhead 2.0,
    latency 56.0, hops 1.5.
    """
    from intree.config import SimConfig

    tree = build_tree(
        [InterestMembership(1, frozenset({0, 1, 2})), InterestMembership(2, frozenset({3, 4}))],
        {0: 1, 1: 1, 2: 1, 3: 2, 4: 2},
    )
    trace = scripted_trace([(50, 60, 0, 1), (100, 110, 1, 4), (300, 310, 0, 2)], 5, 1000)
    messages = [
        msg(0, 0, 3, created=5, dst_interest=2),
        msg(1, 0, 1, created=20, dst_interest=1),
        msg(2, 0, 4, created=20, dst_interest=2),
        msg(3, 2, 3, created=30, dst_interest=2),
    ]
    config = SimConfig(
        duration=1000, warmup=10, bandwidth=8000, ttl=500, buffer_capacity=1e9, router="epidemic", runs=1
    )
    expected = dict(created=3, delivered=2, relayed=4, delivery_ratio=2 / 3, overhead=2.0,
                    avg_latency=56.0, avg_hop_count=1.5)
    return config, trace, tree, messages, expected
