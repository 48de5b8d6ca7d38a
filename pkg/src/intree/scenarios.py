"""Synthetic community-clustered scenarios for desk-scale experiments."""

from __future__ import annotations

from dataclasses import dataclass

from .interest_tree import InterestMembership, InterestTree, assign_major_interests, build_tree
from .trace import CanonicalTrace, community_rate_matrix, generate_synthetic_trace


@dataclass
class Scenario:
    trace: CanonicalTrace
    tree: InterestTree
    interests: list[InterestMembership]


def clustered_interests(node_count: int, leaves: int, parents: int) -> list[InterestMembership]:
    """Interests for ``parents`` groups of leaf communities of equal size.

    Parent interests get the low ids so the descending scan links every
    leaf under its group; with ``parents=0`` the leaves sit directly under
    the root.  Nodes are dealt to leaves in contiguous blocks.
    """
    if parents and leaves % parents:
        raise ValueError("leaves must split evenly among parents")
    per_leaf = node_count // leaves
    if per_leaf < 1:
        raise ValueError("need at least one node per leaf community")
    leaf_members = []
    for i in range(leaves):
        hi = node_count if i == leaves - 1 else (i + 1) * per_leaf
        leaf_members.append(frozenset(range(i * per_leaf, hi)))
    span = leaves // parents if parents else 0
    out = []
    for p in range(parents):
        group = frozenset().union(*leaf_members[p * span : (p + 1) * span])
        out.append(InterestMembership(p + 1, group))
    for i, members in enumerate(leaf_members):
        out.append(InterestMembership(parents + 1 + i, members))
    return out


def clustered_scenario(
    node_count: int = 30,
    leaves: int = 6,
    parents: int = 0,
    duration: float = 21600.0,
    within_mean: float = 1000.0,
    cross_factor: float = 5.0,
    mean_contact_len: float = 30.0,
    seed: int = 1,
) -> Scenario:
    """Community-clustered contact process: same-leaf pairs meet ``cross_factor`` times as often."""
    interests = clustered_interests(node_count, leaves, parents)
    majors = assign_major_interests(interests, "highest-id", range(node_count))
    tree = build_tree(interests, majors)
    labels = [majors[n] for n in range(node_count)]
    rates = community_rate_matrix(labels, within_mean, cross_factor)
    trace = generate_synthetic_trace(node_count, duration, rates, mean_contact_len, seed)
    return Scenario(trace, tree, interests)
