"""Interest-tree community structure.

Interests are communities: the set of nodes sharing that interest.  The
tree links each interest to the nearest preceding interest whose member
set contains it; interests with no container hang off a synthetic root 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

ROOT = 0

MAJOR_RULES = ("highest-id", "smallest-set")


class UnknownCommunityError(KeyError):
    pass


@dataclass(frozen=True)
class InterestMembership:
    interest_id: int
    members: frozenset[int]


def _int_fields(raw_lines: Iterable[str]):
    for line_no, line in enumerate(raw_lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.replace(";", ",").split(",")]
        try:
            yield line_no, [int(p) for p in parts]
        except ValueError:
            if line_no == 1:
                continue  # header row
            raise ValueError(f"line {line_no}: non-integer field in {line!r}") from None


def parse_interest_lists(raw_lines: Iterable[str], node_count: int | None = None) -> list[InterestMembership]:
    """Invert ``node_id,interest_id`` records into per-interest member sets.

    Interests with identical member sets are kept apart here; see
    :func:`merge_equivalent_interests`.
    """
    index: dict[int, set[int]] = {}
    for line_no, fields in _int_fields(raw_lines):
        if len(fields) != 2:
            raise ValueError(f"line {line_no}: expected node_id,interest_id")
        node, interest = fields
        if node < 0 or (node_count is not None and node >= node_count):
            raise ValueError(f"line {line_no}: node {node} outside 0..{(node_count or 0) - 1}")
        if interest <= 0:
            raise ValueError(f"line {line_no}: interest ids must be positive, got {interest}")
        index.setdefault(interest, set()).add(node)
    return [InterestMembership(i, frozenset(m)) for i, m in sorted(index.items())]


def merge_equivalent_interests(raw: Iterable[InterestMembership]) -> list[InterestMembership]:
    """Collapse interests with identical members and renumber densely from 1.

    Classes are ordered by the smallest original id they contain.
    """
    first_id: dict[frozenset[int], int] = {}
    for im in raw:
        prev = first_id.get(im.members)
        if prev is None or im.interest_id < prev:
            first_id[im.members] = im.interest_id
    ordered = sorted(first_id.items(), key=lambda kv: kv[1])
    return [InterestMembership(n, members) for n, (members, _) in enumerate(ordered, start=1)]


def assign_major_interests(
    merged: Iterable[InterestMembership],
    rule: str = "highest-id",
    nodes: Iterable[int] | None = None,
) -> dict[int, int]:
    """Pick one community per node.

    ``highest-id`` takes the largest interest id in the node's list;
    ``smallest-set`` takes the interest with the fewest members, ties going
    to the higher id.  If ``nodes`` is given, every one of them must end up
    with an interest.
    """
    if rule not in MAJOR_RULES:
        raise ValueError(f"unknown major-interest rule {rule!r}; expected one of {MAJOR_RULES}")
    if rule == "highest-id":
        key = lambda im: im.interest_id  # noqa: E731
    else:
        key = lambda im: (-len(im.members), im.interest_id)  # noqa: E731
    best: dict[int, InterestMembership] = {}
    for im in merged:
        for node in im.members:
            cur = best.get(node)
            if cur is None or key(im) > key(cur):
                best[node] = im
    if nodes is not None:
        for node in nodes:
            if node not in best:
                raise ValueError(f"node {node} has no interests")
    return {node: im.interest_id for node, im in sorted(best.items())}


@dataclass
class InterestTree:
    parent: dict[int, int]
    members: dict[int, frozenset[int]]
    major_interest: dict[int, int] = field(default_factory=dict)
    depth: dict[int, int] = field(init=False)
    children: dict[int, list[int]] = field(init=False)

    def __post_init__(self):
        if self.parent.get(ROOT) != ROOT:
            raise ValueError("community 0 must be the root and map to itself")
        self.children = {c: [] for c in self.parent}
        for c, p in sorted(self.parent.items()):
            if c == ROOT:
                continue
            if p not in self.parent:
                raise ValueError(f"community {c} has unknown parent {p}")
            self.children[p].append(c)
        self.depth = {ROOT: 0}
        stack = [ROOT]
        while stack:
            c = stack.pop()
            for ch in self.children[c]:
                self.depth[ch] = self.depth[c] + 1
                stack.append(ch)
        if len(self.depth) != len(self.parent):
            cyclic = sorted(set(self.parent) - set(self.depth))
            raise ValueError(f"communities {cyclic} do not reach the root")
        for node, c in self.major_interest.items():
            if c not in self.parent:
                raise ValueError(f"node {node} has unknown major interest {c}")
        # path-to-root cache; the tree is immutable once built
        self._up: dict[int, tuple[int, ...]] = {}

    @property
    def height(self) -> int:
        return max(self.depth.values())

    @property
    def communities(self) -> list[int]:
        return sorted(self.parent)

    def layer(self, c: int) -> int:
        """Layer number counted from the root (root = 1)."""
        return self.depth[self._check(c)] + 1

    def is_leaf(self, c: int) -> bool:
        return not self.children[self._check(c)]

    def _check(self, c: int) -> int:
        if c not in self.parent:
            raise UnknownCommunityError(c)
        return c

    def path_to_root(self, c: int) -> tuple[int, ...]:
        """``c``, its parent, ..., root."""
        path = self._up.get(c)
        if path is None:
            self._check(c)
            out = [c]
            while out[-1] != ROOT:
                out.append(self.parent[out[-1]])
            path = self._up[c] = tuple(out)
        return path

    def with_majors(self, major_interest: Mapping[int, int]) -> "InterestTree":
        return InterestTree(dict(self.parent), dict(self.members), dict(major_interest))


def build_tree(
    merged: Iterable[InterestMembership], major_interest: Mapping[int, int] | None = None
) -> InterestTree:
    """Link every interest to the largest smaller id whose members contain it.

    Interests scanned from the highest id down; a contained interest with
    no container becomes a child of the synthetic root 0, whose member set
    is the union of its children.
    """
    sets = {im.interest_id: im.members for im in merged}
    if ROOT in sets:
        raise ValueError("interest id 0 is reserved for the root")
    ids = sorted(sets)
    parent = {ROOT: ROOT}
    for pos in range(len(ids) - 1, -1, -1):
        n = ids[pos]
        parent[n] = ROOT
        for m in reversed(ids[:pos]):
            if sets[m] >= sets[n]:
                parent[n] = m
                break
    members = dict(sets)
    root_members: set[int] = set()
    for c, p in parent.items():
        if p == ROOT and c != ROOT:
            root_members |= sets[c]
    members[ROOT] = frozenset(root_members)
    return InterestTree(parent, members, dict(major_interest or {}))


def common_parent(tree: InterestTree, ci: int, cj: int) -> int:
    """Lowest common ancestor of two communities."""
    up_i = tree.path_to_root(ci)
    up_j = set(tree.path_to_root(cj))
    for c in up_i:
        if c in up_j:
            return c
    raise AssertionError("every community reaches the root")


def com_seq(tree: InterestTree, start: int, end: int) -> list[int]:
    """Communities from ``start`` up to the common parent and down to ``end``."""
    top = common_parent(tree, start, end)
    up = tree.path_to_root(start)
    down = tree.path_to_root(end)
    ascent = list(up[: up.index(top) + 1])
    descent = list(down[: down.index(top)])
    return ascent + descent[::-1]


@dataclass(frozen=True)
class LayerRow:
    layer: int
    interests: tuple[int, ...]
    nodes: tuple[int, ...]

    @property
    def interest_count(self) -> int:
        return len(self.interests)

    @property
    def node_count(self) -> int:
        return len(self.nodes)


def layer_stats(tree: InterestTree) -> list[LayerRow]:
    """Per-layer interest ids and the nodes whose major interest sits there."""
    by_layer_interests: dict[int, list[int]] = {}
    for c in tree.communities:
        by_layer_interests.setdefault(tree.layer(c), []).append(c)
    by_layer_nodes: dict[int, list[int]] = {}
    for node, c in sorted(tree.major_interest.items()):
        by_layer_nodes.setdefault(tree.layer(c), []).append(node)
    return [
        LayerRow(layer, tuple(by_layer_interests[layer]), tuple(by_layer_nodes.get(layer, ())))
        for layer in sorted(by_layer_interests)
    ]


def tree_from_interest_file(lines: Iterable[str], rule: str = "highest-id", node_count: int | None = None) -> InterestTree:
    merged = merge_equivalent_interests(parse_interest_lists(lines, node_count))
    nodes = range(node_count) if node_count is not None else None
    majors = assign_major_interests(merged, rule, nodes)
    return build_tree(merged, majors)


def dump_tree(tree: InterestTree) -> str:
    lines = ["community_id,parent_id,members"]
    for c in tree.communities:
        lines.append(f"{c},{tree.parent[c]},{' '.join(map(str, sorted(tree.members.get(c, ()))))}")
    return "\n".join(lines) + "\n"


def dump_majors(tree: InterestTree) -> str:
    lines = ["node_id,community_id"]
    lines += [f"{n},{c}" for n, c in sorted(tree.major_interest.items())]
    return "\n".join(lines) + "\n"


def load_tree(tree_lines: Iterable[str], major_lines: Iterable[str] | None = None) -> InterestTree:
    parent: dict[int, int] = {}
    members: dict[int, frozenset[int]] = {}
    for line_no, line in enumerate(tree_lines, start=1):
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("community_id"):
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"tree line {line_no}: expected community_id,parent_id,members")
        c, p = int(parts[0]), int(parts[1])
        parent[c] = p
        members[c] = frozenset(int(x) for x in parts[2].split())
    majors: dict[int, int] = {}
    if major_lines is not None:
        for line_no, fields in _int_fields(major_lines):
            if len(fields) != 2:
                raise ValueError(f"majors line {line_no}: expected node_id,community_id")
            majors[fields[0]] = fields[1]
    return InterestTree(parent, members, majors)
