"""Balanced tree overlays, holon decomposition and failure partitioning.

Positions are integers. :func:`build_tree` numbers them breadth-first, so the
root is position 0 and the children of ``p`` are ``c*p+1 .. c*p+c``. Trees
produced by :func:`partition_on_failure` keep the original position numbers.

Levels follow subtree height: leaves sit at level 0 and a node's level is one
more than its tallest child. On perfect trees this coincides with the usual
depth-based numbering (root at level ``h``).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np


class Scale(enum.Enum):
    FULL = "full"
    PARTIAL = "partial"


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TreeTopology:
    root: int
    parent: Mapping[int, int | None]
    children: Mapping[int, tuple[int, ...]]
    placement: Mapping[int, int]  # position -> agent id
    children_per_node: int

    @cached_property
    def positions(self) -> tuple[int, ...]:
        """All positions in breadth-first order from the root."""
        order, frontier = [], [self.root]
        while frontier:
            order.extend(frontier)
            frontier = [ch for p in frontier for ch in self.children[p]]
        return tuple(order)

    @property
    def num_agents(self) -> int:
        return len(self.parent)

    @cached_property
    def levels(self) -> dict[int, int]:
        lv = {}
        for p in reversed(self.positions):
            kids = self.children[p]
            lv[p] = 1 + max(lv[ch] for ch in kids) if kids else 0
        return lv

    @property
    def height(self) -> int:
        return self.levels[self.root]

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        """(parent, child) pairs in breadth-first order."""
        return tuple((self.parent[p], p) for p in self.positions if p != self.root)

    @property
    def is_perfect(self) -> bool:
        # with at most c children per node, the node count pins the shape
        c, h = self.children_per_node, self.height
        return self.num_agents == sum(c**i for i in range(h + 1))

    def agent_at(self, position: int) -> int:
        return self.placement[position]

    def subtree(self, position: int) -> "TreeTopology":
        """The complete subtree under ``position`` as a tree of its own."""
        members, frontier = [], [position]
        while frontier:
            members.extend(frontier)
            frontier = [ch for p in frontier for ch in self.children[p]]
        return self.induced(position, members)

    def induced(self, root: int, members: Iterable[int]) -> "TreeTopology":
        ms = set(members)
        parent = {p: (self.parent[p] if p != root else None) for p in ms}
        children = {p: tuple(ch for ch in self.children[p] if ch in ms) for p in ms}
        placement = {p: self.placement[p] for p in ms}
        return TreeTopology(root, parent, children, placement, self.children_per_node)

    def __repr__(self):
        return (f"TreeTopology(root={self.root}, N={self.num_agents}, "
                f"c={self.children_per_node}, h={self.height})")


@dataclass(frozen=True)
class Holon:
    root_position: int
    member_positions: frozenset[int]
    stage: int
    tree: TreeTopology

    def __len__(self) -> int:
        return len(self.member_positions)

    @property
    def num_edges(self) -> int:
        return len(self.member_positions) - 1


@dataclass(frozen=True)
class HolonStagePlan:
    stages: tuple[tuple[Holon, ...], ...]

    def __len__(self) -> int:
        return len(self.stages)

    def __iter__(self):
        return iter(self.stages)


def build_tree(N: int, c: int, seed: int | None = 0) -> TreeTopology:
    """Balanced ``c``-ary tree over ``N`` agents filled level by level.

    Agent ids ``0..N-1`` are shuffled onto the breadth-first positions with a
    seeded Fisher-Yates permutation; ``seed=None`` keeps the identity order.
    """
    if N < 1:
        raise ConfigurationError("a tree needs at least one agent")
    if c < 2:
        raise ConfigurationError("children per node must be at least 2")
    parent = {0: None}
    children = {p: tuple(ch for ch in range(c * p + 1, c * p + c + 1) if ch < N) for p in range(N)}
    for p in range(1, N):
        parent[p] = (p - 1) // c
    agents = list(range(N))
    if seed is not None:
        agents = [int(a) for a in np.random.default_rng(seed).permutation(N)]
    placement = dict(enumerate(agents))
    return TreeTopology(0, parent, children, placement, c)


def _stages_for(tree: TreeTopology, first_stage: int = 0) -> list[tuple[Holon, ...]]:
    h = tree.height
    if h == 0:
        return [(Holon(tree.root, frozenset([tree.root]), first_stage, tree),)]
    levels = tree.levels
    stages = []
    for j in range(h):
        holons = []
        for p in tree.positions:
            if levels[p] == j + 1:
                sub = tree.subtree(p)
                holons.append(Holon(p, frozenset(sub.parent), first_stage + j, sub))
        stages.append(tuple(holons))
    return stages


def decompose_holarchy(t: TreeTopology, scale: Scale = Scale.FULL,
                       branch_index: int | None = None) -> HolonStagePlan:
    """Nest holons from the parents of the leaves up to the whole tree.

    Stage ``j`` holds one holon per node at level ``j+1``, covering that
    node's complete subtree. The partial scale restricts the nesting to the
    ``branch_index``-th child of the root and closes with one whole-tree stage.
    """
    scale = Scale(scale)
    if scale is Scale.FULL:
        return HolonStagePlan(tuple(_stages_for(t)))
    if branch_index is None:
        raise ConfigurationError("partial scale needs a branch index")
    kids = t.children[t.root]
    if not 0 <= branch_index < len(kids):
        raise ConfigurationError(
            f"branch index {branch_index} out of range for root degree {len(kids)}")
    stages = _stages_for(t.subtree(kids[branch_index]))
    whole = Holon(t.root, frozenset(t.parent), len(stages), t)
    stages.append((whole,))
    return HolonStagePlan(tuple(stages))


def partition_on_failure(t: TreeTopology, failed_nodes: Iterable[int] = (),
                         failed_edges: Iterable[tuple[int, int]] = ()) -> list[TreeTopology]:
    """Split ``t`` into the trees that survive crashed nodes and cut links.

    Each component is rooted at its highest surviving node. Components are
    returned in breadth-first order of their roots in the original tree.
    """
    dead = set(failed_nodes)
    unknown = dead - set(t.parent)
    if unknown:
        raise ConfigurationError(f"unknown positions {sorted(unknown)}")
    cut = set()
    for a, b in failed_edges:
        if t.parent.get(b) == a:
            cut.add(b)
        elif t.parent.get(a) == b:
            cut.add(a)
        else:
            raise ConfigurationError(f"({a}, {b}) is not an edge of the tree")
    components = []
    for p in t.positions:
        if p in dead:
            continue
        up = t.parent[p]
        if up is not None and up not in dead and p not in cut:
            continue
        members, frontier = [], [p]
        while frontier:
            members.extend(frontier)
            frontier = [ch for q in frontier for ch in t.children[q]
                        if ch not in dead and ch not in cut]
        components.append(t.induced(p, members))
    return components
