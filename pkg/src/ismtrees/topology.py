"""Relation topologies over scene objects, star partitioning, and selection.

A relation topology is a plain undirected graph whose vertices are object
identities and whose edges mark which object pairs are connected by a spatial
relation.  Star partitioning factors a connected topology into star-shaped
subtopologies, one per future ISM, and records the breadth-first height of
every object; tree generation later uses those heights as its balancing
criterion.  Topology selection searches the space of connected topologies
for a good false-positive/runtime trade-off.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .core import ObjectId
from .errors import BudgetZeroError, DisconnectedTopologyError


def _normalize_relation(a: ObjectId, b: ObjectId) -> tuple:
    if a == b:
        raise ValueError(f"relation must join two distinct objects, got {a}")
    return (a, b) if a <= b else (b, a)


@dataclass
class RelationTopology:
    """Objects plus unordered relation pairs; no self-loops."""

    objects: frozenset
    relations: frozenset

    def __init__(self, objects: Iterable[ObjectId], relations: Iterable[tuple]):
        objs = frozenset(objects)
        rels = frozenset(_normalize_relation(a, b) for a, b in relations)
        for a, b in rels:
            if a not in objs or b not in objs:
                raise ValueError(f"relation endpoint {a if a not in objs else b} not among objects")
        self.objects = objs
        self.relations = rels

    def degree(self, obj: ObjectId) -> int:
        return sum(1 for a, b in self.relations if obj in (a, b))

    def neighbors(self, obj: ObjectId) -> list:
        out = [b if a == obj else a for a, b in self.relations if obj in (a, b)]
        return sorted(out)

    def is_connected(self) -> bool:
        if not self.objects:
            return True
        start = min(self.objects)
        seen = {start}
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            for nxt in self.neighbors(cur):
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return seen == self.objects


def star_topology(objects: Iterable[ObjectId], center: Optional[ObjectId] = None) -> RelationTopology:
    """Star over the given objects; default center is the lexicographically smallest id."""
    objs = sorted(set(objects))
    if len(objs) < 2:
        raise ValueError("a star needs at least two objects")
    hub = center if center is not None else objs[0]
    if hub not in objs:
        raise ValueError(f"center {hub} not among objects")
    return RelationTopology(objs, [(hub, o) for o in objs if o != hub])


def complete_topology(objects: Iterable[ObjectId]) -> RelationTopology:
    objs = sorted(set(objects))
    if len(objs) < 2:
        raise ValueError("a topology needs at least two objects")
    return RelationTopology(objs, list(itertools.combinations(objs, 2)))


@dataclass(frozen=True)
class StarTopology:
    """One star: a center object related to every object of its neighborhood."""

    center: ObjectId
    neighborhood: tuple

    def __post_init__(self) -> None:
        if not self.neighborhood:
            raise ValueError("star neighborhood must not be empty")
        if self.center in self.neighborhood:
            raise ValueError("star center cannot be its own neighbor")

    @property
    def members(self) -> tuple:
        return (self.center,) + tuple(self.neighborhood)

    def relations(self) -> frozenset:
        return frozenset(_normalize_relation(self.center, o) for o in self.neighborhood)


@dataclass(frozen=True)
class PlaceholderRef:
    """Names the sub-model whose reference object substitutes a real object."""

    ism_label: str


def breadth_first_heights(topology: RelationTopology, root: ObjectId) -> dict:
    """Breadth-first discovery depth of every object, starting at root."""
    heights = {root: 0}
    queue = deque([root])
    while queue:
        cur = queue.popleft()
        for nxt in topology.neighbors(cur):
            if nxt not in heights:
                heights[nxt] = heights[cur] + 1
                queue.append(nxt)
    return heights


def partition_into_stars(topology: RelationTopology):
    """Factor a connected topology into stars; returns (stars, heights).

    Centers are picked greedily by maximal remaining degree (ties to the
    lexicographically smallest id), each star absorbing every remaining
    relation of its center, so as few stars as possible are extracted.  The
    height function records breadth-first depth from the first center.
    """
    if len(topology.objects) < 2 or not topology.relations:
        raise ValueError("topology must relate at least two objects")
    if not topology.is_connected():
        raise DisconnectedTopologyError(
            f"{len(topology.objects)} objects are not all mutually reachable"
        )

    remaining = set(topology.relations)
    stars = []
    first_center = None
    while remaining:
        degree = {}
        for a, b in remaining:
            degree[a] = degree.get(a, 0) + 1
            degree[b] = degree.get(b, 0) + 1
        center = min(degree, key=lambda o: (-degree[o], o))
        if first_center is None:
            first_center = center
        incident = sorted(rel for rel in remaining if center in rel)
        neighborhood = tuple(b if a == center else a for a, b in incident)
        stars.append(StarTopology(center, neighborhood))
        remaining.difference_update(incident)

    heights = breadth_first_heights(topology, first_center)
    return stars, heights


@dataclass
class TopologySearchParams:
    """Budget and weighting for the local relation-topology search."""

    max_rounds: int = 10
    lambda_fp: float = 1.0

    def __post_init__(self) -> None:
        if self.max_rounds < 1:
            raise BudgetZeroError("topology search needs a positive iteration budget")
        if self.lambda_fp < 0:
            raise ValueError("lambda_fp must be non-negative")


def _candidate_moves(topology: RelationTopology):
    """Deterministically ordered neighbor topologies: add, remove, swap one relation."""
    objs = sorted(topology.objects)
    present = topology.relations
    absent = [r for r in itertools.combinations(objs, 2) if r not in present]
    moves = []
    for rel in absent:
        moves.append(("add", RelationTopology(objs, present | {rel})))
    for rel in sorted(present):
        shrunk = RelationTopology(objs, present - {rel})
        if shrunk.is_connected():
            moves.append(("remove", shrunk))
    for rel in sorted(present):
        for new_rel in absent:
            swapped = RelationTopology(objs, (present - {rel}) | {new_rel})
            if swapped.is_connected():
                moves.append(("swap", swapped))
    return moves


def select_topology(
    score: Callable[[RelationTopology], float],
    objects: Iterable[ObjectId],
    params: Optional[TopologySearchParams] = None,
    start: Optional[RelationTopology] = None,
) -> RelationTopology:
    """First-improvement hill climbing over connected relation topologies.

    Starts from the policy star (or an explicit start topology) and accepts
    the first strictly improving neighbor in a deterministic order until a
    round yields no improvement or the round budget is exhausted.  The
    returned topology never scores worse than the start.
    """
    params = params or TopologySearchParams()
    objs = sorted(set(objects))
    if len(objs) == 2:
        return star_topology(objs)
    current = start if start is not None else star_topology(objs)
    current_score = score(current)
    for _ in range(params.max_rounds):
        improved = False
        for _, candidate in _candidate_moves(current):
            candidate_score = score(candidate)
            if candidate_score < current_score:
                current, current_score = candidate, candidate_score
                improved = True
                break
        if not improved:
            break
    return current
