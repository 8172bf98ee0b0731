"""Perception and communication: per-robot partial maps grown by sensing,
map merging over ad-hoc links, and communication-group construction with a
hello/reply/confirm handshake log."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Sequence, Set, Tuple

from .world import Coord, EdgeSpec, WorldGraph, euclid, graph_length, point_dist

EdgeKey = Tuple[int, int]
# (sender, receiver, message) per handshake stage
HandshakeEntry = Tuple[int, int, str]
HANDSHAKE_STAGES = ("hello", "reply", "confirm")


class MapConsistencyError(ValueError):
    """Two maps disagree on the attributes of the same edge."""


@dataclass
class PartialMap:
    """What one robot knows: node positions, fully attributed edges, and the
    set of nodes whose entire incident edge set has been seen. Grows
    monotonically; update/merge return new instances and never mutate."""

    nodes: Dict[int, Coord] = field(default_factory=dict)
    edges: Dict[EdgeKey, EdgeSpec] = field(default_factory=dict)
    adjacency_complete: Set[int] = field(default_factory=set)

    def signature(self) -> Tuple[int, int, int]:
        """Cheap growth marker: sizes only, valid because maps only grow."""
        return (len(self.nodes), len(self.edges), len(self.adjacency_complete))

    def neighbors(self, node: int) -> List[Tuple[int, EdgeKey]]:
        out = []
        for key in self.edges:
            if key[0] == node:
                out.append((key[1], key))
            elif key[1] == node:
                out.append((key[0], key))
        out.sort()
        return out

    def known_degree(self, node: int) -> int:
        return sum(1 for key in self.edges if node in key)


def empty_map() -> PartialMap:
    return PartialMap()


def sense(world: WorldGraph, position: int, type_id: int,
          sensing_factor: float) -> PartialMap:
    """Observation from one node: all nodes within the sensing radius, every
    edge with both endpoints in radius (full attributes), and the in-radius
    nodes whose whole incident edge set was captured."""
    radius = (sensing_factor * graph_length(world)
              * world.type_spec(type_id).sensing_coefficient)
    origin = world.nodes[position]
    in_range = {v for v, p in enumerate(world.nodes)
                if point_dist(origin, p) <= radius}
    edges = {e.key: e for e in world.edges
             if e.u in in_range and e.v in in_range}
    complete = {v for v in in_range
                if all(w in in_range for w, _ in world.neighbors(v))}
    return PartialMap(nodes={v: world.nodes[v] for v in in_range},
                      edges=edges, adjacency_complete=complete)


def update_map(current: PartialMap, observation: PartialMap) -> PartialMap:
    """Union of what was known and what was just seen (or told)."""
    for key, edge in observation.edges.items():
        known = current.edges.get(key)
        if known is not None and known != edge:
            raise MapConsistencyError("conflicting attributes for edge %r"
                                      % (key,))
    return PartialMap(
        nodes={**current.nodes, **observation.nodes},
        edges={**current.edges, **observation.edges},
        adjacency_complete=current.adjacency_complete
        | observation.adjacency_complete,
    )


def merge_maps(a: PartialMap, b: PartialMap) -> PartialMap:
    return update_map(a, b)


def comm_range(world: WorldGraph, type_a: int, type_b: int,
               communication_factor: float) -> float:
    """Pairwise link range: the weaker transmitter of the two decides."""
    length = graph_length(world)
    reach_a = communication_factor * length * \
        world.type_spec(type_a).transmission_coefficient
    reach_b = communication_factor * length * \
        world.type_spec(type_b).transmission_coefficient
    return min(reach_a, reach_b)


@dataclass
class RobotGroup:
    members: Tuple[int, ...]
    shared_map: PartialMap


def build_groups(positions: Dict[int, int], active: Sequence[int],
                 types: Dict[int, int], maps: Dict[int, PartialMap],
                 world: WorldGraph, communication_factor: float,
                 ) -> Tuple[List[RobotGroup], List[HandshakeEntry]]:
    """Form communication groups among active robots.

    A link exists when the endpoints sit within the pairwise range; groups
    are the transitive closure of links. Every established link logs one
    hello/reply/confirm exchange (zero latency, so the handshake and the
    group are effective within the same step). Each group's shared map is
    the merge of its members' maps.
    """
    robots = sorted(active)
    links: List[Tuple[int, int]] = []
    parent = {n: n for n in robots}

    def find(n: int) -> int:
        while parent[n] != n:
            parent[n] = parent[parent[n]]
            n = parent[n]
        return n

    for i, n in enumerate(robots):
        for m in robots[i + 1:]:
            reach = comm_range(world, types[n], types[m], communication_factor)
            # reach 0 means no radio: co-located robots still cannot link
            if reach > 0.0 and euclid(world, positions[n], positions[m]) <= reach:
                links.append((n, m))
                parent[find(m)] = find(n)

    log: List[HandshakeEntry] = []
    for n, m in links:
        log.append((n, m, "hello"))
        log.append((m, n, "reply"))
        log.append((n, m, "confirm"))

    components: Dict[int, List[int]] = {}
    for n in robots:
        components.setdefault(find(n), []).append(n)
    groups = []
    for members in sorted(components.values(), key=lambda ms: ms[0]):
        shared = maps[members[0]]
        for m in members[1:]:
            shared = merge_maps(shared, maps[m])
        groups.append(RobotGroup(members=tuple(members), shared_map=shared))
    return groups, log
