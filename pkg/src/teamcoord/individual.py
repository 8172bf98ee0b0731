"""Single-robot planning on a partial map: deterministic in-map shortest
paths, frontier sub-goal candidates when the goal is still unknown, and the
straight-line-to-goal scoring that picks which candidate to chase."""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .sensing import PartialMap
from .world import Coord, RobotTypeSpec, point_dist


@dataclass
class PlanResult:
    """An in-map path (node sequence, first entry is the current node) and
    its traversal cost for the planning robot. A length-1 path is a stay."""

    path: List[int]
    cost: float

    @property
    def is_stay(self) -> bool:
        return len(self.path) <= 1


def shortest_path(pmap: PartialMap, start: int, goal: int,
                  type_spec: RobotTypeSpec) -> Optional[PlanResult]:
    """Dijkstra over known edges, risky ones priced unsupported.

    Ties are broken toward the lexicographically smallest node sequence,
    which the heap order gives for free once entries carry the whole path:
    with strictly positive edge costs every predecessor of a cheapest path
    pops first, so all cheapest paths to a node are enqueued before the node
    settles. Returns None when the goal is not reachable in the map.
    """
    if start not in pmap.nodes or goal not in pmap.nodes:
        return None
    mult = type_spec.edge_cost_multiplier
    frontier: List[Tuple[float, Tuple[int, ...]]] = [(0.0, (start,))]
    settled = set()
    while frontier:
        cost, path = heapq.heappop(frontier)
        node = path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == goal:
            return PlanResult(path=list(path), cost=cost)
        for neighbor, key in pmap.neighbors(node):
            if neighbor not in settled:
                step = pmap.edges[key].base_cost * mult
                heapq.heappush(frontier, (cost + step, path + (neighbor,)))
    return None


def candidate_subgoals(pmap: PartialMap, current: int, final_goal: int,
                       goal_coord: Coord, cap: int) -> List[int]:
    """Sub-goal candidates: the final goal itself once it is on the map,
    otherwise frontier nodes (known but with unseen surroundings), keeping
    the cap closest to the goal by straight line.

    Frontier nodes walled off behind fully explored dead ends (every known
    neighbor adjacency-complete with a single known edge) are dropped; they
    cannot lead anywhere new. Empty result means nothing is worth chasing.
    """
    if final_goal in pmap.nodes:
        return [final_goal]
    frontier = []
    for node in pmap.nodes:
        if node in pmap.adjacency_complete:
            continue
        neighbors = pmap.neighbors(node)
        if neighbors and not all(
                w in pmap.adjacency_complete and pmap.known_degree(w) <= 1
                for w, _ in neighbors):
            frontier.append(node)
    frontier.sort(key=lambda v: (point_dist(pmap.nodes[v], goal_coord), v))
    return frontier[:cap]


def epsilon_greedy_pick(scored: Sequence[Tuple[float, object]], epsilon: float,
                        rng: random.Random):
    """Pick the best-scored entry with probability epsilon, otherwise one of
    the remaining entries uniformly. Ties on score go to the earlier entry,
    so callers order candidates deterministically."""
    if not scored:
        raise ValueError("epsilon_greedy_pick needs at least one candidate")
    best = min(range(len(scored)), key=lambda i: (scored[i][0], i))
    if len(scored) == 1 or rng.random() < epsilon:
        return scored[best][1]
    rest = [i for i in range(len(scored)) if i != best]
    return scored[rest[rng.randrange(len(rest))]][1]


def individual_plan(pmap: PartialMap, current: int, final_goal: int,
                    goal_coord: Coord, type_spec: RobotTypeSpec, cap: int,
                    epsilon: Optional[float] = None,
                    rng: Optional[random.Random] = None) -> PlanResult:
    """Pick a sub-goal and return the in-map path toward it.

    Each reachable candidate is scored by path cost plus straight-line
    distance from the candidate to the final goal; the straight line is a
    lower bound on the remaining true cost, so with the goal on the map the
    chosen path is the true in-map optimum. With epsilon set, the choice is
    epsilon-greedy over the scored candidates. No usable candidate (nothing
    known, or nothing reachable) degrades to staying put.
    """
    candidates = candidate_subgoals(pmap, current, final_goal, goal_coord, cap)
    scored: List[Tuple[float, float, int, PlanResult]] = []
    for node in candidates:
        result = shortest_path(pmap, current, node, type_spec)
        if result is None:
            continue
        heuristic = point_dist(pmap.nodes[node], goal_coord)
        scored.append((result.cost + heuristic, result.cost, node, result))
    if not scored:
        return PlanResult(path=[current], cost=0.0)
    scored.sort(key=lambda item: item[:3])
    if epsilon is not None and rng is not None:
        return epsilon_greedy_pick([(s[0], s[3]) for s in scored], epsilon, rng)
    return scored[0][3]
