"""Ground-truth world model: embedded graphs whose risky edges become cheap
when a teammate stands on a designated support node, per-type traversal
pricing, and the seeded scenario generator behind the experiment harness."""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

Coord = Tuple[float, float]

# Generator constants. Risky edges are priced an order of magnitude above the
# jittered geometric cost so that a supported crossing is always the better
# deal for every type pair produced here.
RISKY_COST_FACTOR = 10.0
BASE_COST_JITTER = (1.0, 2.0)
TYPE_MULTIPLIER_RANGE = (1.0, 1.5)
TYPE_COEFFICIENT_RANGE = (0.8, 1.2)
MAX_SUPPORT_NODES = 2


class GenerationError(ValueError):
    """Requested scenario parameters cannot produce a valid world."""


class ScenarioFormatError(ValueError):
    """A scenario file is malformed; message names the offending field."""


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RobotTypeSpec:
    """One robot type: traversal pricing plus sensing/transmission reach."""

    type_id: int
    edge_cost_multiplier: float = 1.0
    sensing_coefficient: float = 1.0
    transmission_coefficient: float = 1.0

    def __post_init__(self) -> None:
        # multiplier >= 1 keeps straight-line distance an admissible bound
        if self.edge_cost_multiplier < 1.0:
            raise ValueError("edge_cost_multiplier must be >= 1.0")
        if self.sensing_coefficient <= 0.0:
            raise ValueError("sensing_coefficient must be positive")
        if self.transmission_coefficient <= 0.0:
            raise ValueError("transmission_coefficient must be positive")


@dataclass(frozen=True)
class EdgeSpec:
    """Undirected edge. Risky edges carry the support machinery: the nodes a
    helper may stand on, the reduced crossing cost per (receiver, supporter)
    type pair, and the supporter's one-step cost per supporter type."""

    u: int
    v: int
    base_cost: float
    risky: bool = False
    support_nodes: Tuple[int, ...] = ()
    reduced_cost: Tuple[Tuple[float, ...], ...] = ()
    support_cost: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.u == self.v:
            raise ValueError("self-loop edges are not allowed")
        if self.base_cost <= 0.0:
            raise ValueError("base_cost must be positive")
        if self.u > self.v:  # canonical orientation, endpoints sorted
            low, high = self.v, self.u
            object.__setattr__(self, "u", low)
            object.__setattr__(self, "v", high)
        if self.risky:
            if not self.support_nodes:
                raise ValueError("risky edge needs at least one support node")
            if self.u in self.support_nodes or self.v in self.support_nodes:
                raise ValueError("support nodes must not be edge endpoints")
        elif self.support_nodes or self.reduced_cost or self.support_cost:
            raise ValueError("support data on a non-risky edge")

    @property
    def key(self) -> Tuple[int, int]:
        return (self.u, self.v)

    def other(self, node: int) -> int:
        return self.v if node == self.u else self.u


@dataclass(frozen=True)
class RobotSpec:
    type_id: int
    start: int
    goal: int


class WorldGraph:
    """Immutable embedded graph plus the robot-type table.

    Adjacency is prebuilt; instances are shared read-only between planner
    calls and worker processes.
    """

    def __init__(self, nodes: Sequence[Coord], edges: Sequence[EdgeSpec],
                 robot_types: Sequence[RobotTypeSpec]):
        self.nodes: List[Coord] = [(float(x), float(y)) for x, y in nodes]
        self.edges: List[EdgeSpec] = list(edges)
        self.robot_types: List[RobotTypeSpec] = list(robot_types)
        if not self.nodes:
            raise ValueError("graph needs at least one node")
        if not self.robot_types:
            raise ValueError("graph needs at least one robot type")
        for h, spec in enumerate(self.robot_types):
            if spec.type_id != h:
                raise ValueError("robot_types must be ordered by type_id")
        n = len(self.nodes)
        num_types = len(self.robot_types)
        self._adj: Dict[int, List[Tuple[int, int]]] = {i: [] for i in range(n)}
        self._edge_index: Dict[Tuple[int, int], int] = {}
        for idx, edge in enumerate(self.edges):
            if not (0 <= edge.u < n and 0 <= edge.v < n):
                raise ValueError("edge endpoint out of range: %r" % (edge.key,))
            if edge.key in self._edge_index:
                raise ValueError("duplicate edge %r" % (edge.key,))
            if edge.risky:
                for s in edge.support_nodes:
                    if not 0 <= s < n:
                        raise ValueError("support node out of range: %d" % s)
                if len(edge.reduced_cost) != num_types or any(
                        len(row) != num_types for row in edge.reduced_cost):
                    raise ValueError("reduced_cost table must be H x H")
                if len(edge.support_cost) != num_types:
                    raise ValueError("support_cost table must have H entries")
            self._edge_index[edge.key] = idx
            self._adj[edge.u].append((edge.v, idx))
            self._adj[edge.v].append((edge.u, idx))
        for i in self._adj:
            self._adj[i].sort()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WorldGraph):
            return NotImplemented
        return (self.nodes == other.nodes and self.edges == other.edges
                and self.robot_types == other.robot_types)

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    def type_spec(self, type_id: int) -> RobotTypeSpec:
        if not 0 <= type_id < len(self.robot_types):
            raise ValueError("unknown robot type %r" % (type_id,))
        return self.robot_types[type_id]

    def neighbors(self, node: int) -> List[Tuple[int, int]]:
        """(neighbor, edge index) pairs, sorted by neighbor id."""
        return self._adj[node]

    def edge_between(self, u: int, v: int) -> Optional[EdgeSpec]:
        idx = self._edge_index.get((u, v) if u < v else (v, u))
        return None if idx is None else self.edges[idx]

    def move_cost(self, u: int, v: int, type_id: int) -> float:
        """Cost of one step u -> v for a robot type; staying is free."""
        if u == v:
            return 0.0
        edge = self.edge_between(u, v)
        if edge is None:
            raise ValueError("no edge between %d and %d" % (u, v))
        return edge_cost(self, edge, type_id)


@dataclass
class ScenarioConfig:
    """One runnable problem instance: world, robots, and run parameters."""

    graph: WorldGraph
    robots: List[RobotSpec]
    sensing_factor: float
    communication_factor: float
    time_limit: int
    alpha: float = 1.0
    epsilon: float = 0.9
    subgoal_cap: int = 4
    exact_group_cap: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        n = self.graph.num_nodes
        if not self.robots:
            raise ValueError("scenario needs at least one robot")
        for i, robot in enumerate(self.robots):
            self.graph.type_spec(robot.type_id)
            if not (0 <= robot.start < n and 0 <= robot.goal < n):
                raise ValueError("robot %d start/goal out of range" % i)
        if self.time_limit < 1:
            raise ValueError("time_limit must be >= 1")
        if self.subgoal_cap < 1:
            raise ValueError("subgoal_cap must be >= 1")
        if self.exact_group_cap < 1:
            raise ValueError("exact_group_cap must be >= 1")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")


# ---------------------------------------------------------------------------
# geometry and pricing
# ---------------------------------------------------------------------------


def point_dist(a: Coord, b: Coord) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def euclid(graph: WorldGraph, a: int, b: int) -> float:
    """Straight-line distance between two nodes of the embedding."""
    return point_dist(graph.nodes[a], graph.nodes[b])


def graph_length(graph: WorldGraph) -> float:
    """Diagonal of the bounding box of the node embedding."""
    xs = [p[0] for p in graph.nodes]
    ys = [p[1] for p in graph.nodes]
    return math.hypot(max(xs) - min(xs), max(ys) - min(ys))


def edge_cost(graph: WorldGraph, edge: EdgeSpec, type_id: int) -> float:
    """Unsupported traversal cost of an edge for one robot type."""
    return edge.base_cost * graph.type_spec(type_id).edge_cost_multiplier


def folded_support_cost(graph: WorldGraph, edge: EdgeSpec,
                        receiver_type: int, supporter_type: int) -> float:
    """Total price of a supported crossing, folded onto the receiver: the
    receiver's reduced cost plus the supporter's one-step support cost."""
    if not edge.risky:
        raise ValueError("edge %r is not risky" % (edge.key,))
    graph.type_spec(receiver_type)
    graph.type_spec(supporter_type)
    return (edge.reduced_cost[receiver_type][supporter_type]
            + edge.support_cost[supporter_type])


# ---------------------------------------------------------------------------
# scenario generation
# ---------------------------------------------------------------------------


def generate_scenario(num_nodes: int, edge_density: float,
                      risky_fraction: float, num_robots: int,
                      num_types: int = 1,
                      type_assignment: Optional[Sequence[int]] = None,
                      sensing_factor: float = 0.4,
                      communication_factor: float = 0.4,
                      seed: int = 0) -> ScenarioConfig:
    """Build a random connected scenario, deterministic in its arguments.

    Nodes are embedded uniformly in the unit square. A random spanning tree
    guarantees connectivity, then edges are added up to
    round(edge_density * n * (n - 1) / 2). A risky_fraction share of edges is
    repriced by RISKY_COST_FACTOR and given support nodes near the midpoint.
    Robots default to round-robin type assignment.
    """
    if num_nodes < 2:
        raise GenerationError("num_nodes must be >= 2")
    if not 0.0 <= edge_density <= 1.0:
        raise GenerationError("edge_density must lie in [0, 1]")
    if not 0.0 <= risky_fraction <= 1.0:
        raise GenerationError("risky_fraction must lie in [0, 1]")
    if num_robots < 1:
        raise GenerationError("num_robots must be >= 1")
    if num_robots > num_nodes:
        raise GenerationError("num_robots must not exceed num_nodes")
    if num_types < 1:
        raise GenerationError("num_types must be >= 1")
    if type_assignment is not None:
        if len(type_assignment) != num_robots:
            raise GenerationError("type_assignment length != num_robots")
        if any(not 0 <= t < num_types for t in type_assignment):
            raise GenerationError("type_assignment references unknown type")

    rng = random.Random(seed)
    n = num_nodes
    coords: List[Coord] = [(rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0))
                           for _ in range(n)]

    robot_types = [
        RobotTypeSpec(
            type_id=h,
            edge_cost_multiplier=rng.uniform(*TYPE_MULTIPLIER_RANGE),
            sensing_coefficient=rng.uniform(*TYPE_COEFFICIENT_RANGE),
            transmission_coefficient=rng.uniform(*TYPE_COEFFICIENT_RANGE),
        )
        for h in range(num_types)
    ]

    target_edges = round(edge_density * n * (n - 1) / 2)
    if target_edges < n - 1:
        raise GenerationError(
            "edge_density %.3f gives %d edges, below the %d needed for "
            "connectivity" % (edge_density, target_edges, n - 1))

    # random spanning tree first, then top up with random extra pairs
    order = rng.sample(range(n), n)
    chosen: List[Tuple[int, int]] = []
    for i in range(1, n):
        a, b = order[i], order[rng.randrange(i)]
        chosen.append((a, b) if a < b else (b, a))
    tree = set(chosen)
    pool = [(u, v) for u in range(n) for v in range(u + 1, n)
            if (u, v) not in tree]
    chosen.extend(rng.sample(pool, target_edges - len(chosen)))

    base_costs = [point_dist(coords[u], coords[v]) * rng.uniform(*BASE_COST_JITTER)
                  for u, v in chosen]

    risky_count = round(risky_fraction * target_edges)
    risky_idx = set(rng.sample(range(target_edges), risky_count))

    multipliers = [t.edge_cost_multiplier for t in robot_types]
    edges: List[EdgeSpec] = []
    for idx, (u, v) in enumerate(chosen):
        if idx not in risky_idx:
            edges.append(EdgeSpec(u, v, base_costs[idx]))
            continue
        pool_nodes = [w for w in range(n) if w != u and w != v]
        if not pool_nodes:
            raise GenerationError("risky edge has no candidate support node")
        mid = ((coords[u][0] + coords[v][0]) / 2.0,
               (coords[u][1] + coords[v][1]) / 2.0)
        pool_nodes.sort(key=lambda w: (point_dist(coords[w], mid), w))
        count = min(rng.randint(1, MAX_SUPPORT_NODES), len(pool_nodes))
        support = tuple(sorted(pool_nodes[:count]))
        pre_risk = base_costs[idx]
        reduced = tuple(
            tuple(pre_risk * (multipliers[r] + multipliers[s]) / 2.0
                  for s in range(num_types))
            for r in range(num_types))
        # supporter's fee bounded by half the cheapest reduced crossing it
        # could assist, so folded cost stays below every unsupported price
        support_fee = tuple(
            rng.uniform(0.0, 0.5 * min(reduced[r][s] for r in range(num_types)))
            for s in range(num_types))
        edges.append(EdgeSpec(u, v, pre_risk * RISKY_COST_FACTOR, risky=True,
                              support_nodes=support, reduced_cost=reduced,
                              support_cost=support_fee))

    starts = rng.sample(range(n), num_robots)
    goals: Optional[List[int]] = None
    for _ in range(200):
        attempt = rng.sample(range(n), num_robots)
        if all(g != s for g, s in zip(attempt, starts)):
            goals = attempt
            break
    if goals is None:
        for shift in range(1, num_robots):
            attempt = starts[shift:] + starts[:shift]
            if all(g != s for g, s in zip(attempt, starts)):
                goals = attempt
                break
    if goals is None:
        raise GenerationError("could not sample distinct start/goal pairs")

    if type_assignment is None:
        type_assignment = [i % num_types for i in range(num_robots)]
    robots = [RobotSpec(type_assignment[i], starts[i], goals[i])
              for i in range(num_robots)]

    graph = WorldGraph(coords, edges, robot_types)
    return ScenarioConfig(graph=graph, robots=robots,
                          sensing_factor=sensing_factor,
                          communication_factor=communication_factor,
                          time_limit=10 * num_nodes, seed=seed)


# ---------------------------------------------------------------------------
# scenario files
# ---------------------------------------------------------------------------


def scenario_to_dict(config: ScenarioConfig) -> dict:
    graph = config.graph
    return {
        "nodes": [[x, y] for x, y in graph.nodes],
        "edges": [
            {
                "u": e.u,
                "v": e.v,
                "base_cost": e.base_cost,
                "risky": e.risky,
                "support_nodes": list(e.support_nodes),
                "reduced_cost": [list(row) for row in e.reduced_cost],
                "support_cost": list(e.support_cost),
            }
            for e in graph.edges
        ],
        "robot_types": [
            {
                "type_id": t.type_id,
                "edge_cost_multiplier": t.edge_cost_multiplier,
                "sensing_coefficient": t.sensing_coefficient,
                "transmission_coefficient": t.transmission_coefficient,
            }
            for t in graph.robot_types
        ],
        "robots": [
            {"type": r.type_id, "start": r.start, "goal": r.goal}
            for r in config.robots
        ],
        "params": {
            "sensing_factor": config.sensing_factor,
            "communication_factor": config.communication_factor,
            "T": config.time_limit,
            "alpha": config.alpha,
            "epsilon": config.epsilon,
            "K": config.subgoal_cap,
            "J_max": config.exact_group_cap,
            "seed": config.seed,
        },
    }


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ScenarioFormatError("%s: missing '%s'" % (where, key))
    return mapping[key]


def scenario_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ScenarioFormatError("top level: expected a mapping")
    nodes = _require(data, "nodes", "top level")
    raw_edges = _require(data, "edges", "top level")
    raw_types = _require(data, "robot_types", "top level")
    raw_robots = _require(data, "robots", "top level")
    params = _require(data, "params", "top level")

    try:
        coords = [(float(x), float(y)) for x, y in nodes]
    except (TypeError, ValueError) as exc:
        raise ScenarioFormatError("nodes: expected [x, y] pairs") from exc

    edges = []
    for i, raw in enumerate(raw_edges):
        where = "edges[%d]" % i
        edges.append(EdgeSpec(
            u=int(_require(raw, "u", where)),
            v=int(_require(raw, "v", where)),
            base_cost=float(_require(raw, "base_cost", where)),
            risky=bool(_require(raw, "risky", where)),
            support_nodes=tuple(_require(raw, "support_nodes", where)),
            reduced_cost=tuple(tuple(float(c) for c in row)
                               for row in _require(raw, "reduced_cost", where)),
            support_cost=tuple(float(c)
                               for c in _require(raw, "support_cost", where)),
        ))

    types = []
    for i, raw in enumerate(raw_types):
        where = "robot_types[%d]" % i
        types.append(RobotTypeSpec(
            type_id=int(_require(raw, "type_id", where)),
            edge_cost_multiplier=float(
                _require(raw, "edge_cost_multiplier", where)),
            sensing_coefficient=float(
                _require(raw, "sensing_coefficient", where)),
            transmission_coefficient=float(
                _require(raw, "transmission_coefficient", where)),
        ))

    robots = []
    for i, raw in enumerate(raw_robots):
        where = "robots[%d]" % i
        robots.append(RobotSpec(
            type_id=int(_require(raw, "type", where)),
            start=int(_require(raw, "start", where)),
            goal=int(_require(raw, "goal", where)),
        ))

    where = "params"
    try:
        return ScenarioConfig(
            graph=WorldGraph(coords, edges, types),
            robots=robots,
            sensing_factor=float(_require(params, "sensing_factor", where)),
            communication_factor=float(
                _require(params, "communication_factor", where)),
            time_limit=int(_require(params, "T", where)),
            alpha=float(_require(params, "alpha", where)),
            epsilon=float(_require(params, "epsilon", where)),
            subgoal_cap=int(_require(params, "K", where)),
            exact_group_cap=int(_require(params, "J_max", where)),
            seed=int(_require(params, "seed", where)),
        )
    except ValueError as exc:
        raise ScenarioFormatError("scenario invalid: %s" % exc) from exc


def save_scenario(config: ScenarioConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(config), fh, indent=2)
        fh.write("\n")


def load_scenario(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioFormatError(
                "%s: not valid JSON (line %d)" % (path, exc.lineno)) from exc
    return scenario_from_dict(data)
