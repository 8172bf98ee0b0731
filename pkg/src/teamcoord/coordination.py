"""Group planning on a shared map: an exact joint-state Dijkstra for small
groups (supported crossings of risky edges priced by the folded cost, paid by
the receiver), greedy pairwise decomposition for larger ones, and sub-goal
assignment scoring that adds straight-line distance to goal plus a weighted
teammate-proximity term."""

from __future__ import annotations

import heapq
import itertools
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .individual import (PlanResult, candidate_subgoals, epsilon_greedy_pick,
                         shortest_path)
from .sensing import PartialMap
from .world import Coord, EdgeSpec, RobotTypeSpec, point_dist

State = Tuple[int, ...]


@dataclass
class PlanStep:
    """One synchronized step of a group plan. Costs are per robot and already
    folded: a supported receiver pays the folded price, its supporter pays
    nothing for standing by."""

    moves: Dict[int, Tuple[int, int]]
    costs: Dict[int, float]
    supports: Tuple[Tuple[int, int], ...] = ()


@dataclass
class GroupPlan:
    """Aligned per-robot paths (equal length, stays pad the short ones), the
    per-robot planned cost, and the synchronized step list."""

    robots: Tuple[int, ...]
    paths: Dict[int, List[int]]
    costs: Dict[int, float]
    steps: List[PlanStep]

    @property
    def total_cost(self) -> float:
        return sum(self.costs.values())


# ---------------------------------------------------------------------------
# teammate relation
# ---------------------------------------------------------------------------


def best_teammate(robot: int, group: Sequence[int],
                  goal_nodes: Dict[int, int],
                  coords: Sequence[Coord]) -> Optional[int]:
    """The group member whose final goal lies closest to this robot's final
    goal (straight line, ties to the smaller robot id). None for singletons."""
    own = coords[goal_nodes[robot]]
    best: Optional[Tuple[float, int]] = None
    for other in group:
        if other == robot:
            continue
        key = (point_dist(own, coords[goal_nodes[other]]), other)
        if best is None or key < best:
            best = key
    return None if best is None else best[1]


def teammate_clusters(group: Sequence[int],
                      teammate: Dict[int, Optional[int]]) -> List[Tuple[int, ...]]:
    """Connected components of the robot graph with an edge {n, teammate[n]}
    for every robot; the proximity term factorizes over these."""
    parent = {n: n for n in group}

    def find(n: int) -> int:
        while parent[n] != n:
            parent[n] = parent[parent[n]]
            n = parent[n]
        return n

    for n in group:
        m = teammate.get(n)
        if m is not None:
            parent[find(m)] = find(n)
    components: Dict[int, List[int]] = {}
    for n in sorted(group):
        components.setdefault(find(n), []).append(n)
    return sorted(tuple(ms) for ms in components.values())


# ---------------------------------------------------------------------------
# exact joint search
# ---------------------------------------------------------------------------


def _move_tables(pmap: PartialMap, positions: Sequence[int],
                 type_specs: Sequence[RobotTypeSpec]):
    """Per robot, per reachable node: [(dst, step cost, edge or None)] with
    the stay first. Restricted to the shared map; risky edges priced
    unsupported here, support folding happens during expansion."""
    tables = []
    for spec in type_specs:
        mult = spec.edge_cost_multiplier
        table: Dict[int, List[Tuple[int, float, Optional[EdgeSpec]]]] = {}
        for node in pmap.nodes:
            entry = [(node, 0.0, None)]
            for neighbor, key in pmap.neighbors(node):
                edge = pmap.edges[key]
                entry.append((neighbor, edge.base_cost * mult, edge))
            table[node] = entry
        tables.append(table)
    return tables


def _best_support_matching(receivers, stayers, type_ids):
    """Max-benefit disjoint pairing of risky-edge receivers with stationed
    stayers. receivers: (index, unsupported cost, edge); stayers: (index,
    node). Returns (benefit, ((receiver_idx, supporter_idx), ...))."""

    def recurse(r_pos: int, used: int) -> Tuple[float, Tuple[Tuple[int, int], ...]]:
        if r_pos == len(receivers):
            return 0.0, ()
        best = recurse(r_pos + 1, used)  # leave this crossing unsupported
        idx, unsupported, edge = receivers[r_pos]
        for bit, (j, node) in enumerate(stayers):
            if used & (1 << bit) or node not in edge.support_nodes:
                continue
            folded = (edge.reduced_cost[type_ids[idx]][type_ids[j]]
                      + edge.support_cost[type_ids[j]])
            gain = unsupported - folded
            if gain <= 1e-12:
                continue
            sub_gain, sub_pairs = recurse(r_pos + 1, used | (1 << bit))
            candidate = (gain + sub_gain, ((idx, j),) + sub_pairs)
            if candidate[0] > best[0] + 1e-12:
                best = candidate
        return best

    return recurse(0, 0)


def _joint_dijkstra(pmap: PartialMap, source: State,
                    type_specs: Sequence[RobotTypeSpec],
                    type_ids: Sequence[int],
                    absorb: Sequence[Optional[int]],
                    targets: Set[State]):
    """Single-source shortest paths over synchronized joint states.

    A robot whose absorb node is set freezes there: once it occupies that
    node (anywhere but in the source state, so a robot starting on its goal
    still gets its first step) it can only stay and cannot serve as a
    supporter. That mirrors how the simulator retires robots that reach
    their final goal. One run prices every requested target, so candidate
    assignments share a single search.
    """
    k = len(source)
    moves = _move_tables(pmap, source, type_specs)
    dist: Dict[State, float] = {source: 0.0}
    parents: Dict[State, tuple] = {}
    settled: Set[State] = set()
    pending = set(targets)
    pending.discard(source)
    heap: List[Tuple[float, State]] = [(0.0, source)]
    stay_only = {node: [(node, 0.0, None)] for node in pmap.nodes}

    while heap and pending:
        cost, state = heapq.heappop(heap)
        if state in settled:
            continue
        settled.add(state)
        pending.discard(state)
        at_source = state == source
        frozen = [absorb[i] is not None and state[i] == absorb[i]
                  and not at_source for i in range(k)]
        options = [stay_only[state[i]] if frozen[i] else moves[i][state[i]]
                   for i in range(k)]
        for joint in itertools.product(*options):
            next_state = tuple(entry[0] for entry in joint)
            if next_state == state:
                continue
            step_costs = [entry[1] for entry in joint]
            receivers = [(i, joint[i][1], joint[i][2]) for i in range(k)
                         if joint[i][2] is not None and joint[i][2].risky]
            supports: Tuple[Tuple[int, int], ...] = ()
            if receivers:
                stayers = [(j, state[j]) for j in range(k)
                           if next_state[j] == state[j] and not frozen[j]]
                if stayers:
                    benefit, supports = _best_support_matching(
                        receivers, stayers, type_ids)
                    for ri, sj in supports:
                        edge = joint[ri][2]
                        step_costs[ri] = (
                            edge.reduced_cost[type_ids[ri]][type_ids[sj]]
                            + edge.support_cost[type_ids[sj]])
            total = cost + sum(step_costs)
            if total < dist.get(next_state, float("inf")) - 1e-15:
                dist[next_state] = total
                parents[next_state] = (state, tuple(step_costs), supports)
                heapq.heappush(heap, (total, next_state))
    return dist, parents


def _recover_plan(robots: Sequence[int], source: State, target: State,
                  parents: Dict[State, tuple]) -> GroupPlan:
    chain = []
    state = target
    while state != source:
        prev, charged, supports = parents[state]
        chain.append((prev, state, charged, supports))
        state = prev
    chain.reverse()

    paths = {robot: [source[i]] for i, robot in enumerate(robots)}
    costs = {robot: 0.0 for robot in robots}
    steps: List[PlanStep] = []
    for prev, state, charged, supports in chain:
        moves = {}
        step_costs = {}
        for i, robot in enumerate(robots):
            moves[robot] = (prev[i], state[i])
            step_costs[robot] = charged[i]
            paths[robot].append(state[i])
            costs[robot] += charged[i]
        pairs = tuple(sorted((robots[ri], robots[sj]) for ri, sj in supports))
        steps.append(PlanStep(moves=moves, costs=step_costs, supports=pairs))
    return GroupPlan(robots=tuple(robots), paths=paths, costs=costs,
                     steps=steps)


def _independent_plan(pmap: PartialMap, robots: Sequence[int],
                      positions: Dict[int, int], subgoals: Dict[int, int],
                      type_specs: Dict[int, RobotTypeSpec],
                      ) -> Optional[GroupPlan]:
    """Per-robot shortest paths glued into one synchronized plan; the
    fallback when joint search is unavailable or over the horizon."""
    solo: Dict[int, PlanResult] = {}
    for robot in robots:
        result = shortest_path(pmap, positions[robot], subgoals[robot],
                               type_specs[robot])
        if result is None:
            return None
        solo[robot] = result
    length = max(len(r.path) for r in solo.values())
    paths = {}
    for robot, result in solo.items():
        padded = result.path + [result.path[-1]] * (length - len(result.path))
        paths[robot] = padded
    steps = []
    for t in range(1, length):
        moves = {r: (paths[r][t - 1], paths[r][t]) for r in robots}
        step_costs = {}
        for robot in robots:
            src, dst = moves[robot]
            if src == dst:
                step_costs[robot] = 0.0
            else:
                key = (src, dst) if src < dst else (dst, src)
                step_costs[robot] = (pmap.edges[key].base_cost
                                     * type_specs[robot].edge_cost_multiplier)
        steps.append(PlanStep(moves=moves, costs=step_costs))
    costs = {robot: solo[robot].cost for robot in robots}
    return GroupPlan(tuple(robots), paths, costs, steps)


def _greedy_pairs(robots: Sequence[int], goal_nodes: Dict[int, int],
                  coords: Sequence[Coord]
                  ) -> Tuple[List[Tuple[int, int]], List[int]]:
    """Greedy matching by ascending straight-line distance between final
    goals; at most one robot stays unpaired."""
    order = sorted(robots)
    candidates = sorted(
        (point_dist(coords[goal_nodes[a]], coords[goal_nodes[b]]), a, b)
        for i, a in enumerate(order) for b in order[i + 1:])
    unused = set(order)
    pairs: List[Tuple[int, int]] = []
    for _, a, b in candidates:
        if a in unused and b in unused:
            pairs.append((a, b))
            unused.discard(a)
            unused.discard(b)
    return pairs, sorted(unused)


def _merge_subplans(subplans: List[GroupPlan]) -> GroupPlan:
    robots = tuple(sorted(r for plan in subplans for r in plan.robots))
    length = max((len(plan.steps) for plan in subplans), default=0)
    paths: Dict[int, List[int]] = {}
    costs: Dict[int, float] = {}
    for plan in subplans:
        for robot in plan.robots:
            padded = plan.paths[robot] + \
                [plan.paths[robot][-1]] * (length - len(plan.steps))
            paths[robot] = padded
            costs[robot] = plan.costs[robot]
    steps = []
    for t in range(length):
        moves: Dict[int, Tuple[int, int]] = {}
        step_costs: Dict[int, float] = {}
        supports: List[Tuple[int, int]] = []
        for plan in subplans:
            if t < len(plan.steps):
                step = plan.steps[t]
                moves.update(step.moves)
                step_costs.update(step.costs)
                supports.extend(step.supports)
            else:
                for robot in plan.robots:
                    last = plan.paths[robot][-1]
                    moves[robot] = (last, last)
                    step_costs[robot] = 0.0
        steps.append(PlanStep(moves=moves, costs=step_costs,
                              supports=tuple(sorted(supports))))
    return GroupPlan(robots, paths, costs, steps)


def solve_joint_paths(pmap: PartialMap, robots: Sequence[int],
                      positions: Dict[int, int], subgoals: Dict[int, int],
                      goal_nodes: Dict[int, int],
                      type_specs: Dict[int, RobotTypeSpec],
                      coords: Sequence[Coord], exact_cap: int = 3,
                      horizon: Optional[int] = None) -> Optional[GroupPlan]:
    """Minimum-cost synchronized paths bringing every robot to its sub-goal.

    Groups up to exact_cap robots are solved exactly on the joint state
    graph; larger groups are decomposed into greedy pairs (by final-goal
    proximity, the same relation the proximity scoring uses) solved exactly,
    plus one solo leftover. Plans longer than the horizon fall back to
    independent shortest paths. Returns None when some sub-goal is
    unreachable in the shared map.
    """
    order = sorted(robots)
    if horizon is None:
        horizon = 3 * len(pmap.nodes)
    if len(order) == 1:
        robot = order[0]
        result = shortest_path(pmap, positions[robot], subgoals[robot],
                               type_specs[robot])
        if result is None:
            return None
        plan = _independent_plan(pmap, order, positions, subgoals, type_specs)
        return plan
    if len(order) <= exact_cap:
        source = tuple(positions[r] for r in order)
        target = tuple(subgoals[r] for r in order)
        specs = [type_specs[r] for r in order]
        ids = [type_specs[r].type_id for r in order]
        absorb = [subgoals[r] if subgoals[r] == goal_nodes[r] else None
                  for r in order]
        dist, parents = _joint_dijkstra(pmap, source, specs, ids, absorb,
                                        {target})
        if target not in dist:
            return None
        plan = _recover_plan(order, source, target, parents)
        if len(plan.steps) > horizon:
            return _independent_plan(pmap, order, positions, subgoals,
                                     type_specs)
        return plan
    pairs, leftover = _greedy_pairs(order, goal_nodes, coords)
    subplans = []
    for pair in pairs:
        sub = solve_joint_paths(pmap, pair, positions, subgoals, goal_nodes,
                                type_specs, coords, exact_cap=exact_cap,
                                horizon=horizon)
        if sub is None:
            return None
        subplans.append(sub)
    for robot in leftover:
        sub = solve_joint_paths(pmap, [robot], positions, subgoals,
                                goal_nodes, type_specs, coords,
                                exact_cap=exact_cap, horizon=horizon)
        if sub is None:
            return None
        subplans.append(sub)
    return _merge_subplans(subplans)


# ---------------------------------------------------------------------------
# sub-goal assignment
# ---------------------------------------------------------------------------


def coordination_plan(pmap: PartialMap, robots: Sequence[int],
                      positions: Dict[int, int], goal_nodes: Dict[int, int],
                      type_specs: Dict[int, RobotTypeSpec],
                      coords: Sequence[Coord], alpha: float = 1.0,
                      subgoal_cap: int = 4, exact_cap: int = 3,
                      horizon: Optional[int] = None,
                      epsilon: Optional[float] = None,
                      rng: Optional[random.Random] = None) -> GroupPlan:
    """Choose one sub-goal per robot and plan jointly toward them.

    Every combination from the per-robot candidate lists is scored as
    (joint path cost) + (straight line from each sub-goal to its robot's
    final goal) + alpha * (straight line between each robot's sub-goal and
    its best teammate's sub-goal). The joint path cost of all combinations
    comes from shared single-source searches (whole group when small enough,
    greedy pairs plus a solo leftover otherwise); the proximity term is
    summed per teammate cluster and memoized. Ties fall to the
    lexicographically smallest assignment; with epsilon set the choice is
    epsilon-greedy over whole assignments.
    """
    order = sorted(robots)
    if horizon is None:
        horizon = 3 * len(pmap.nodes)

    candidates: Dict[int, List[int]] = {}
    for robot in order:
        found = candidate_subgoals(pmap, positions[robot], goal_nodes[robot],
                                   coords[goal_nodes[robot]], subgoal_cap)
        candidates[robot] = found if found else [positions[robot]]

    teammate = {n: best_teammate(n, order, goal_nodes, coords) for n in order}
    clusters = teammate_clusters(order, teammate)

    # joint path cost per assignment, via shared single-source searches
    exact = len(order) <= exact_cap
    if exact:
        source = tuple(positions[r] for r in order)
        specs = [type_specs[r] for r in order]
        ids = [type_specs[r].type_id for r in order]
        absorb = [goal_nodes[r] if goal_nodes[r] in pmap.nodes else None
                  for r in order]
        targets = {tuple(combo) for combo in
                   itertools.product(*(candidates[r] for r in order))}
        dist, parents = _joint_dijkstra(pmap, source, specs, ids, absorb,
                                        targets)

        def path_cost(assignment: Dict[int, int]) -> Optional[float]:
            return dist.get(tuple(assignment[r] for r in order))
    else:
        pairs, leftover = _greedy_pairs(order, goal_nodes, coords)
        pair_dist: List[Tuple[Tuple[int, int], Dict[State, float], dict]] = []
        for a, b in pairs:
            src = (positions[a], positions[b])
            specs = [type_specs[a], type_specs[b]]
            ids = [type_specs[a].type_id, type_specs[b].type_id]
            absorb = [goal_nodes[a] if goal_nodes[a] in pmap.nodes else None,
                      goal_nodes[b] if goal_nodes[b] in pmap.nodes else None]
            targets = {(sa, sb) for sa in candidates[a]
                       for sb in candidates[b]}
            d, p = _joint_dijkstra(pmap, src, specs, ids, absorb, targets)
            pair_dist.append(((a, b), d, p))
        solo_dist: Dict[int, Dict[int, float]] = {}
        for robot in leftover:
            table = {}
            for node in candidates[robot]:
                result = shortest_path(pmap, positions[robot], node,
                                       type_specs[robot])
                if result is not None:
                    table[node] = result.cost
            solo_dist[robot] = table

        def path_cost(assignment: Dict[int, int]) -> Optional[float]:
            total = 0.0
            for (a, b), d, _ in pair_dist:
                part = d.get((assignment[a], assignment[b]))
                if part is None:
                    return None
                total += part
            for robot in leftover:
                part = solo_dist[robot].get(assignment[robot])
                if part is None:
                    return None
                total += part
            return total

    goal_pull = {
        robot: {node: point_dist(coords[node], coords[goal_nodes[robot]])
                for node in candidates[robot]}
        for robot in order
    }

    cluster_cache: List[Dict[Tuple[int, ...], float]] = [
        {} for _ in clusters]

    def proximity(assignment: Dict[int, int]) -> float:
        total = 0.0
        for ci, cluster in enumerate(clusters):
            key = tuple(assignment[r] for r in cluster)
            cached = cluster_cache[ci].get(key)
            if cached is None:
                cached = 0.0
                for robot in cluster:
                    m = teammate[robot]
                    if m is not None:
                        cached += point_dist(coords[assignment[robot]],
                                             coords[assignment[m]])
                cluster_cache[ci][key] = cached
            total += cached
        return total

    scored: List[Tuple[float, Tuple[int, ...]]] = []
    for combo in itertools.product(*(candidates[r] for r in order)):
        assignment = dict(zip(order, combo))
        base = path_cost(assignment)
        if base is None:
            continue
        score = base + sum(goal_pull[r][assignment[r]] for r in order)
        if alpha:
            score += alpha * proximity(assignment)
        scored.append((score, combo))
    if not scored:
        # nothing reachable: everybody holds position
        return GroupPlan(
            robots=tuple(order),
            paths={r: [positions[r]] for r in order},
            costs={r: 0.0 for r in order},
            steps=[])
    scored.sort(key=lambda item: (item[0], item[1]))
    if epsilon is not None and rng is not None:
        chosen = epsilon_greedy_pick(scored, epsilon, rng)
    else:
        chosen = scored[0][1]
    assignment = dict(zip(order, chosen))

    if exact:
        target = tuple(chosen)
        plan = _recover_plan(order, source, target, parents)
        if len(plan.steps) > horizon:
            fallback = _independent_plan(pmap, order, positions, assignment,
                                         type_specs)
            if fallback is not None:
                plan = fallback
        return plan
    subplans = []
    for (a, b), d, p in pair_dist:
        src = (positions[a], positions[b])
        target = (assignment[a], assignment[b])
        sub = _recover_plan([a, b], src, target, p)
        if len(sub.steps) > horizon:
            fb = _independent_plan(pmap, [a, b], positions,
                                   {a: assignment[a], b: assignment[b]},
                                   type_specs)
            if fb is not None:
                sub = fb
        subplans.append(sub)
    for robot in leftover:
        sub = _independent_plan(pmap, [robot], positions,
                                {robot: assignment[robot]}, type_specs)
        subplans.append(sub)
    return _merge_subplans(subplans)
