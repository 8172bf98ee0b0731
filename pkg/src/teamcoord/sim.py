"""Synchronized execution loop: sense, form groups, plan (with caching so
planners only rerun when a robot's effective map or group changed), execute
one edge per robot per step, and validate the produced trace against the
movement/coordination/communication constraints."""

from __future__ import annotations

import io
import csv
import random
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .coordination import GroupPlan, PlanStep, coordination_plan
from .individual import individual_plan
from .sensing import (HandshakeEntry, PartialMap, RobotGroup, build_groups,
                      empty_map, merge_maps, sense, update_map)
from .world import (ScenarioConfig, WorldGraph, edge_cost,
                    folded_support_cost)

VARIANTS = ("naive", "full", "no_c3", "epsilon")


class PlanIntegrityError(RuntimeError):
    """A plan step contradicts the world or the executed state."""


@dataclass
class MoveRecord:
    robot: int
    src: int
    dst: int
    cost: float
    support_role: int  # +1 receiver, -1 supporter, 0 neither
    partner: int       # robot id, -1 when support_role == 0
    group_id: int
    planless: bool     # stayed for lack of anything to execute


@dataclass
class StepRecord:
    t: int
    groups: List[Tuple[int, ...]]
    moves: List[MoveRecord]
    messages: List[HandshakeEntry]


@dataclass
class RunResult:
    variant: str
    paths: Dict[int, List[int]]
    total_cost: float
    steps_used: int
    truncated: bool
    records: List[StepRecord]
    messages_sent: int
    runtime_s: float


@dataclass
class _CachedPlan:
    plan: GroupPlan
    cursor: int
    map_signature: Tuple[int, int, int]


def _solo_plan(robot: int, pmap: PartialMap, position: int, goal: int,
               scenario: ScenarioConfig, epsilon: Optional[float],
               rng: Optional[random.Random]) -> GroupPlan:
    spec = scenario.graph.type_spec(scenario.robots[robot].type_id)
    result = individual_plan(pmap, position, goal,
                             scenario.graph.nodes[goal], spec,
                             scenario.subgoal_cap, epsilon=epsilon, rng=rng)
    path = result.path
    steps = []
    for i in range(1, len(path)):
        src, dst = path[i - 1], path[i]
        key = (src, dst) if src < dst else (dst, src)
        cost = pmap.edges[key].base_cost * spec.edge_cost_multiplier
        steps.append(PlanStep(moves={robot: (src, dst)},
                              costs={robot: cost}))
    return GroupPlan(robots=(robot,), paths={robot: list(path)},
                     costs={robot: result.cost}, steps=steps)


def _plan_for_group(group: RobotGroup, positions: Dict[int, int],
                    scenario: ScenarioConfig, variant: str,
                    rngs: Dict[int, random.Random]) -> GroupPlan:
    epsilon = scenario.epsilon if variant == "epsilon" else None
    graph = scenario.graph
    members = group.members
    if len(members) == 1:
        robot = members[0]
        rng = rngs[robot] if epsilon is not None else None
        return _solo_plan(robot, group.shared_map, positions[robot],
                          scenario.robots[robot].goal, scenario, epsilon, rng)
    goal_nodes = {n: scenario.robots[n].goal for n in members}
    type_specs = {n: graph.type_spec(scenario.robots[n].type_id)
                  for n in members}
    alpha = 0.0 if variant == "no_c3" else scenario.alpha
    rng = rngs[min(members)] if epsilon is not None else None
    return coordination_plan(
        group.shared_map, members, positions, goal_nodes, type_specs,
        graph.nodes, alpha=alpha, subgoal_cap=scenario.subgoal_cap,
        exact_cap=scenario.exact_group_cap,
        horizon=3 * len(group.shared_map.nodes),
        epsilon=epsilon, rng=rng)


def _cheapest_known_step(pmap: PartialMap, position: int,
                         multiplier: float) -> Optional[Tuple[int, float]]:
    best: Optional[Tuple[float, int]] = None
    for neighbor, key in pmap.neighbors(position):
        cost = pmap.edges[key].base_cost * multiplier
        if best is None or (cost, neighbor) < best:
            best = (cost, neighbor)
    return None if best is None else (best[1], best[0])


_DEADLOCK_PATIENCE = 3


def run(scenario: ScenarioConfig, variant: str = "full") -> RunResult:
    """Execute one scenario under a planner variant.

    naive   - no communication at all: every robot plans alone on its own map
    full    - group planning with map sharing, support, and proximity term
    no_c3   - full with the teammate-proximity term weighted zero
    epsilon - full with epsilon-greedy sub-goal selection

    Steps are numbered from 1; the run stops once every robot sits on its
    goal or after time_limit steps (then truncated). A robot is retired at
    the end of the step in which it reaches its goal, so it can still lend
    support during that step but never afterwards.
    """
    if variant not in VARIANTS:
        raise ValueError("unknown variant %r" % (variant,))
    started = time.perf_counter()
    graph = scenario.graph
    robots = list(range(len(scenario.robots)))
    types = {n: scenario.robots[n].type_id for n in robots}
    goal_nodes = {n: scenario.robots[n].goal for n in robots}
    positions = {n: scenario.robots[n].start for n in robots}
    maps: Dict[int, PartialMap] = {n: empty_map() for n in robots}
    rngs = {n: random.Random(scenario.seed * 1_000_003 + 17 * n + 11)
            for n in robots}
    done: Set[int] = set()
    paths = {n: [positions[n]] for n in robots}
    plan_cache: Dict[frozenset, _CachedPlan] = {}
    records: List[StepRecord] = []
    total_cost = 0.0
    messages_sent = 0
    stalled_steps = 0
    steps_used = 0

    for t in range(1, scenario.time_limit + 1):
        active = [n for n in robots if n not in done]
        if not active:
            break
        steps_used = t

        for n in active:
            observation = sense(graph, positions[n], types[n],
                                scenario.sensing_factor)
            maps[n] = update_map(maps[n], observation)

        if variant == "naive":
            groups = [RobotGroup((n,), maps[n]) for n in active]
            log: List[HandshakeEntry] = []
        else:
            groups, log = build_groups(positions, active, types, maps,
                                       graph, scenario.communication_factor)
            for group in groups:
                for n in group.members:
                    maps[n] = group.shared_map
        messages_sent += len(log)

        moves: List[MoveRecord] = []
        if stalled_steps >= _DEADLOCK_PATIENCE:
            # nobody has had anywhere to go for a while: nudge every robot
            # along its cheapest known edge to force new observations
            group_of = {n: gi for gi, g in enumerate(groups)
                        for n in g.members}
            for n in active:
                spec = graph.type_spec(types[n])
                step = _cheapest_known_step(maps[n], positions[n],
                                            spec.edge_cost_multiplier)
                if step is None:
                    moves.append(MoveRecord(n, positions[n], positions[n],
                                            0.0, 0, -1, group_of[n], True))
                else:
                    neighbor, cost = step
                    moves.append(MoveRecord(n, positions[n], neighbor, cost,
                                            0, -1, group_of[n], False))
            stalled_steps = 0
        else:
            for gi, group in enumerate(groups):
                key = frozenset(group.members)
                signature = group.shared_map.signature()
                cache = plan_cache.get(key)
                stale = (cache is None
                         or cache.map_signature != signature
                         or (cache.cursor >= len(cache.plan.steps)
                             and cache.plan.steps))
                if not stale and cache.cursor < len(cache.plan.steps):
                    step = cache.plan.steps[cache.cursor]
                    if any(step.moves[n][0] != positions[n]
                           for n in group.members):
                        stale = True
                if stale:
                    plan = _plan_for_group(group, positions, scenario,
                                           variant, rngs)
                    cache = _CachedPlan(plan, 0, signature)
                    plan_cache[key] = cache
                if cache.cursor >= len(cache.plan.steps):
                    for n in group.members:
                        moves.append(MoveRecord(n, positions[n], positions[n],
                                                0.0, 0, -1, gi, True))
                    continue
                step = cache.plan.steps[cache.cursor]
                cache.cursor += 1
                supporter_for = {r: s for r, s in step.supports}
                receiver_for = {s: r for r, s in step.supports}
                for n in group.members:
                    src, dst = step.moves[n]
                    if src != positions[n]:
                        raise PlanIntegrityError(
                            "robot %d plans from %d but stands at %d"
                            % (n, src, positions[n]))
                    role, partner = 0, -1
                    if n in supporter_for:
                        role, partner = 1, supporter_for[n]
                    elif n in receiver_for:
                        role, partner = -1, receiver_for[n]
                    cost = _price_move(graph, types, n, src, dst, role,
                                       partner, step, scenario)
                    moves.append(MoveRecord(n, src, dst, cost, role, partner,
                                            gi, False))

        moves.sort(key=lambda m: m.robot)
        for record in moves:
            positions[record.robot] = record.dst
            paths[record.robot].append(record.dst)
            total_cost += record.cost
        records.append(StepRecord(t=t, groups=[g.members for g in groups],
                                  moves=moves, messages=log))

        if all(m.planless for m in moves):
            stalled_steps += 1
        else:
            stalled_steps = 0

        for n in active:
            if positions[n] == goal_nodes[n]:
                done.add(n)
        if len(done) == len(robots):
            break

    truncated = len(done) != len(robots)
    return RunResult(variant=variant, paths=paths, total_cost=total_cost,
                     steps_used=steps_used, truncated=truncated,
                     records=records, messages_sent=messages_sent,
                     runtime_s=time.perf_counter() - started)


def _price_move(graph: WorldGraph, types: Dict[int, int], robot: int,
                src: int, dst: int, role: int, partner: int, step: PlanStep,
                scenario: ScenarioConfig) -> float:
    """Execution-time pricing of one move, from the ground-truth tables: a
    plain move pays the per-type edge cost, a supported receiver pays the
    folded cost, a supporter stands still for free."""
    if src == dst:
        if role == 1:
            raise PlanIntegrityError("receiver %d does not move" % robot)
        return 0.0
    edge = graph.edge_between(src, dst)
    if edge is None:
        raise PlanIntegrityError("robot %d uses missing edge %d-%d"
                                 % (robot, src, dst))
    if role == -1:
        raise PlanIntegrityError("supporter %d must stay put" % robot)
    if role == 1:
        supporter_pos = step.moves[partner][0]
        if step.moves[partner][1] != supporter_pos:
            raise PlanIntegrityError("supporter %d is not stationary"
                                     % partner)
        if supporter_pos not in edge.support_nodes:
            raise PlanIntegrityError(
                "supporter %d stands at %d, not a support node of %d-%d"
                % (partner, supporter_pos, src, dst))
        return folded_support_cost(graph, edge, types[robot], types[partner])
    return edge_cost(graph, edge, types[robot])


def run_naive(scenario: ScenarioConfig) -> RunResult:
    return run(scenario, "naive")


# ---------------------------------------------------------------------------
# trace validation
# ---------------------------------------------------------------------------


def validate(scenario: ScenarioConfig, result: RunResult) -> List[str]:
    """Replay a trace against the movement, coordination, communication,
    pricing, and stagnation rules. Returns human-readable violations; an
    empty list means the trace is consistent."""
    graph = scenario.graph
    robots = list(range(len(scenario.robots)))
    types = {n: scenario.robots[n].type_id for n in robots}
    positions = {n: scenario.robots[n].start for n in robots}
    done: Set[int] = set()
    issues: List[str] = []

    for record in result.records:
        t = record.t
        active = {n for n in robots if n not in done}
        seen = {m.robot for m in record.moves}
        if seen != active:
            issues.append("step %d: moves cover %s, active set is %s"
                          % (t, sorted(seen), sorted(active)))
        membership: Dict[int, int] = {}
        for gi, members in enumerate(record.groups):
            for n in members:
                if n in membership:
                    issues.append("step %d: robot %d in two groups" % (t, n))
                membership[n] = gi

        by_robot = {m.robot: m for m in record.moves}
        for s, r, kind in record.messages:
            if kind == "confirm":
                stages = {k for a, b, k in record.messages
                          if (a, b) == (s, r) or (a, b) == (r, s)}
                if not {"hello", "reply"} <= stages:
                    issues.append("step %d: confirm %d-%d without handshake"
                                  % (t, s, r))

        moved_any = False
        planned_stay = False
        for move in record.moves:
            n = move.robot
            if move.src != positions.get(n):
                issues.append("step %d: robot %d departs %d, stood at %s"
                              % (t, n, move.src, positions.get(n)))
            if membership.get(n) != move.group_id:
                issues.append("step %d: robot %d group_id mismatch" % (t, n))
            if move.src != move.dst:
                moved_any = True
                edge = graph.edge_between(move.src, move.dst)
                if edge is None:
                    issues.append("step %d: robot %d uses missing edge %d-%d"
                                  % (t, n, move.src, move.dst))
                    continue
            else:
                edge = None
                if not move.planless:
                    planned_stay = True

            partner_move = by_robot.get(move.partner)
            if move.support_role == 0:
                expected = 0.0 if edge is None else edge_cost(
                    graph, edge, types[n])
                if abs(move.cost - expected) > 1e-9:
                    issues.append("step %d: robot %d cost %r, expected %r"
                                  % (t, n, move.cost, expected))
            elif move.support_role == 1:
                if edge is None or not edge.risky:
                    issues.append("step %d: receiver %d not on a risky edge"
                                  % (t, n))
                    continue
                if partner_move is None or \
                        partner_move.support_role != -1 or \
                        partner_move.partner != n:
                    issues.append("step %d: receiver %d has no matching "
                                  "supporter" % (t, n))
                    continue
                if membership.get(n) != membership.get(move.partner):
                    issues.append("step %d: support pair %d-%d spans groups"
                                  % (t, n, move.partner))
                if partner_move.src != partner_move.dst:
                    issues.append("step %d: supporter %d moved" %
                                  (t, move.partner))
                if partner_move.src not in edge.support_nodes:
                    issues.append("step %d: supporter %d not on a support "
                                  "node" % (t, move.partner))
                expected = folded_support_cost(graph, edge, types[n],
                                               types[move.partner])
                if abs(move.cost - expected) > 1e-9:
                    issues.append("step %d: receiver %d cost %r, expected %r"
                                  % (t, n, move.cost, expected))
            elif move.support_role == -1:
                if move.src != move.dst:
                    issues.append("step %d: supporter %d moved" % (t, n))
                if move.cost != 0.0:
                    issues.append("step %d: supporter %d charged %r"
                                  % (t, n, move.cost))
                if partner_move is None or partner_move.support_role != 1 \
                        or partner_move.partner != n:
                    issues.append("step %d: supporter %d has no matching "
                                  "receiver" % (t, n))
            else:
                issues.append("step %d: robot %d has support_role %r"
                              % (t, n, move.support_role))

        if record.moves and not moved_any and planned_stay:
            issues.append("step %d: every active robot stayed although "
                          "some had a plan" % t)

        for move in record.moves:
            positions[move.robot] = move.dst
        for n in list(active):
            if positions[n] == scenario.robots[n].goal:
                done.add(n)

    for n in robots:
        if result.paths[n][0] != scenario.robots[n].start:
            issues.append("robot %d path does not begin at its start" % n)
    if not result.truncated:
        for n in robots:
            if positions[n] != scenario.robots[n].goal:
                issues.append("robot %d finished at %d, goal is %d"
                              % (n, positions[n], scenario.robots[n].goal))
    return issues


# ---------------------------------------------------------------------------
# trace serialization
# ---------------------------------------------------------------------------


def trace_csv(result: RunResult) -> str:
    """Canonical per-move trace; deterministic runs serialize to identical
    bytes, so this is also the determinism probe."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["t", "robot", "from", "to", "cost", "support_role",
                     "partner", "group_id"])
    for record in result.records:
        for move in record.moves:
            writer.writerow([record.t, move.robot, move.src, move.dst,
                             repr(move.cost), move.support_role, move.partner,
                             move.group_id])
    return out.getvalue()


def handshake_csv(result: RunResult) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["step", "sender", "receiver", "message"])
    for record in result.records:
        for sender, receiver, message in record.messages:
            writer.writerow([record.t, sender, receiver, message])
    return out.getvalue()
