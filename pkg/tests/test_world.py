"""World model tests: edge/type validation, pricing, generator invariants,
and the scenario file round trip."""

from __future__ import annotations

import math
import random

import pytest

from teamcoord.world import (BASE_COST_JITTER, MAX_SUPPORT_NODES,
                             RISKY_COST_FACTOR, EdgeSpec, GenerationError,
                             RobotSpec, RobotTypeSpec, ScenarioConfig,
                             ScenarioFormatError, WorldGraph, edge_cost,
                             euclid, folded_support_cost, generate_scenario,
                             graph_length, load_scenario, point_dist,
                             save_scenario, scenario_from_dict,
                             scenario_to_dict)


def test_edge_spec_canonicalizes_endpoints():
    edge = EdgeSpec(3, 1, 2.0)
    assert (edge.u, edge.v) == (1, 3)
    assert edge.key == (1, 3)
    assert edge.other(1) == 3
    assert edge.other(3) == 1


def test_edge_spec_rejects_bad_shapes():
    with pytest.raises(ValueError):
        EdgeSpec(2, 2, 1.0)
    with pytest.raises(ValueError):
        EdgeSpec(0, 1, 0.0)
    with pytest.raises(ValueError):
        EdgeSpec(0, 1, 1.0, risky=True)  # no support node
    with pytest.raises(ValueError):
        EdgeSpec(0, 1, 1.0, risky=True, support_nodes=(1,),
                 reduced_cost=((0.5,),), support_cost=(0.1,))
    with pytest.raises(ValueError):
        EdgeSpec(0, 1, 1.0, support_nodes=(2,))  # support data, not risky


def test_type_spec_validation():
    with pytest.raises(ValueError):
        RobotTypeSpec(0, edge_cost_multiplier=0.9)
    with pytest.raises(ValueError):
        RobotTypeSpec(0, sensing_coefficient=0.0)
    with pytest.raises(ValueError):
        RobotTypeSpec(0, transmission_coefficient=-1.0)
    spec = RobotTypeSpec(2, 1.3, 0.9, 1.1)
    assert spec.type_id == 2


def test_world_graph_adjacency_and_lookup(support_world):
    g = support_world
    assert g.num_nodes == 4
    assert [n for n, _ in g.neighbors(0)] == [1, 2]
    assert [n for n, _ in g.neighbors(2)] == [0, 1, 3]
    edge = g.edge_between(1, 0)
    assert edge is not None and edge.risky
    assert g.edge_between(0, 3) is None
    assert g.move_cost(2, 2, 0) == 0.0
    assert g.move_cost(0, 2, 0) == 6.0
    with pytest.raises(ValueError):
        g.move_cost(0, 3, 0)
    with pytest.raises(ValueError):
        g.type_spec(1)


def test_world_graph_rejects_inconsistent_tables():
    nodes = [(0.0, 0.0), (1.0, 0.0), (0.5, 0.5)]
    risky = EdgeSpec(0, 1, 5.0, risky=True, support_nodes=(2,),
                     reduced_cost=((1.0,),), support_cost=(0.5,))
    types2 = [RobotTypeSpec(0), RobotTypeSpec(1, 1.2)]
    with pytest.raises(ValueError):
        WorldGraph(nodes, [risky], types2)  # 1x1 table, two types
    with pytest.raises(ValueError):
        WorldGraph(nodes, [EdgeSpec(0, 1, 1.0), EdgeSpec(1, 0, 2.0)],
                   [RobotTypeSpec(0)])  # same edge twice
    with pytest.raises(ValueError):
        WorldGraph(nodes, [EdgeSpec(0, 5, 1.0)], [RobotTypeSpec(0)])


def test_edge_pricing_scales_by_type_multiplier():
    nodes = [(0.0, 0.0), (1.0, 0.0), (0.5, 0.5)]
    edge = EdgeSpec(0, 1, 4.0, risky=True, support_nodes=(2,),
                    reduced_cost=((1.0, 1.5), (2.0, 2.5)),
                    support_cost=(0.25, 0.75))
    g = WorldGraph(nodes, [edge], [RobotTypeSpec(0), RobotTypeSpec(1, 1.5)])
    assert edge_cost(g, edge, 0) == 4.0
    assert edge_cost(g, edge, 1) == 6.0
    assert folded_support_cost(g, edge, 0, 1) == 1.5 + 0.75
    assert folded_support_cost(g, edge, 1, 0) == 2.0 + 0.25
    plain = EdgeSpec(0, 2, 1.0)
    with pytest.raises(ValueError):
        folded_support_cost(g, plain, 0, 0)


def test_geometry_helpers(support_world):
    assert point_dist((0.0, 0.0), (3.0, 4.0)) == 5.0
    assert euclid(support_world, 0, 1) == 1.0
    assert math.isclose(graph_length(support_world), math.sqrt(2.0))


def test_generator_invariants():
    for seed in range(10):
        scenario = generate_scenario(num_nodes=12, edge_density=0.4,
                                     risky_fraction=0.25, num_robots=5,
                                     num_types=3, seed=seed)
        g = scenario.graph
        n = g.num_nodes
        assert n == 12
        target = round(0.4 * n * (n - 1) / 2)
        assert len(g.edges) == target
        assert sum(e.risky for e in g.edges) == round(0.25 * target)
        assert len({e.key for e in g.edges}) == len(g.edges)
        assert all(0.0 <= x <= 1.0 and 0.0 <= y <= 1.0 for x, y in g.nodes)

        # connectivity via breadth-first search over the adjacency
        seen = {0}
        queue = [0]
        while queue:
            for w, _ in g.neighbors(queue.pop()):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        assert len(seen) == n

        for e in g.edges:
            jitter_hi = BASE_COST_JITTER[1]
            straight = euclid(g, e.u, e.v)
            if not e.risky:
                assert straight <= e.base_cost <= straight * jitter_hi + 1e-12
                continue
            assert 1 <= len(e.support_nodes) <= MAX_SUPPORT_NODES
            assert e.u not in e.support_nodes and e.v not in e.support_nodes
            pre_risk = e.base_cost / RISKY_COST_FACTOR
            assert straight <= pre_risk * (1 + 1e-12)
            # a supported crossing must always beat the unsupported price
            for r in range(3):
                for s in range(3):
                    assert e.reduced_cost[r][s] > 0.0
                    assert (folded_support_cost(g, e, r, s)
                            < edge_cost(g, e, r))

        starts = [r.start for r in scenario.robots]
        goals = [r.goal for r in scenario.robots]
        assert len(set(starts)) == len(starts)
        assert len(set(goals)) == len(goals)
        assert all(s != t for s, t in zip(starts, goals))
        assert [r.type_id for r in scenario.robots] == [0, 1, 2, 0, 1]
        assert scenario.time_limit == 120


def test_generator_default_shape_counts():
    scenario = generate_scenario(num_nodes=20, edge_density=0.5,
                                 risky_fraction=0.2, num_robots=7, seed=0)
    assert len(scenario.graph.edges) == 95
    assert sum(e.risky for e in scenario.graph.edges) == 19
    assert len(scenario.robots) == 7


def test_generator_determinism():
    a = generate_scenario(num_nodes=10, edge_density=0.5, risky_fraction=0.3,
                          num_robots=3, num_types=2, seed=7)
    b = generate_scenario(num_nodes=10, edge_density=0.5, risky_fraction=0.3,
                          num_robots=3, num_types=2, seed=7)
    c = generate_scenario(num_nodes=10, edge_density=0.5, risky_fraction=0.3,
                          num_robots=3, num_types=2, seed=8)
    assert scenario_to_dict(a) == scenario_to_dict(b)
    assert scenario_to_dict(a) != scenario_to_dict(c)


def test_generator_rejects_bad_parameters():
    with pytest.raises(GenerationError):
        generate_scenario(num_nodes=1, edge_density=1.0, risky_fraction=0.0,
                          num_robots=1)
    with pytest.raises(GenerationError):
        generate_scenario(num_nodes=4, edge_density=1.0, risky_fraction=0.0,
                          num_robots=5)
    with pytest.raises(GenerationError):
        generate_scenario(num_nodes=20, edge_density=0.05, risky_fraction=0.0,
                          num_robots=2)  # too sparse to stay connected
    with pytest.raises(GenerationError):
        generate_scenario(num_nodes=6, edge_density=0.8, risky_fraction=0.2,
                          num_robots=2, num_types=2, type_assignment=[0])
    with pytest.raises(GenerationError):
        generate_scenario(num_nodes=6, edge_density=0.8, risky_fraction=0.2,
                          num_robots=2, num_types=2, type_assignment=[0, 5])


def test_scenario_config_validation(support_world):
    robots = [RobotSpec(0, 0, 1)]
    with pytest.raises(ValueError):
        ScenarioConfig(graph=support_world, robots=[], sensing_factor=1.0,
                       communication_factor=1.0, time_limit=10)
    with pytest.raises(ValueError):
        ScenarioConfig(graph=support_world, robots=[RobotSpec(0, 0, 9)],
                       sensing_factor=1.0, communication_factor=1.0,
                       time_limit=10)
    with pytest.raises(ValueError):
        ScenarioConfig(graph=support_world, robots=robots, sensing_factor=1.0,
                       communication_factor=1.0, time_limit=0)
    with pytest.raises(ValueError):
        ScenarioConfig(graph=support_world, robots=robots, sensing_factor=1.0,
                       communication_factor=1.0, time_limit=10, epsilon=1.5)
    with pytest.raises(ValueError):
        ScenarioConfig(graph=support_world, robots=[RobotSpec(3, 0, 1)],
                       sensing_factor=1.0, communication_factor=1.0,
                       time_limit=10)


def test_scenario_round_trip(tmp_path):
    scenario = generate_scenario(num_nodes=9, edge_density=0.6,
                                 risky_fraction=0.3, num_robots=3,
                                 num_types=2, seed=11)
    path = tmp_path / "scenario.json"
    save_scenario(scenario, str(path))
    loaded = load_scenario(str(path))
    assert scenario_to_dict(loaded) == scenario_to_dict(scenario)
    assert loaded.graph == scenario.graph


def test_scenario_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    with pytest.raises(ScenarioFormatError) as err:
        load_scenario(str(bad))
    assert "not valid JSON" in str(err.value)

    with pytest.raises(FileNotFoundError):
        load_scenario(str(tmp_path / "missing.json"))

    with pytest.raises(ScenarioFormatError) as err:
        scenario_from_dict(["nope"])
    assert "top level" in str(err.value)

    scenario = generate_scenario(num_nodes=6, edge_density=0.8,
                                 risky_fraction=0.2, num_robots=2, seed=1)
    data = scenario_to_dict(scenario)
    del data["edges"][0]["base_cost"]
    with pytest.raises(ScenarioFormatError) as err:
        scenario_from_dict(data)
    assert "edges[0]: missing 'base_cost'" in str(err.value)

    data = scenario_to_dict(scenario)
    del data["params"]["T"]
    with pytest.raises(ScenarioFormatError) as err:
        scenario_from_dict(data)
    assert "params: missing 'T'" in str(err.value)

    data = scenario_to_dict(scenario)
    data["robots"][0]["start"] = 99
    with pytest.raises(ScenarioFormatError) as err:
        scenario_from_dict(data)
    assert "scenario invalid" in str(err.value)
