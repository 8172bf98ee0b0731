"""Shared fixtures: the hand-sized world where one supported crossing beats
everything, full-observability map helpers, and small generated scenarios
for oracle comparisons."""

from __future__ import annotations

import random

import pytest

from teamcoord.sensing import PartialMap, sense
from teamcoord.world import (EdgeSpec, RobotSpec, RobotTypeSpec,
                             ScenarioConfig, WorldGraph, generate_scenario)


def build_support_world() -> WorldGraph:
    """Four nodes: risky crossing 0-1 with support node 2, a detour over 2
    that is never worth taking, and an appendix node 3 hanging off 2."""
    nodes = [(0.0, 0.0), (1.0, 0.0), (0.5, 0.4), (0.5, 1.0)]
    edges = [
        EdgeSpec(0, 1, 10.0, risky=True, support_nodes=(2,),
                 reduced_cost=((2.0,),), support_cost=(1.0,)),
        EdgeSpec(0, 2, 6.0),
        EdgeSpec(1, 2, 6.0),
        EdgeSpec(2, 3, 5.0),
    ]
    return WorldGraph(nodes, edges, [RobotTypeSpec(0)])


def build_support_scenario() -> ScenarioConfig:
    """Robot 0 must get across the risky edge; robot 1 starts on the support
    node, which is also its goal. Sensing and communication factors are high
    enough for full observability from step one."""
    return ScenarioConfig(
        graph=build_support_world(),
        robots=[RobotSpec(0, 0, 1), RobotSpec(0, 2, 2)],
        sensing_factor=10.0, communication_factor=10.0, time_limit=40)


def full_map(world: WorldGraph) -> PartialMap:
    """Everything at once: one observation with an oversized radius."""
    return sense(world, 0, 0, 10.0)


def small_world(seed: int, num_nodes: int = 0, num_robots: int = 2,
                num_types: int = 1, risky_fraction: float = 0.3,
                sensing_factor: float = 10.0,
                communication_factor: float = 10.0) -> ScenarioConfig:
    """A dense little scenario; num_nodes 0 draws 4..8 from the seed."""
    if num_nodes == 0:
        num_nodes = random.Random(seed).randint(4, 8)
    return generate_scenario(
        num_nodes=num_nodes, edge_density=0.9, risky_fraction=risky_fraction,
        num_robots=num_robots, num_types=num_types,
        sensing_factor=sensing_factor,
        communication_factor=communication_factor, seed=seed)


@pytest.fixture
def support_world() -> WorldGraph:
    return build_support_world()


@pytest.fixture
def support_scenario() -> ScenarioConfig:
    return build_support_scenario()
