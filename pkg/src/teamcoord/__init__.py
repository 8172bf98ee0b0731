"""Multi-robot route planning on partially known graphs whose risky edges
become cheap while a teammate stands on a support node. Ships the world
model, per-robot perception and ad-hoc communication, individual and group
planners, a deterministic simulator, and an experiment harness."""

from .world import (Coord, EdgeSpec, GenerationError, RobotSpec,
                    RobotTypeSpec, ScenarioConfig, ScenarioFormatError,
                    WorldGraph, edge_cost, euclid, folded_support_cost,
                    generate_scenario, graph_length, load_scenario,
                    point_dist, save_scenario)
from .sensing import (MapConsistencyError, PartialMap, RobotGroup,
                      build_groups, comm_range, empty_map, merge_maps, sense,
                      update_map)
from .individual import (PlanResult, candidate_subgoals, epsilon_greedy_pick,
                         individual_plan, shortest_path)
from .coordination import (GroupPlan, PlanStep, best_teammate,
                           coordination_plan, solve_joint_paths,
                           teammate_clusters)
from .sim import (VARIANTS, MoveRecord, PlanIntegrityError, RunResult,
                  StepRecord, handshake_csv, run, run_naive, trace_csv,
                  validate)

__all__ = [name for name in dir() if not name.startswith("_")]
