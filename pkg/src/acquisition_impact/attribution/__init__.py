"""Subscriber-level attribution."""

from .greedy import rank_greedy
from .instance import (
    Assignment,
    AttributionInstance,
    assignment_violations,
    attribution_frame,
    build_instances,
    instances_from_json,
    instances_to_json,
    round_quota,
)
from .milp import solve_exact
from .oracle import brute_force
from .pareto import ParetoPoint, pareto_sweep, solve_all, summarize

__all__ = [
    "Assignment",
    "AttributionInstance",
    "ParetoPoint",
    "assignment_violations",
    "attribution_frame",
    "brute_force",
    "build_instances",
    "instances_from_json",
    "instances_to_json",
    "pareto_sweep",
    "rank_greedy",
    "round_quota",
    "solve_all",
    "solve_exact",
    "summarize",
]
