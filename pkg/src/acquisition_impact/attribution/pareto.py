"""Trade-off sweep between one-to-one attribution and mean affinity."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .greedy import rank_greedy
from .instance import Assignment, AttributionInstance
from .milp import solve_exact

SOLVERS: dict[str, Callable[..., Assignment]] = {
    "exact": solve_exact,
    "greedy": rank_greedy,
}


@dataclass(frozen=True)
class ParetoPoint:
    lam: float
    multi_rate: float
    mean_affinity: float
    multi_count: int = 0
    n_assigned: int = 0
    optimal: bool = True


def solve_all(
    instances: Iterable[AttributionInstance], lam: float, solver: str = "exact"
) -> list[Assignment]:
    try:
        fn = SOLVERS[solver]
    except KeyError:
        raise ValueError(f"unknown solver {solver!r}; choose from {sorted(SOLVERS)}") from None
    return [fn(inst, lam) for inst in instances]


def summarize(assignments: Sequence[Assignment], lam: float) -> ParetoPoint:
    """Pool several per-day assignments into one trade-off point."""
    n_multi = sum(a.n_multi for a in assignments)
    n_subs = sum(a.n_subscribers for a in assignments)
    n_pairs = sum(a.n_assigned for a in assignments)
    total = sum(a.total_affinity for a in assignments)
    return ParetoPoint(
        lam=float(lam),
        multi_rate=n_multi / n_subs if n_subs else 0.0,
        mean_affinity=total / n_pairs if n_pairs else 0.0,
        multi_count=n_multi,
        n_assigned=n_pairs,
        optimal=all(a.optimal for a in assignments),
    )


def pareto_sweep(
    instances: AttributionInstance | Sequence[AttributionInstance],
    lambda_grid: Sequence[float],
    solver: str = "exact",
) -> list[ParetoPoint]:
    """Solve at every ``lambda`` of an ascending, non-negative grid.

    ``instances`` may be a single instance or the per-day instances of one
    analysis; in the latter case each point pools all days.
    """
    if isinstance(instances, AttributionInstance):
        instances = [instances]
    grid = [float(l) for l in lambda_grid]
    if any(l < 0 for l in grid):
        raise ValueError("lambda values must be non-negative")
    if grid != sorted(grid):
        raise ValueError("lambda grid must be sorted ascending")
    return [summarize(solve_all(instances, lam, solver), lam) for lam in grid]
