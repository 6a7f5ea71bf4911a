"""Exact attribution by branch-and-bound over LP relaxations.

Program solved (per attribution instance)::

    minimise    sum_i y_i - lam * sum_ij a_ij x_ij
    subject to  sum_i x_ij = q_j                         for every content j
                sum_j x_ij <= 1 + M_i y_i                for every subscriber i
                sum_j x_ij >= 2 - 2 (1 - y_i)            for every subscriber i
                x, y binary

with ``M_i = max(1, |T_i| - 1)`` where ``T_i`` is the subscriber's candidate
contents.  Before branching the instance is reduced exactly: contents with
quota 0 drop out, contents whose quota equals their candidate count are
assigned in full, and what remains splits into connected components that are
solved independently.  When ``lam`` is so small that the affinity term
cannot outweigh a single collision, the objective is solved in two stages
(fewest collisions, then most affinity), which has the same optimum.
"""

from __future__ import annotations

import heapq
import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix, vstack

from .greedy import rank_greedy
from .instance import Assignment, AttributionInstance, Pair

log = logging.getLogger(__name__)

INT_TOL = 1e-6
PRUNE_TOL = 1e-9
# below this value of lam * total affinity the objective is solved lexicographically
LEXICOGRAPHIC_MARGIN = 0.5
DEFAULT_NODE_LIMIT = 200_000


@dataclass
class _Stats:
    nodes: int = 0
    optimal: bool = True
    gap: float = 0.0
    bound_log: list = field(default_factory=list)


def solve_exact(
    instance: AttributionInstance,
    lam: float = 0.0,
    node_limit: int = DEFAULT_NODE_LIMIT,
) -> Assignment:
    """Globally optimal assignment for trade-off weight ``lam``.

    Branching picks the most fractional variable (ties by ``(subscriber,
    content)``, with a subscriber's indicator ordered before its pairs);
    open nodes are explored best-bound first, ties in insertion order.

    If ``node_limit`` nodes are exhausted in some component, the best
    assignment found is returned with ``optimal=False`` and the remaining
    optimality gap in ``gap``.

    Raises
    ------
    InfeasibleError
        If a quota exceeds the number of candidates for its content.
    """
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    instance.check_feasible()

    by_content = instance.by_content()
    by_sub = instance.by_subscriber()
    fixed: list[Pair] = []
    free_edges: list[Pair] = []
    for j, subs in by_content.items():
        q = instance.quota(j)
        if q == 0:
            continue
        if q == len(subs):
            fixed.extend((i, j) for i in subs)
        else:
            free_edges.extend((i, j) for i in subs)

    load: dict[str, int] = defaultdict(int)
    for i, _ in fixed:
        load[i] += 1

    stats = _Stats()
    chosen = list(fixed)
    for comp_edges in _components(free_edges):
        chosen.extend(_solve_component(instance, comp_edges, by_sub, load, lam, node_limit, stats))

    return Assignment.from_pairs(
        instance, chosen, lam,
        optimal=stats.optimal, gap=stats.gap, nodes=stats.nodes,
        bound_log=tuple(stats.bound_log),
    )


def _components(edges: list[Pair]) -> list[list[Pair]]:
    parent: dict = {}

    def find(u):
        while parent.setdefault(u, u) != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for i, j in edges:
        ri, rj = find(("s", i)), find(("c", j))
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups: dict = defaultdict(list)
    for e in edges:
        groups[find(("s", e[0]))].append(e)
    return [sorted(g) for _, g in sorted(groups.items())]


class _Component:
    """LP data for one connected component."""

    def __init__(self, instance, edges, by_sub, load, lam):
        self.edges = edges
        self.subs = sorted({i for i, _ in edges})
        contents = sorted({j for _, j in edges})
        ns, ne = len(self.subs), len(edges)
        self.n = ns + ne
        # variable order: y_i for subs, then x_e for edges
        self.keys = [(i, "") for i in self.subs] + list(edges)
        sidx = {i: k for k, i in enumerate(self.subs)}
        cidx = {j: k for k, j in enumerate(contents)}

        c = np.zeros(self.n)
        c[:ns] = 1.0
        c[ns:] = [-lam * instance.affinity[e] for e in edges]
        self.c = c

        rows, cols, vals = [], [], []
        for k, (i, j) in enumerate(edges):
            rows.append(cidx[j]); cols.append(ns + k); vals.append(1.0)
        self.A_eq = csr_matrix((vals, (rows, cols)), shape=(len(contents), self.n))
        self.b_eq = np.array([instance.quota(j) for j in contents], dtype=float)

        rows, cols, vals = [], [], []
        b_ub = np.zeros(2 * ns)
        for k, (i, j) in enumerate(edges):
            r = sidx[i]
            rows += [2 * r, 2 * r + 1]; cols += [ns + k, ns + k]; vals += [1.0, -1.0]
        for r, i in enumerate(self.subs):
            m_i = max(1, len(by_sub[i]) - 1)
            rows += [2 * r, 2 * r + 1]; cols += [r, r]; vals += [-float(m_i), 2.0]
            b_ub[2 * r] = 1.0 - load.get(i, 0)
            b_ub[2 * r + 1] = float(load.get(i, 0))
        self.A_ub = csr_matrix((vals, (rows, cols)), shape=(2 * ns, self.n))
        self.b_ub = b_ub
        self.ns = ns
        self.load = load

    def add_ub_row(self, row, rhs: float) -> None:
        self.A_ub = vstack([self.A_ub, csr_matrix(row)], format="csr")
        self.b_ub = np.append(self.b_ub, rhs)

    def lp(self, lb, ub):
        res = linprog(
            self.c, A_ub=self.A_ub, b_ub=self.b_ub, A_eq=self.A_eq, b_eq=self.b_eq,
            bounds=np.column_stack([lb, ub]), method="highs-ds",
        )
        if res.status == 2:
            return None
        if res.status != 0:
            raise RuntimeError(f"LP relaxation failed: {res.message}")
        return float(res.fun), res.x

    def integral_value(self, x) -> float:
        return float(self.c @ x)

    def greedy_vector(self, instance, lam):
        """Incumbent from per-content ranking restricted to this component."""
        sub_inst = AttributionInstance(
            tuple(self.edges), {e: instance.affinity[e] for e in self.edges},
            {j: instance.quota(j) for _, j in self.edges},
        )
        chosen = rank_greedy(sub_inst).assigned
        x = np.zeros(self.n)
        per_sub = defaultdict(int)
        for k, e in enumerate(self.edges):
            if e in chosen:
                x[self.ns + k] = 1.0
                per_sub[e[0]] += 1
        for r, i in enumerate(self.subs):
            x[r] = 1.0 if per_sub[i] + self.load.get(i, 0) >= 2 else 0.0
        return x


def _solve_component(instance, edges, by_sub, load, lam, node_limit, stats: _Stats) -> list[Pair]:
    comp = _Component(instance, edges, by_sub, load, lam)
    aff = np.array([instance.affinity[e] for e in edges])
    start = comp.greedy_vector(instance, lam)
    if 0 < lam and lam * aff.sum() < LEXICOGRAPHIC_MARGIN:
        # the affinity term can never pay for one extra collision, so the
        # optimum is: fewest collisions first, then most affinity among those.
        # Solving in that order keeps tiny objective coefficients away from
        # the LP tolerances.
        comp.c = np.concatenate([np.ones(comp.ns), np.zeros(len(edges))])
        best_x = _branch_and_bound(comp, start, node_limit, stats)
        n_multi = float(np.round(best_x[:comp.ns].sum()))
        comp.c = np.concatenate([np.zeros(comp.ns), -aff])
        comp.add_ub_row(np.concatenate([np.ones(comp.ns), np.zeros(len(edges))]), n_multi)
        if start[:comp.ns].sum() > n_multi:
            start = best_x
        best_x = _branch_and_bound(comp, start, node_limit, stats, gap_scale=lam)
    else:
        best_x = _branch_and_bound(comp, start, node_limit, stats)

    chosen = [e for k, e in enumerate(edges) if best_x[comp.ns + k] > 0.5]
    counts = defaultdict(int)
    for i, _ in chosen:
        counts[i] += 1
    for r, i in enumerate(comp.subs):
        if (best_x[r] > 0.5) != (counts[i] + load.get(i, 0) >= 2):
            raise RuntimeError(f"indicator of subscriber {i!r} disagrees with its assignment count")
    return chosen


def _branch_and_bound(comp: _Component, best_x, node_limit, stats: _Stats, gap_scale: float = 1.0):
    n = comp.n
    keys = comp.keys
    best_val = comp.integral_value(best_x)
    counter = itertools.count()
    root_lb, root_ub = np.zeros(n), np.ones(n)
    root = comp.lp(root_lb, root_ub)
    stats.nodes += 1
    if root is None:  # cannot happen for a feasible instance
        raise RuntimeError("root relaxation infeasible")
    heap = [(root[0], next(counter), root_lb, root_ub, root)]
    nodes = 1
    while heap:
        bound, _, lb, ub, solved = heapq.heappop(heap)
        if bound >= best_val - PRUNE_TOL:
            continue
        if solved is None:
            solved = comp.lp(lb, ub)
            nodes += 1
            stats.nodes += 1
            if solved is None:
                continue
        value, x = solved
        if value >= best_val - PRUNE_TOL:
            continue
        frac = np.abs(x - np.round(x))
        if frac.max() <= INT_TOL:
            xr = np.round(x)
            cand = comp.integral_value(xr)
            stats.bound_log.append((value, cand))
            if cand < best_val:
                best_val, best_x = cand, xr
            continue
        if nodes >= node_limit:
            heapq.heappush(heap, (value, next(counter), lb, ub, solved))
            break
        dist = np.abs(x - 0.5)
        top = dist.min()
        ties = np.flatnonzero(dist <= top + 1e-12)
        var = min(ties, key=lambda k: keys[k])
        for fix in (0.0, 1.0):
            clb, cub = lb.copy(), ub.copy()
            clb[var] = cub[var] = fix
            heapq.heappush(heap, (value, next(counter), clb, cub, None))

    if heap:
        open_bound = min(h[0] for h in heap)
        gap = max(0.0, best_val - open_bound) * gap_scale
        if gap > PRUNE_TOL:
            stats.optimal = False
            stats.gap += gap
            log.warning("node limit %d reached; optimality gap %.6g", node_limit, gap)

    return best_x
