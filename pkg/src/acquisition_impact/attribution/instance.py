"""Attribution instances and solved assignments."""

from __future__ import annotations

import datetime as dt
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from ..baseline import BaselineModel, predict_frame
from ..domain import POST_LAUNCH, ContentLaunch, Dataset, launch_frame
from ..errors import InfeasibleError

log = logging.getLogger(__name__)

Pair = tuple[str, str]


@dataclass(frozen=True)
class AttributionInstance:
    """Candidate graph for one (day, group).

    ``candidates`` holds the (subscriber, content) pairs where the subscriber
    consumed the content upon signing up, ``affinity`` maps each pair to
    ``1 - p_hat`` and ``quotas`` gives the integral number of subscribers to
    attribute to each content.
    """

    candidates: tuple[Pair, ...]
    affinity: Mapping[Pair, float]
    quotas: Mapping[str, int]
    date: dt.date | None = None
    group: str | None = None
    consumption_rank: Mapping[Pair, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        cands = tuple(sorted(set(self.candidates)))
        object.__setattr__(self, "candidates", cands)
        missing = [p for p in cands if p not in self.affinity]
        if missing:
            raise ValueError(f"no affinity for candidate {missing[0]}")
        for p in cands:
            a = self.affinity[p]
            if not 0.0 <= a <= 1.0:
                raise ValueError(f"affinity {a} of {p} outside [0, 1]")
        for j, q in self.quotas.items():
            if q < 0 or int(q) != q:
                raise ValueError(f"quota of {j!r} must be a non-negative integer, got {q}")

    @property
    def subscribers(self) -> tuple[str, ...]:
        return tuple(sorted({i for i, _ in self.candidates}))

    @property
    def contents(self) -> tuple[str, ...]:
        return tuple(sorted({j for _, j in self.candidates} | set(self.quotas)))

    def by_content(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = defaultdict(list)
        for i, j in self.candidates:
            out[j].append(i)
        return dict(out)

    def by_subscriber(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = defaultdict(list)
        for i, j in self.candidates:
            out[i].append(j)
        return dict(out)

    def quota(self, content_id: str) -> int:
        return int(self.quotas.get(content_id, 0))

    def check_feasible(self) -> None:
        """Raise :class:`InfeasibleError` if some quota exceeds its candidates."""
        counts = {j: len(v) for j, v in self.by_content().items()}
        for j in sorted(self.quotas):
            q = self.quota(j)
            if q > counts.get(j, 0):
                raise InfeasibleError(j, q, counts.get(j, 0))

    def with_decay(self, gamma: float) -> "AttributionInstance":
        """Discount affinities by ``gamma ** (rank - 1)`` where rank is the
        order in which the subscriber consumed the contents (1 = first)."""
        if not 0.0 < gamma <= 1.0:
            raise ValueError("decay gamma must lie in (0, 1]")
        aff = {
            p: self.affinity[p] * gamma ** (self.consumption_rank.get(p, 1) - 1)
            for p in self.candidates
        }
        return replace(self, affinity=aff)


@dataclass(frozen=True)
class Assignment:
    assigned: frozenset[Pair]
    multi_assigned: frozenset[str]
    objective: float
    total_affinity: float
    mean_affinity: float
    multi_rate: float
    lam: float = 0.0
    date: dt.date | None = None
    group: str | None = None
    optimal: bool = True
    gap: float = 0.0
    nodes: int = 0
    bound_log: tuple[tuple[float, float], ...] = ()

    @property
    def n_multi(self) -> int:
        return len(self.multi_assigned)

    @property
    def n_assigned(self) -> int:
        return len(self.assigned)

    @property
    def n_subscribers(self) -> int:
        return len({i for i, _ in self.assigned})

    @classmethod
    def from_pairs(
        cls, instance: AttributionInstance, pairs: Iterable[Pair], lam: float = 0.0, **extra
    ) -> "Assignment":
        pairs = frozenset(pairs)
        counts: dict[str, int] = defaultdict(int)
        for i, _ in pairs:
            counts[i] += 1
        multi = frozenset(i for i, c in counts.items() if c >= 2)
        total = math.fsum(instance.affinity[p] for p in sorted(pairs))
        n = len(pairs)
        return cls(
            assigned=pairs,
            multi_assigned=multi,
            objective=len(multi) - lam * total,
            total_affinity=total,
            mean_affinity=total / n if n else 0.0,
            multi_rate=len(multi) / len(counts) if counts else 0.0,
            lam=lam,
            date=instance.date,
            group=instance.group,
            **extra,
        )


def instances_to_json(instances: Iterable[AttributionInstance]) -> dict:
    """Serialisable form; candidates are ``[subscriber, content, affinity, rank]``."""
    out = []
    for inst in instances:
        out.append({
            "date": inst.date.isoformat() if inst.date else None,
            "group": inst.group,
            "quotas": {j: int(q) for j, q in sorted(inst.quotas.items())},
            "candidates": [
                [i, j, float(inst.affinity[(i, j)]), int(inst.consumption_rank.get((i, j), 1))]
                for i, j in inst.candidates
            ],
        })
    return {"instances": out}


def instances_from_json(obj: Mapping) -> list[AttributionInstance]:
    out = []
    for item in obj["instances"]:
        pairs = [(str(i), str(j)) for i, j, _, _ in item["candidates"]]
        aff = {(str(i), str(j)): float(a) for i, j, a, _ in item["candidates"]}
        rank = {(str(i), str(j)): int(r) for i, j, _, r in item["candidates"]}
        day = dt.date.fromisoformat(item["date"]) if item.get("date") else None
        out.append(AttributionInstance(
            tuple(pairs), aff, {j: int(q) for j, q in item["quotas"].items()},
            day, item.get("group"), rank,
        ))
    return out


def assignment_violations(instance: AttributionInstance, assignment: Assignment) -> list[str]:
    """Quota-equality and y-consistency violations (empty when valid)."""
    problems = []
    cand = set(instance.candidates)
    stray = assignment.assigned - cand
    if stray:
        problems.append(f"non-candidate pair(s) assigned: {sorted(stray)[:3]}")
    per_content: dict[str, int] = defaultdict(int)
    per_sub: dict[str, int] = defaultdict(int)
    for i, j in assignment.assigned:
        per_content[j] += 1
        per_sub[i] += 1
    for j in instance.contents:
        if per_content.get(j, 0) != instance.quota(j):
            problems.append(f"content {j!r}: {per_content.get(j, 0)} assigned, quota {instance.quota(j)}")
    expected = {i for i, c in per_sub.items() if c >= 2}
    if expected != set(assignment.multi_assigned):
        problems.append("multi_assigned disagrees with assignment counts")
    return problems


def round_quota(value: float) -> int:
    """Round half up."""
    return int(math.floor(value + 0.5))


def build_instances(
    dataset: Dataset,
    launches: Sequence[ContentLaunch],
    impact_series_list,
    model: BaselineModel,
    decay_gamma: float | None = None,
) -> list[AttributionInstance]:
    """Per (day, group) attribution instances from daily impact estimates.

    Candidates are the post-launch signups of the day who consumed the
    content upon signing up; affinity is ``1 - p_hat`` scored with ``model``;
    quotas are the daily estimates rounded half-up and capped at the
    candidate count.
    """
    by_id = {l.content_id: l for l in launches}
    buckets: dict[tuple, dict] = {}
    for series in impact_series_list:
        launch = by_id[series.content_id]
        frame = launch_frame(dataset, launch, series.group)
        post = frame[(frame["kind"] == POST_LAUNCH) & frame["consumed"]]
        p_hat = predict_frame(model, post) if len(post) else np.zeros(0)
        post = post.assign(affinity=1.0 - p_hat)
        grouped = {d.date(): g for d, g in post.groupby("signup_date")}
        for est in series.daily:
            key = (est.date, series.group)
            b = buckets.setdefault(key, {"aff": {}, "quotas": {}, "first": {}})
            rows = grouped.get(est.date)
            n_cand = 0 if rows is None else len(rows)
            q = min(round_quota(est.n_incremental), n_cand)
            if est.n_incremental > 0 and q == 0 and n_cand:
                log.info("quota for %s on %s rounds to 0 (estimate %.3f)",
                         series.content_id, est.date, est.n_incremental)
            b["quotas"][series.content_id] = q
            if rows is None:
                continue
            for sid, a, first in zip(rows.index, rows["affinity"], rows["first_consumed"]):
                pair = (sid, series.content_id)
                b["aff"][pair] = float(min(max(a, 0.0), 1.0))
                b["first"][pair] = first

    instances = []
    for (day, group), b in sorted(buckets.items(), key=lambda kv: (kv[0][0], kv[0][1] or "")):
        ranks = _consumption_ranks(b["first"])
        inst = AttributionInstance(
            tuple(b["aff"]), b["aff"], b["quotas"], day, group, ranks
        )
        if decay_gamma is not None:
            inst = inst.with_decay(decay_gamma)
        instances.append(inst)
    return instances


def _consumption_ranks(first: Mapping[Pair, pd.Timestamp]) -> dict[Pair, int]:
    per_sub: dict[str, list[tuple]] = defaultdict(list)
    for (i, j), when in first.items():
        per_sub[i].append((when, j))
    ranks = {}
    for i, items in per_sub.items():
        for r, (_, j) in enumerate(sorted(items), start=1):
            ranks[(i, j)] = r
    return ranks


def attribution_frame(assignments: Iterable[Assignment], instances: Iterable[AttributionInstance]) -> pd.DataFrame:
    """Rows of ``attribution.csv``."""
    rows = []
    for a, inst in zip(assignments, instances):
        for i, j in sorted(a.assigned):
            rows.append((
                i, j, a.date.isoformat() if a.date else "", a.group or "",
                inst.affinity[(i, j)], i in a.multi_assigned,
            ))
    return pd.DataFrame(
        rows, columns=["subscriber_id", "content_id", "date", "group", "affinity", "multi_assigned"]
    )
