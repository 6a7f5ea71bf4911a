"""Per-content ranked attribution."""

from __future__ import annotations

from .instance import Assignment, AttributionInstance


def rank_greedy(instance: AttributionInstance, lam: float = 0.0) -> Assignment:
    """Give each content its ``quota`` highest-affinity candidates.

    Contents are handled independently, so one subscriber may end up
    attributed to several contents.  Ties go to the smaller subscriber id.
    ``lam`` only affects the reported objective.
    """
    instance.check_feasible()
    chosen = []
    for j, subs in sorted(instance.by_content().items()):
        q = instance.quota(j)
        ranked = sorted(subs, key=lambda i: (-instance.affinity[(i, j)], i))
        chosen.extend((i, j) for i in ranked[:q])
    return Assignment.from_pairs(instance, chosen, lam)
