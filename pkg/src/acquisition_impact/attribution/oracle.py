"""Exhaustive enumeration of quota-feasible assignments (test oracle)."""

from __future__ import annotations

from itertools import combinations

import numpy as np

from ..errors import InstanceTooLargeError
from .instance import Assignment, AttributionInstance

MAX_PAIRS = 25
_TIE_TOL = 1e-9


def brute_force(instance: AttributionInstance, lam: float = 0.0, max_pairs: int = MAX_PAIRS) -> Assignment:
    """Exact optimum of the attribution program by enumeration.

    Every assignment meeting the quotas is scored; among optimal ones the
    lexicographically smallest sorted pair list is returned.
    """
    if len(instance.candidates) > max_pairs:
        raise InstanceTooLargeError(
            f"{len(instance.candidates)} candidate pairs exceed the brute-force bound of {max_pairs}"
        )
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    instance.check_feasible()

    subs = list(instance.subscribers)
    col = {s: k for k, s in enumerate(subs)}
    by_content = instance.by_content()

    # each row of `counts` is one partial assignment; `picks` remembers the choice per content
    counts = np.zeros((1, len(subs)), dtype=np.int16)
    aff = np.zeros(1)
    picks: list[np.ndarray] = []
    options: list[list[tuple]] = []
    for j in sorted(by_content):
        members = sorted(by_content[j])
        q = instance.quota(j)
        combos = list(combinations(members, q))
        options.append([tuple((i, j) for i in c) for c in combos])
        member_mat = np.zeros((len(combos), len(subs)), dtype=np.int16)
        aff_j = np.zeros(len(combos))
        for r, c in enumerate(combos):
            for i in c:
                member_mat[r, col[i]] = 1
                aff_j[r] += instance.affinity[(i, j)]
        m, k = len(aff), len(combos)
        counts = (counts[:, None, :] + member_mat[None, :, :]).reshape(m * k, len(subs))
        aff = (aff[:, None] + aff_j[None, :]).reshape(m * k)
        picks = [np.repeat(p, k) for p in picks] + [np.tile(np.arange(k), m)]

    objective = (counts >= 2).sum(axis=1) - lam * aff
    best = objective.min()
    tied = np.flatnonzero(objective <= best + _TIE_TOL)

    def pairs_of(row: int) -> tuple:
        out = []
        for opts, p in zip(options, picks):
            out.extend(opts[p[row]])
        return tuple(sorted(out))

    winner = min(pairs_of(int(r)) for r in tied)
    return Assignment.from_pairs(instance, winner, lam)
