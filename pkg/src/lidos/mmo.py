"""Bi-objective transformation of the target objective plus Pareto machinery.

A plan's auxiliary objective is the target value of its most dissimilar
nearest neighbor in the pool; the pair (g1, g2) = (ft + w*fa, ft - w*fa) is
then optimized with standard nondominated sorting and crowding selection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .space import ConfigSpace, Plan


@dataclass(eq=False)
class ScoredPlan:
    """A plan with its (canonically minimized) target value and, once scored,
    its auxiliary objective and transformed objectives.

    Identity semantics: two scored plans are distinct pool members even when
    they share a plan.
    """

    plan: Plan
    ft: float
    fa: float | None = None
    g1: float | None = None
    g2: float | None = None
    rank: int | None = None
    crowding: float | None = None


@dataclass
class Front:
    members: list[ScoredPlan]
    rank: int


def assign_auxiliary(pool: list[ScoredPlan], space: ConfigSpace) -> list[ScoredPlan]:
    """Set every member's auxiliary objective from its nearest neighbors.

    For member s, the neighbor set holds all other members at minimal
    normalized distance (all ties included, a duplicate plan alone forms the
    set). Among them the one whose target value differs most from s's wins;
    ties on that difference go to the lexicographically lowest plan.
    """
    if len(pool) < 2:
        raise ValueError("auxiliary assignment needs a pool of at least 2 plans")
    coords = np.asarray([s.plan for s in pool], dtype=float)
    scale = np.asarray(space.scale)
    diff = (coords[:, None, :] - coords[None, :, :]) * scale
    dist = np.sqrt((diff * diff).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    for i, s in enumerate(pool):
        nearest = np.flatnonzero(dist[i] == dist[i].min())
        donor = min(
            (pool[j] for j in nearest),
            key=lambda a: (-abs(a.ft - s.ft), a.plan),
        )
        s.fa = donor.ft
    return pool


def transform(scored: ScoredPlan, w: float = 1.0) -> ScoredPlan:
    """Fill in g1 = ft + w*fa and g2 = ft - w*fa."""
    if scored.fa is None:
        raise ValueError("auxiliary objective not set")
    scored.g1 = scored.ft + w * scored.fa
    scored.g2 = scored.ft - w * scored.fa
    return scored


def dominates(a: ScoredPlan, b: ScoredPlan) -> bool:
    """Pareto dominance on (g1, g2), both minimized."""
    return (
        a.g1 <= b.g1
        and a.g2 <= b.g2
        and (a.g1 < b.g1 or a.g2 < b.g2)
    )


def nondominated_sort(pool: list[ScoredPlan]) -> list[Front]:
    """Fast nondominated sorting; fronts partition the pool by rank."""
    n = len(pool)
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    dominators = [0] * n
    first: list[int] = []
    for p in range(n):
        for q in range(n):
            if p == q:
                continue
            if dominates(pool[p], pool[q]):
                dominated_by[p].append(q)
            elif dominates(pool[q], pool[p]):
                dominators[p] += 1
        if dominators[p] == 0:
            first.append(p)

    fronts: list[Front] = []
    current = first
    rank = 0
    while current:
        for idx in current:
            pool[idx].rank = rank
        fronts.append(Front(members=[pool[i] for i in current], rank=rank))
        nxt: list[int] = []
        for p in current:
            for q in dominated_by[p]:
                dominators[q] -= 1
                if dominators[q] == 0:
                    nxt.append(q)
        # Keep every front in pool order so downstream tie-breaking by
        # insertion order is well-defined.
        current = sorted(nxt)
        rank += 1
    return fronts


def crowding_distance(front: Front) -> dict[ScoredPlan, float]:
    """NSGA-II crowding distance, keyed by member identity.

    Boundary members per objective get infinity; interior members accumulate
    normalized neighbor gaps. An objective with zero range contributes nothing
    to interior members.
    """
    members = front.members
    if not members:
        raise ValueError("empty front")
    out: dict[ScoredPlan, float] = {m: 0.0 for m in members}
    if len(members) <= 2:
        return {m: math.inf for m in members}
    for objective in (lambda m: m.g1, lambda m: m.g2):
        order = sorted(members, key=objective)
        out[order[0]] = math.inf
        out[order[-1]] = math.inf
        span = objective(order[-1]) - objective(order[0])
        if span == 0:
            continue
        for i in range(1, len(order) - 1):
            if out[order[i]] != math.inf:
                out[order[i]] += (objective(order[i + 1]) - objective(order[i - 1])) / span
    return out


def environmental_selection(union: list[ScoredPlan], n: int) -> list[ScoredPlan]:
    """Keep the top n members: fill whole fronts by rank, truncate the split
    front by descending crowding distance (insertion order breaks ties)."""
    if n <= 0:
        raise ValueError("population size must be positive")
    if len(union) < n:
        raise ValueError(f"cannot select {n} plans from a union of {len(union)}")
    survivors: list[ScoredPlan] = []
    for front in nondominated_sort(union):
        cd = crowding_distance(front)
        for member in front.members:
            member.crowding = cd[member]
        if len(survivors) + len(front.members) <= n:
            survivors.extend(front.members)
            if len(survivors) == n:
                break
        else:
            ordered = sorted(front.members, key=lambda m: -cd[m])
            survivors.extend(ordered[: n - len(survivors)])
            break
    return survivors
