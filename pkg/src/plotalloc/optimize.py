"""Optimal and approximately optimal allocations.

``brute_force_opt`` is exact at desk scale.  ``two_approx`` returns the better
of a friendship-side allocation (friend pairs packed onto a maximum matching of
the plot graph) and a value-side allocation (maximum-weight assignment on plot
values); its welfare is at least half the optimum when every agent has at most
one friend.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import Allocation, Instance, InstanceError, PlotGraph, SizeCapError, social_welfare

DEFAULT_BRUTE_FORCE_CAP = 9


class Method(enum.Enum):
    BRUTE_FORCE = "brute-force"
    TWO_APPROX = "two-approx"
    FRIENDSHIP_SIDE = "friendship-side"
    VALUE_SIDE = "value-side"


@dataclass(frozen=True)
class OptResult:
    allocation: Allocation
    welfare: Fraction
    method: Method


def brute_force_opt(inst: Instance, cap: int = DEFAULT_BRUTE_FORCE_CAP) -> OptResult:
    """Exact maximum social welfare.

    Depth-first search over agents in index order, plots in ascending order,
    with an admissible bound, so the lexicographically smallest optimal
    assignment is returned.  Works for unrestricted friendship graphs too.
    """
    n = inst.n
    if n > cap:
        raise SizeCapError(f"instance has {n} agents; brute-force cap is {cap}")
    if n == 0:
        return OptResult(Allocation(()), Fraction(0), Method.BRUTE_FORCE)
    sc = inst.scaled
    vals = sc.values
    nbrs = sc.nbrs
    # directed friendship edges grouped by the later-indexed endpoint, so the
    # bonus is settled the moment both agents are placed
    settle: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    pending_bonus = [0] * (n + 1)  # bonus of edges whose later endpoint is >= k
    for (i, j), w in sc.phi.items():
        later, earlier = max(i, j), min(i, j)
        settle[later].append((earlier, w))
        for k in range(later + 1):
            pending_bonus[k] += w

    assign = [-1] * n
    used = [False] * n
    best_val = -1
    best: list[int] = []

    def bound(k: int) -> int:
        extra = 0
        for i in range(k, n):
            row = vals[i]
            extra += max(row[v] for v in range(n) if not used[v])
        return extra + pending_bonus[k]

    def dfs(k: int, cur: int) -> None:
        nonlocal best_val, best
        if k == n:
            if cur > best_val:
                best_val = cur
                best = assign[:]
            return
        if cur + bound(k) <= best_val:
            return
        row = vals[k]
        for v in range(n):
            if used[v]:
                continue
            gain = row[v]
            for earlier, w in settle[k]:
                if assign[earlier] in nbrs[v]:
                    gain += w
            used[v] = True
            assign[k] = v
            dfs(k + 1, cur + gain)
            used[v] = False
            assign[k] = -1

    dfs(0, 0)
    alloc = Allocation(tuple(best))
    return OptResult(alloc, Fraction(best_val, sc.denom), Method.BRUTE_FORCE)


def maximum_matching(graph: PlotGraph) -> list[tuple[int, int]]:
    """Maximum-cardinality matching of a general graph (Edmonds' blossom algorithm).

    Returns edges ``(a, b)`` with ``a < b`` sorted by the smaller endpoint.
    """
    n = graph.n
    adj = [sorted(graph.neighbors[v]) for v in range(n)]
    match = [-1] * n

    # greedy start
    for a, b in graph.sorted_edges():
        if match[a] == -1 and match[b] == -1:
            match[a], match[b] = b, a

    def find_augmenting(root: int) -> int:
        used = [False] * n
        parent = [-1] * n
        base = list(range(n))
        used[root] = True
        queue = deque([root])

        def lca(a: int, b: int) -> int:
            seen = [False] * n
            while True:
                a = base[a]
                seen[a] = True
                if match[a] == -1:
                    break
                a = parent[match[a]]
            while True:
                b = base[b]
                if seen[b]:
                    return b
                b = parent[match[b]]

        def mark_path(v: int, b: int, child: int, blossom: list[bool]) -> None:
            while base[v] != b:
                blossom[base[v]] = blossom[base[match[v]]] = True
                parent[v] = child
                child = match[v]
                v = parent[match[v]]

        while queue:
            v = queue.popleft()
            for to in adj[v]:
                if base[v] == base[to] or match[v] == to:
                    continue
                if to == root or (match[to] != -1 and parent[match[to]] != -1):
                    cur = lca(v, to)
                    blossom = [False] * n
                    mark_path(v, cur, to, blossom)
                    mark_path(to, cur, v, blossom)
                    for i in range(n):
                        if blossom[base[i]]:
                            base[i] = cur
                            if not used[i]:
                                used[i] = True
                                queue.append(i)
                elif parent[to] == -1:
                    parent[to] = v
                    if match[to] == -1:
                        # augment along the alternating path
                        while to != -1:
                            pv = parent[to]
                            nxt = match[pv]
                            match[to], match[pv] = pv, to
                            to = nxt
                        return 1
                    used[match[to]] = True
                    queue.append(match[to])
        return 0

    for v in range(n):
        if match[v] == -1:
            find_augmenting(v)
    return sorted((v, match[v]) for v in range(n) if match[v] > v)


def max_weight_assignment(weights: Sequence[Sequence]) -> Allocation:
    """Bijection maximizing the summed weight; exact (Hungarian method on scaled integers)."""
    n = len(weights)
    rows = [[Fraction(x) for x in row] for row in weights]
    for row in rows:
        if len(row) != n:
            raise InstanceError("weight matrix must be square")
    if n == 0:
        return Allocation(())
    d = math.lcm(*(x.denominator for row in rows for x in row))
    cost = [[-int(x * d) for x in row] for row in rows]
    inf = sum(abs(c) for row in cost for c in row) * 2 + 1
    # potentials and matching over 1-based columns; p[j] = row matched to column j
    u = [0] * (n + 1)
    v = [0] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    assign = [0] * n
    for j in range(1, n + 1):
        assign[p[j] - 1] = j - 1
    return Allocation(tuple(assign))


def _require_degree_one(inst: Instance) -> None:
    if not inst.degree_one:
        raise InstanceError("friendship graph must have maximum degree 1")


def friendship_side(inst: Instance) -> OptResult:
    """Pack friend pairs, heaviest total weight first, onto a maximum matching.

    Pair ``k`` (members ``i < j``) gets matching edge ``k`` (endpoints
    ``v < w``) with ``i -> v`` and ``j -> w``; everyone else is placed by
    ascending agent index onto the ascending free plots.
    """
    _require_degree_one(inst)
    fr = inst.friendships
    pairs = sorted(fr.pairs, key=lambda p: -(fr.phi(*p) + fr.phi(p[1], p[0])))
    matching = maximum_matching(inst.plots)
    assign = [-1] * inst.n
    taken = set()
    for (i, j), (v, w) in zip(pairs, matching):
        assign[i], assign[j] = v, w
        taken.update((v, w))
    free = iter(v for v in range(inst.n) if v not in taken)
    for i in range(inst.n):
        if assign[i] == -1:
            assign[i] = next(free)
    alloc = Allocation(tuple(assign))
    return OptResult(alloc, social_welfare(inst, alloc), Method.FRIENDSHIP_SIDE)


def value_side(inst: Instance) -> OptResult:
    """Maximum-weight assignment on plot values alone."""
    alloc = max_weight_assignment(inst.values)
    return OptResult(alloc, social_welfare(inst, alloc), Method.VALUE_SIDE)


def two_approx(inst: Instance) -> OptResult:
    """Better of :func:`friendship_side` and :func:`value_side`; ties go to the latter."""
    a1 = friendship_side(inst)
    a2 = value_side(inst)
    best = a1 if a1.welfare > a2.welfare else a2
    return OptResult(best.allocation, best.welfare, Method.TWO_APPROX)
