"""Exact data model: plot graphs, friendships, instances and allocations.

Every number is a :class:`fractions.Fraction`.  Mechanisms and solvers work on
a scaled-integer copy of the instance (see :attr:`Instance.scaled`), which keeps
comparisons exact while avoiding Fraction overhead in inner loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

RationalLike = Union[int, str, Fraction, float]


class InstanceError(ValueError):
    """Raised when an instance, allocation or report violates an invariant."""


class SizeCapError(ValueError):
    """Raised when an exhaustive routine is asked to go beyond its size cap."""


def as_rational(x: RationalLike) -> Fraction:
    """Convert to Fraction.  Floats go through their shortest repr (0.1 -> 1/10)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise InstanceError(f"not a rational number: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise InstanceError(f"not a finite number: {x!r}")
        return Fraction(repr(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InstanceError(f"not a rational number: {x!r}") from exc
    raise InstanceError(f"not a rational number: {x!r}")


@dataclass(frozen=True)
class PlotGraph:
    """Undirected simple graph on plots ``0..n-1``; an edge means adjacency."""

    n: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        if self.n < 0:
            raise InstanceError("plot count must be non-negative")
        norm = set()
        for e in self.edges:
            a, b = tuple(e)
            if a == b:
                raise InstanceError(f"self-loop on plot {a}")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise InstanceError(f"edge ({a}, {b}) outside plot range [0, {self.n})")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "PlotGraph":
        seen = set()
        for e in edges:
            a, b = e
            key = (min(a, b), max(a, b))
            if key in seen:
                raise InstanceError(f"duplicate edge {key}")
            seen.add(key)
        return cls(n, frozenset(seen))

    @classmethod
    def path(cls, n: int) -> "PlotGraph":
        return cls(n, frozenset((i, i + 1) for i in range(n - 1)))

    @cached_property
    def neighbors(self) -> tuple[frozenset, ...]:
        nb = [set() for _ in range(self.n)]
        for a, b in self.edges:
            nb[a].add(b)
            nb[b].add(a)
        return tuple(frozenset(s) for s in nb)

    def adjacent(self, v: int, w: int) -> bool:
        return w in self.neighbors[v]

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


@dataclass(frozen=True)
class FriendshipGraph:
    """Reciprocal weighted friendship relation.

    ``weights[(i, j)]`` is the extra utility agent ``i`` gets when ``j`` lives on
    an adjacent plot.  ``(i, j)`` is present iff ``(j, i)`` is.  By default each
    agent has at most one friend; ``allow_general=True`` lifts that restriction
    (only the brute-force optimizer accepts such graphs).
    """

    weights: Mapping = field(default_factory=dict)
    allow_general: bool = False

    def __post_init__(self):
        w = {}
        for (i, j), phi in dict(self.weights).items():
            if i == j:
                raise InstanceError(f"agent {i} cannot befriend herself")
            phi = as_rational(phi)
            if phi < 0:
                raise InstanceError(f"negative friendship weight {phi} on ({i}, {j})")
            w[(int(i), int(j))] = phi
        for i, j in w:
            if (j, i) not in w:
                raise InstanceError(f"friendship ({i}, {j}) is not reciprocated")
        if not self.allow_general:
            degree: dict[int, int] = {}
            for i, j in w:
                degree[i] = degree.get(i, 0) + 1
            for i, d in sorted(degree.items()):
                if d > 1:
                    raise InstanceError(f"agent {i} has {d} friends; maximum degree is 1")
        object.__setattr__(self, "weights", dict(sorted(w.items())))

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence], **kw) -> "FriendshipGraph":
        """Build from ``(i, j, phi)`` (symmetric) or ``(i, j, phi_ij, phi_ji)`` tuples."""
        w = {}
        for p in pairs:
            if len(p) == 3:
                i, j, phi = p
                wij = wji = phi
            elif len(p) == 4:
                i, j, wij, wji = p
            else:
                raise InstanceError(f"bad friendship entry {p!r}")
            for key in ((i, j), (j, i)):
                if key in w:
                    raise InstanceError(f"duplicate friendship {key}")
            w[(i, j)] = wij
            w[(j, i)] = wji
        return cls(w, **kw)

    @cached_property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        """Undirected friend pairs ``(i, j)`` with ``i < j``, sorted."""
        return tuple(sorted((i, j) for (i, j) in self.weights if i < j))

    def phi(self, i: int, j: int) -> Fraction:
        return self.weights.get((i, j), Fraction(0))

    def friends_of(self, i: int) -> list[int]:
        return [j for (a, j) in self.weights if a == i]

    @property
    def phi_min(self) -> Optional[Fraction]:
        return min(self.weights.values()) if self.weights else None


@dataclass(frozen=True, order=True)
class Allocation:
    """Bijection agents -> plots; ``assignment[i]`` is the plot of agent ``i``."""

    assignment: tuple

    def __post_init__(self):
        a = tuple(int(v) for v in self.assignment)
        if sorted(a) != list(range(len(a))):
            raise InstanceError(f"allocation {a} is not a bijection onto plots 0..{len(a) - 1}")
        object.__setattr__(self, "assignment", a)

    def __len__(self) -> int:
        return len(self.assignment)

    def __getitem__(self, i: int) -> int:
        return self.assignment[i]

    def __iter__(self) -> Iterator[int]:
        return iter(self.assignment)

    def agent_on(self, v: int) -> int:
        return self.assignment.index(v)

    def __str__(self) -> str:
        return "(" + ", ".join(f"v{v + 1}" for v in self.assignment) + ")"


@dataclass(frozen=True)
class Scaled:
    """Integer image of an instance: every value multiplied by ``denom``."""

    denom: int
    values: tuple[tuple[int, ...], ...]
    phi: dict
    friend: tuple  # friend[i] = j or None (degree <= 1 only)
    nbrs: tuple[frozenset, ...]

    def to_fraction(self, x: int) -> Fraction:
        return Fraction(x, self.denom)


@dataclass(frozen=True)
class Instance:
    """An allocation problem: ``n`` agents, ``n`` plots, plot graph, friendships, values."""

    plots: PlotGraph
    friendships: FriendshipGraph
    values: tuple

    def __post_init__(self):
        rows = tuple(tuple(as_rational(x) for x in row) for row in self.values)
        n = len(rows)
        if self.plots.n != n:
            raise InstanceError(f"{n} agents but {self.plots.n} plots")
        for i, row in enumerate(rows):
            if len(row) != n:
                raise InstanceError(f"agent {i} has {len(row)} plot values, expected {n}")
            for v, x in enumerate(row):
                if not 0 <= x <= 1:
                    raise InstanceError(f"u[{i}][{v}] = {x} outside [0, 1]")
        for i, j in self.friendships.weights:
            if not (0 <= i < n and 0 <= j < n):
                raise InstanceError(f"friendship ({i}, {j}) names an agent outside [0, {n})")
        object.__setattr__(self, "values", rows)

    @classmethod
    def build(
        cls,
        values: Sequence[Sequence[RationalLike]],
        edges: Iterable[Sequence[int]] = (),
        friends: Iterable[Sequence] = (),
        *,
        allow_general_friendships: bool = False,
    ) -> "Instance":
        n = len(values)
        return cls(
            PlotGraph.from_edges(n, edges),
            FriendshipGraph.from_pairs(friends, allow_general=allow_general_friendships),
            tuple(tuple(r) for r in values),
        )

    @property
    def n(self) -> int:
        return len(self.values)

    def u(self, i: int, v: int) -> Fraction:
        return self.values[i][v]

    def friend(self, i: int) -> Optional[int]:
        fs = self.friendships.friends_of(i)
        if len(fs) > 1:
            raise InstanceError(f"agent {i} has several friends")
        return fs[0] if fs else None

    @property
    def degree_one(self) -> bool:
        return all(len(self.friendships.friends_of(i)) <= 1 for i in range(self.n))

    @property
    def is_binary(self) -> bool:
        return all(x in (0, 1) for row in self.values for x in row)

    def truthful_reports(self) -> tuple:
        return tuple(self.friend(i) for i in range(self.n))

    @cached_property
    def scaled(self) -> Scaled:
        dens = [x.denominator for row in self.values for x in row]
        dens += [w.denominator for w in self.friendships.weights.values()]
        d = math.lcm(*dens) if dens else 1
        vals = tuple(tuple(int(x * d) for x in row) for row in self.values)
        phi = {k: int(w * d) for k, w in self.friendships.weights.items()}
        friend = tuple(self.friend(i) for i in range(self.n)) if self.degree_one else ()
        return Scaled(d, vals, phi, friend, self.plots.neighbors)

    def with_values(self, values) -> "Instance":
        return Instance(self.plots, self.friendships, tuple(tuple(r) for r in values))


def _check_agent(inst: Instance, agent: int) -> None:
    if not 0 <= agent < inst.n:
        raise InstanceError(f"agent {agent} out of range [0, {inst.n})")


def _as_allocation(inst: Instance, alloc) -> Allocation:
    if not isinstance(alloc, Allocation):
        alloc = Allocation(tuple(alloc))
    if len(alloc) != inst.n:
        raise InstanceError(f"allocation has {len(alloc)} agents, instance has {inst.n}")
    return alloc


def utility(inst: Instance, alloc, agent: int) -> Fraction:
    """Plot value plus friendship weight for every friend on an adjacent plot."""
    _check_agent(inst, agent)
    alloc = _as_allocation(inst, alloc)
    mine = alloc[agent]
    total = inst.values[agent][mine]
    for j in inst.friendships.friends_of(agent):
        if inst.plots.adjacent(mine, alloc[j]):
            total += inst.friendships.phi(agent, j)
    return total


def utilities(inst: Instance, alloc) -> tuple[Fraction, ...]:
    alloc = _as_allocation(inst, alloc)
    return tuple(utility(inst, alloc, i) for i in range(inst.n))


def social_welfare(inst: Instance, alloc) -> Fraction:
    return sum(utilities(inst, alloc), Fraction(0))


def dominates(inst: Instance, a, b) -> bool:
    """True iff every agent weakly prefers ``a`` to ``b`` and somebody strictly."""
    ua, ub = utilities(inst, a), utilities(inst, b)
    return all(x >= y for x, y in zip(ua, ub)) and any(x > y for x, y in zip(ua, ub))


def is_generic(inst: Instance) -> bool:
    """No agent is ever indifferent between two plots, friend adjacency included.

    Requires pairwise distinct plot values per agent, and for each friendship
    edge ``(i, j)``: ``u_i(v) != u_i(w) + phi_ij`` for all plots ``v != w``.
    """
    for i, row in enumerate(inst.values):
        if len(set(row)) != len(row):
            return False
        vals = set(row)
        for j in inst.friendships.friends_of(i):
            phi = inst.friendships.phi(i, j)
            # phi == 0 reduces to distinctness, already checked
            if phi and any(x + phi in vals for x in row):
                return False
    return True


def is_singleton_plot(inst: Instance, available: Iterable[int], v: int) -> bool:
    """True iff no other available plot is adjacent to ``v``."""
    avail = set(available)
    if v not in avail:
        raise InstanceError(f"plot {v} is not available")
    return not (inst.plots.neighbors[v] & avail)
