"""Instance fixtures, parametric families, the rainbow-matching reduction, random instances.

Agents and plots are 0-indexed throughout; the worked examples number them
from 1, so "agent 1" there is agent 0 here and plot ``v1`` is plot 0.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .core import Allocation, Instance, InstanceError, PlotGraph, RationalLike, as_rational, is_generic


@dataclass(frozen=True)
class Fixture:
    """A named instance together with the outcomes it is known to produce."""

    name: str
    instance: Instance
    expected: dict = field(default_factory=dict)


def _f(x: str) -> Fraction:
    return Fraction(x)


def _star_edges(center: int, leaves: Sequence[int]) -> list:
    return [(center, v) for v in leaves]


def example1() -> Fixture:
    """Four agents on a path; SD with order (1, 2, 3, 4) needs lookahead."""
    rows = [
        ["1/2", "3/10", 0, 0],
        [0, "1/2", "3/10", 0],
        [0, "7/10", 0, "1/2"],
        [0, "1/2", 0, 0],
    ]
    phi = _f("2/5")
    inst = Instance.build(rows, PlotGraph.path(4).edges, [(0, 3, phi), (1, 2, phi)])
    return Fixture(
        "example1",
        inst,
        {
            "sd_order": (0, 1, 2, 3),
            "sd_allocation": Allocation((1, 2, 3, 0)),
            "sd_utilities": (_f("7/10"), _f("7/10"), _f("9/10"), _f("2/5")),
            "sd_welfare": _f("27/10"),
        },
    )


def example2() -> Fixture:
    """Three agents, one plot edge {v2, v3}; On-CT-RSD is not PO (nor FT)."""
    rows = [[1, "9/10", 0], [1, 0, "2/5"], [1, "1/10", 0]]
    inst = Instance.build(rows, [(1, 2)], [(0, 1, _f("1/2"))])
    return Fixture(
        "example2",
        inst,
        {
            "first": 0,
            "on_ct_allocation": Allocation((0, 2, 1)),
            "dominating": Allocation((1, 2, 0)),
            "on_ca_allocation": Allocation((1, 2, 0)),
            "ft_lie": 2,  # agent 1 declares agent 3
            "ft_truthful_utility": Fraction(1),
            "ft_lying_utility": _f("7/5"),
            "opt": _f("33/10"),  # brute force; includes agent 3 on v1
        },
    )


def example4(n: int = 4, phi: RationalLike = "1/10") -> Fixture:
    """A single plot edge {v, w} (plots 0, 1) plus isolated plots; w is worth 0 to all."""
    if n < 2:
        raise InstanceError("example4 needs n >= 2")
    phi = as_rational(phi)
    rows = [[1, 0] + [1] * (n - 2) for _ in range(n)]
    pairs = [(2 * k, 2 * k + 1, phi) for k in range(n // 2)]
    inst = Instance.build(rows, [(0, 1)], pairs)
    return Fixture("example4", inst, {"first": 0, "first_plot": 0, "forced_plot": 1})


def example5() -> Fixture:
    """Four agents on a path, friends {1, 4}; back-to-pool invitations are not FT."""
    rows = [
        [0, 1, 0, 0],
        ["3/10", 0, "1/10", "1/5"],
        ["3/10", 0, "1/5", 0],
        [0, 0, 0, 1],
    ]
    inst = Instance.build(rows, PlotGraph.path(4).edges, [(0, 3, _f("1/5"))])
    return Fixture(
        "example5",
        inst,
        {
            "first": 0,
            "decline_lower_bound": _f("1/3"),
            "invitee": 3,
            "invitee_decline_eu": _f("13/15"),
            "truthful_eu": _f("31/30"),
            "lie": 2,
            "lying_eu": _f("11/10"),
            # bits known: order (1, 2, 3, 4)
            "universal_order": (0, 1, 2, 3),
            "universal_truthful_utility": Fraction(1),
            "universal_lying_utility": _f("6/5"),
        },
    )


def hub(n: int = 8, phi: RationalLike = 100) -> Fixture:
    """One plot edge {v1, v2}; friends {1, 2}; everybody values only v1 (at 1)."""
    if n < 2:
        raise InstanceError("hub family needs n >= 2")
    phi = as_rational(phi)
    rows = [[1] + [0] * (n - 1) for _ in range(n)]
    inst = Instance.build(rows, [(0, 1)], [(0, 1, phi)])
    return Fixture(
        f"hub_n{n}",
        inst,
        {
            "on_ct_expected_sw": 1 + 2 * Fraction(2, n) * phi,
            "stated_opt": 2 * phi + 2,
            "opt": 2 * phi + 1,
            "ff_ct_expected_sw": 2 * phi + 1,
        },
    )


def prop12(n: int = 6, phi: RationalLike = "3/10") -> Fixture:
    """Two stars v1..vk and w1..wk joined at v1-w1; pairs {2i-1, 2i}.

    Agent 1 values v1 and w1 at 1, agent 2 values v1 and w1 at 1; everything
    else is 0.  (A literal ``u_2(w_2) = 1`` would make the stated optimum
    ``2 + 2 phi`` unattainable, since w2 is not adjacent to v1.)
    """
    if n < 4 or n % 2:
        raise InstanceError("prop12 family needs an even n >= 4")
    phi = as_rational(phi)
    k = n // 2
    edges = _star_edges(0, range(1, k)) + _star_edges(k, range(k + 1, n)) + [(0, k)]
    rows = [[0] * n for _ in range(n)]
    rows[0][0] = rows[0][k] = 1
    rows[1][0] = rows[1][k] = 1
    pairs = [(2 * i, 2 * i + 1, phi) for i in range(k)]
    inst = Instance.build(rows, edges, pairs)
    return Fixture(
        f"prop12_n{n}",
        inst,
        {"opt": 2 + 2 * phi, "ff_ct_upper": Fraction(6, n) + 4 * phi},
    )


def prop13_star(n: int = 6, marked_pair: int = 0, variant: str = "I2", phi: RationalLike = "3/10") -> Fixture:
    """Star centred at v1, all agents paired, all values 0; I2 gives agent 2i value 1 for v1."""
    if n < 2 or n % 2:
        raise InstanceError("prop13 family needs an even n >= 2")
    k = n // 2
    if not 0 <= marked_pair < k:
        raise InstanceError(f"marked_pair must lie in [0, {k})")
    variant = variant.upper()
    if variant not in ("I1", "I2"):
        raise InstanceError("variant must be I1 or I2")
    phi = as_rational(phi)
    rows = [[0] * n for _ in range(n)]
    marked = 2 * marked_pair + 1
    if variant == "I2":
        rows[marked][0] = 1
    inst = Instance.build(rows, _star_edges(0, range(1, n)), [(2 * i, 2 * i + 1, phi) for i in range(k)])
    expected = {"marked_agent": marked, "opt": (1 if variant == "I2" else 0) + 2 * phi}
    if variant == "I2":
        expected["sw_upper"] = Fraction(2, n) + 2 * phi
        expected["ratio_upper"] = (Fraction(2, n) + 2 * phi) / (1 + 2 * phi)
    return Fixture(f"prop13_{variant.lower()}_n{n}", inst, expected)


FIXTURES = {
    "example1": example1,
    "example2": example2,
    "example3": example2,
    "prop6": example2,
    "example4": example4,
    "example5": example5,
    "example6": hub,
    "hub": hub,
    "prop12": prop12,
    "prop13_star": prop13_star,
}


def paper_fixture(name: str, **params) -> Fixture:
    """Look up a fixture by name; ``hub_n8``-style suffixes set ``n``."""
    key = name.strip().lower()
    if key in FIXTURES:
        return FIXTURES[key](**params)
    base, sep, tail = key.rpartition("_n")
    if sep and tail.isdigit() and base in FIXTURES:
        return FIXTURES[base](n=int(tail), **params)
    raise InstanceError(f"unknown fixture {name!r}; known: {', '.join(sorted(FIXTURES))}")


# -- rainbow matching reduction -------------------------------------------------


@dataclass(frozen=True)
class RainbowInstance:
    """A path on ``s`` vertices whose ``s - 1`` edges carry colours ``0..q-1``."""

    s: int
    q: int
    coloring: tuple
    k: int

    def __post_init__(self):
        col = tuple(int(c) for c in self.coloring)
        object.__setattr__(self, "coloring", col)
        if self.s < 1:
            raise InstanceError("the path needs at least one vertex")
        if len(col) != self.s - 1:
            raise InstanceError(f"{len(col)} colours for {self.s - 1} edges")
        if any(not 0 <= c < self.q for c in col):
            raise InstanceError("colours must lie in [0, q)")
        if any(a == b for a, b in zip(col, col[1:])):
            raise InstanceError("consecutive path edges share a colour")
        if self.k < 0:
            raise InstanceError("k must be non-negative")


def proper_colorings(edges: int) -> Iterator[tuple]:
    """Proper colourings of a path with ``edges`` edges, one per colour-renaming class.

    Colourings are restricted growth strings: colour ``c`` appears only after
    ``0..c-1`` have appeared.  Renaming colours does not change the answer.
    """
    if edges == 0:
        yield ()
        return

    def grow(prefix: list, used: int):
        if len(prefix) == edges:
            yield tuple(prefix)
            return
        for c in range(used + 1):
            if c != prefix[-1]:
                prefix.append(c)
                yield from grow(prefix, max(used, c + 1))
                prefix.pop()

    yield from grow([0], 1)


def has_rainbow_matching(r: RainbowInstance) -> bool:
    """Exhaustive search for ``k`` disjoint path edges with distinct colours."""
    if r.k == 0:
        return True
    for combo in itertools.combinations(range(r.s - 1), r.k):
        if any(b - a < 2 for a, b in zip(combo, combo[1:])):
            continue
        if len({r.coloring[e] for e in combo}) == r.k:
            return True
    return False


RAINBOW_PHI = Fraction(1, 10)


def rainbow_reduction(r: RainbowInstance) -> tuple[Instance, Fraction]:
    """Welfare instance whose optimum reaches ``T`` iff a size-``k`` rainbow matching exists.

    Plots: path vertices ``0..s-1`` followed by ``2q`` isolated plots.  Agents:
    a friend pair ``(2c, 2c+1)`` per colour ``c``, then ``s`` dummies valuing
    nothing.  Colour agents value their own isolated plot at 1.  Along the
    edges of colour ``c`` (left to right), agent ``2c`` values the left
    endpoint of the 1st, 3rd, ... edge and the right endpoint of the 2nd,
    4th, ...; agent ``2c+1`` values the complementary endpoints.
    """
    s, q = r.s, r.q
    n = s + 2 * q
    rows = [[0] * n for _ in range(n)]
    for c in range(q):
        a, b = 2 * c, 2 * c + 1
        rows[a][s + a] = 1
        rows[b][s + b] = 1
        own = [e for e in range(s - 1) if r.coloring[e] == c]
        for ell, e in enumerate(own):
            left, right = e, e + 1
            if ell % 2 == 0:
                rows[a][left] = rows[b][right] = 1
            else:
                rows[a][right] = rows[b][left] = 1
    edges = [(v, v + 1) for v in range(s - 1)]
    pairs = [(2 * c, 2 * c + 1, RAINBOW_PHI) for c in range(q)]
    inst = Instance.build(rows, edges, pairs)
    return inst, 2 * q + 2 * r.k * RAINBOW_PHI


# -- random instances -------------------------------------------------------------

TOPOLOGIES = ("path", "grid", "star", "random")
VALUE_MODES = ("binary", "uniform-rational", "generic")


@dataclass(frozen=True)
class RandomSpec:
    n: int
    topology: str = "path"
    pairs: int = 0
    phi_range: tuple = (Fraction(0), Fraction(1))
    values: str = "uniform-rational"
    uniform_phi: bool = False
    denominator: int = 10
    edge_prob: Fraction = Fraction(1, 2)

    def __post_init__(self):
        if self.n < 1:
            raise InstanceError("n must be positive")
        if self.topology not in TOPOLOGIES:
            raise InstanceError(f"unknown topology {self.topology!r}")
        if self.values not in VALUE_MODES:
            raise InstanceError(f"unknown valuation mode {self.values!r}")
        if not 0 <= self.pairs <= self.n // 2:
            raise InstanceError(f"cannot place {self.pairs} friend pairs among {self.n} agents")
        lo, hi = (as_rational(x) for x in self.phi_range)
        if lo < 0 or hi < lo:
            raise InstanceError("phi_range must satisfy 0 <= lo <= hi")
        object.__setattr__(self, "phi_range", (lo, hi))
        if self.denominator < 1:
            raise InstanceError("denominator must be positive")


def _grid_shape(n: int) -> tuple[int, int]:
    rows = max(r for r in range(1, int(n**0.5) + 1) if n % r == 0)
    return rows, n // rows


def random_plot_edges(topology: str, n: int, rng: random.Random, edge_prob: Fraction = Fraction(1, 2)) -> list:
    if topology == "path":
        return [(v, v + 1) for v in range(n - 1)]
    if topology == "star":
        return [(0, v) for v in range(1, n)]
    if topology == "grid":
        rows, cols = _grid_shape(n)
        edges = []
        for r in range(rows):
            for c in range(cols):
                v = r * cols + c
                if c + 1 < cols:
                    edges.append((v, v + 1))
                if r + 1 < rows:
                    edges.append((v, v + cols))
        return edges
    return [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < edge_prob]


def _random_phi(spec: RandomSpec, rng: random.Random) -> Fraction:
    lo, hi = spec.phi_range
    d = spec.denominator
    # uniform on the grid {lo, lo + (hi-lo)/d, ..., hi}
    return lo + (hi - lo) * Fraction(rng.randint(0, d), d)


def _random_values(spec: RandomSpec, rng: random.Random) -> list:
    n = spec.n
    if spec.values == "binary":
        return [[rng.randint(0, 1) for _ in range(n)] for _ in range(n)]
    if spec.values == "uniform-rational":
        d = spec.denominator
        return [[Fraction(rng.randint(0, d), d) for _ in range(n)] for _ in range(n)]
    # generic: distinct values on a fine grid; genericity is re-checked by the caller
    d = 1000 * n
    return [[Fraction(x, d) for x in rng.sample(range(d + 1), n)] for _ in range(n)]


def random_instance(spec: RandomSpec, seed: int, max_tries: int = 1000) -> Instance:
    """Seed-deterministic random instance; ``generic`` mode rejection-samples."""
    rng = random.Random(seed)
    for _ in range(max_tries):
        edges = random_plot_edges(spec.topology, spec.n, rng, spec.edge_prob)
        agents = list(range(spec.n))
        rng.shuffle(agents)
        common = _random_phi(spec, rng)
        friends = []
        for p in range(spec.pairs):
            i, j = sorted(agents[2 * p : 2 * p + 2])
            if spec.uniform_phi:
                friends.append((i, j, common))
            else:
                friends.append((i, j, _random_phi(spec, rng), _random_phi(spec, rng)))
        inst = Instance.build(_random_values(spec, rng), edges, friends)
        if spec.values != "generic" or is_generic(inst):
            return inst
    raise InstanceError(f"no generic instance found in {max_tries} tries; widen phi_range or the grid")
