"""Shared mechanism types: identifiers, random bits, state, transcripts, outcomes."""

from __future__ import annotations

import enum
import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, NamedTuple, Optional, Sequence

from ..core import Allocation, Instance, InstanceError

UNPLACED = -1


class MechanismId(enum.Enum):
    SD = "sd"
    RSD_HIDDEN_ORDER = "rsd-hidden"
    ON_CT_RSD = "on-ct-rsd"
    ON_CA_RSD = "on-ca-rsd"
    RSD_STAR = "rsd-star"
    FF_CT_RSD_STAR = "ff-ct-rsd-star"
    ON_CA_RSD_STAR = "on-ca-rsd-star"
    CA_BP_RSD = "ca-bp-rsd"
    CA_BQ_RSD = "ca-bq-rsd"
    CA_BE_RSD = "ca-be-rsd"

    @classmethod
    def parse(cls, name) -> "MechanismId":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        for m in cls:
            if m.value == key or m.name.lower().replace("_", "-") == key:
                return m
        raise ValueError(f"unknown mechanism {name!r}; known: {', '.join(m.value for m in cls)}")


# mechanisms with closed-form strategies; the rest run through the game-tree oracle
CLOSED_FORM = frozenset(
    {
        MechanismId.ON_CT_RSD,
        MechanismId.ON_CA_RSD,
        MechanismId.RSD_STAR,
        MechanismId.FF_CT_RSD_STAR,
        MechanismId.ON_CA_RSD_STAR,
    }
)
# mechanisms that elicit friendship reports
REPORTING = frozenset(
    {
        MechanismId.ON_CT_RSD,
        MechanismId.ON_CA_RSD,
        MechanismId.FF_CT_RSD_STAR,
        MechanismId.ON_CA_RSD_STAR,
        MechanismId.CA_BP_RSD,
        MechanismId.CA_BQ_RSD,
        MechanismId.CA_BE_RSD,
    }
)


@dataclass(frozen=True)
class RandomBits:
    """All randomness one run consumes.

    ``agent_permutation`` is scanned front to back, skipping agents that are
    placed or not eligible; this has the same law as a fresh uniform draw among
    the eligible agents at every step.  ``pair_permutation`` and ``pair_coins``
    index the instance's friend pairs (sorted ``(i, j)``, ``i < j``); a coin of
    ``True`` lets the larger-indexed member pick first.
    """

    agent_permutation: tuple
    pair_permutation: tuple = ()
    pair_coins: tuple = ()

    def __post_init__(self):
        for name in ("agent_permutation", "pair_permutation"):
            perm = tuple(int(x) for x in getattr(self, name))
            if sorted(perm) != list(range(len(perm))):
                raise InstanceError(f"{name} {perm} is not a permutation")
            object.__setattr__(self, name, perm)
        coins = tuple(bool(c) for c in self.pair_coins)
        if coins and len(coins) != len(self.pair_permutation):
            raise InstanceError("pair_coins must have one entry per friend pair")
        object.__setattr__(self, "pair_coins", coins)

    def check(self, inst: Instance) -> None:
        if len(self.agent_permutation) != inst.n:
            raise InstanceError(f"agent_permutation has length {len(self.agent_permutation)}, need {inst.n}")
        t = len(inst.friendships.pairs)
        if self.pair_permutation and len(self.pair_permutation) != t:
            raise InstanceError(f"pair_permutation has length {len(self.pair_permutation)}, need {t}")

    def coin(self, pair_index: int) -> bool:
        return self.pair_coins[pair_index] if self.pair_coins else False

    def pair_order(self, t: int) -> tuple:
        return self.pair_permutation if self.pair_permutation else tuple(range(t))


def identity_bits(inst: Instance) -> RandomBits:
    t = len(inst.friendships.pairs)
    return RandomBits(tuple(range(inst.n)), tuple(range(t)), (False,) * t)


def random_bits(inst: Instance, rng: random.Random) -> RandomBits:
    perm = list(range(inst.n))
    rng.shuffle(perm)
    t = len(inst.friendships.pairs)
    pairs = list(range(t))
    rng.shuffle(pairs)
    coins = tuple(rng.random() < 0.5 for _ in range(t))
    return RandomBits(tuple(perm), tuple(pairs), coins)


def enumerate_bits(inst: Instance, mech: MechanismId) -> Iterator[RandomBits]:
    """Every bits realization the mechanism can consume, each equally likely."""
    n = inst.n
    if mech is MechanismId.FF_CT_RSD_STAR:
        t = len(inst.friendships.pairs)
        for pp in itertools.permutations(range(t)):
            for coins in itertools.product((False, True), repeat=t):
                for ap in itertools.permutations(range(n)):
                    yield RandomBits(ap, pp, coins)
    else:
        for ap in itertools.permutations(range(n)):
            yield RandomBits(ap)


def bits_space_size(inst: Instance, mech: MechanismId) -> int:
    import math

    size = math.factorial(inst.n)
    if mech is MechanismId.FF_CT_RSD_STAR:
        t = len(inst.friendships.pairs)
        size *= math.factorial(t) * 2**t
    return size


class Pick(NamedTuple):
    """One transcript event: ``agent`` took ``plot``; ``declared`` is who she named."""

    agent: int
    plot: int
    declared: Optional[int] = None
    role: str = "drawn"


@dataclass(frozen=True)
class MechanismState:
    """Mid-run snapshot; ``placed[i]`` is agent ``i``'s plot or -1."""

    placed: tuple
    pending_forced: Optional[tuple] = None  # (agent, must pick adjacent to this plot)
    declared: tuple = ()
    transcript: tuple = ()

    @classmethod
    def initial(cls, n: int) -> "MechanismState":
        return cls((UNPLACED,) * n, None, (None,) * n, ())

    @property
    def available(self) -> frozenset:
        taken = set(self.placed)
        return frozenset(v for v in range(len(self.placed)) if v not in taken)

    def is_placed(self, agent: int) -> bool:
        return self.placed[agent] != UNPLACED


def normalize_reports(inst: Instance, reports: Optional[Sequence]) -> tuple:
    """Validate per-agent friendship reports (``None`` or another agent's index)."""
    if reports is None:
        return inst.truthful_reports()
    reports = tuple(None if r is None else int(r) for r in reports)
    if len(reports) != inst.n:
        raise InstanceError(f"{len(reports)} reports for {inst.n} agents")
    for i, r in enumerate(reports):
        if r is not None and not (0 <= r < inst.n and r != i):
            raise InstanceError(f"agent {i} reports invalid friend {r}")
    return reports


@dataclass(frozen=True)
class RunOutcome:
    allocation: Allocation
    utilities: tuple  # Fractions, one per agent
    transcript: tuple
    mechanism: MechanismId
    bits: Optional[RandomBits] = None

    @property
    def welfare(self) -> Fraction:
        return sum(self.utilities, Fraction(0))

    def replay(self, n: int) -> Allocation:
        placed = [UNPLACED] * n
        for ev in self.transcript:
            if placed[ev.agent] != UNPLACED or ev.plot in placed:
                raise InstanceError(f"transcript event {ev} conflicts with earlier picks")
            placed[ev.agent] = ev.plot
        return Allocation(tuple(placed))


def scaled_utilities(inst: Instance, placed: Sequence[int]) -> tuple:
    """Integer (scaled) utilities for a partial or complete placement."""
    sc = inst.scaled
    out = []
    for i, v in enumerate(placed):
        if v == UNPLACED:
            out.append(0)
            continue
        x = sc.values[i][v]
        j = sc.friend[i]
        if j is not None and placed[j] != UNPLACED and placed[j] in sc.nbrs[v]:
            x += sc.phi[(i, j)]
        out.append(x)
    return tuple(out)


def make_outcome(inst: Instance, placed, transcript, mech, bits=None) -> RunOutcome:
    alloc = Allocation(tuple(placed))
    d = inst.scaled.denom
    utils = tuple(Fraction(x, d) for x in scaled_utilities(inst, placed))
    return RunOutcome(alloc, utils, tuple(transcript), mech, bits)
