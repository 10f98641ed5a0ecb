"""Property checkers and expected-welfare computation.

Pareto checks scan all ``n!`` allocations; universal checks enumerate every
random-bits realization the mechanism can consume.  Both are exhaustive and
exact, so they are meant for small instances (``n <= 5`` or so).
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .core import Allocation, Instance, InstanceError, SizeCapError
from .mechanisms import (
    CLOSED_FORM,
    DEFAULT_ORACLE_CAP,
    GameTree,
    REPORTING,
    Engine,
    MechanismId,
    UNPLACED,
    RandomBits,
    enumerate_bits,
    expectimax_solve,
    random_bits,
)
from .mechanisms.base import scaled_utilities
from .optimize import DEFAULT_BRUTE_FORCE_CAP, brute_force_opt

Z_99 = 2.5758293035489004  # two-sided 99% normal quantile
DEFAULT_CHECK_CAP = 6
DEFAULT_EXACT_CAP = 8


@dataclass(frozen=True)
class FtViolation:
    """A profitable unilateral friendship misreport.

    ``bits`` is ``None`` when the comparison is between expected utilities
    (agents who do not know the random bits).
    """

    agent: int
    true_report: Optional[int]
    lying_report: Optional[int]
    bits: Optional[RandomBits]
    truthful_utility: Fraction
    lying_utility: Fraction

    def __post_init__(self):
        if not self.lying_utility > self.truthful_utility:
            raise ValueError("a violation needs lying_utility > truthful_utility")


@dataclass(frozen=True)
class WelfareReport:
    mechanism: MechanismId
    exact: bool
    expected_sw: Fraction  # exact value, or the sample mean
    opt: Optional[Fraction]
    half_width: Optional[float] = None  # 99% CI half-width when sampled
    samples: Optional[int] = None
    seed: Optional[int] = None

    @property
    def ratio(self) -> Optional[Fraction]:
        if self.opt is None or self.opt == 0:
            return None
        return self.expected_sw / self.opt

    def contains(self, x) -> bool:
        """Whether ``x`` lies in the reported 99% interval (exact reports: equality)."""
        if self.exact:
            return Fraction(x) == self.expected_sw
        return abs(float(Fraction(x) - self.expected_sw)) <= self.half_width


# -- Pareto optimality ----------------------------------------------------------


class AllocationTable:
    """Scaled utility vectors of all ``n!`` allocations, in lexicographic order."""

    def __init__(self, inst: Instance, cap: int = DEFAULT_BRUTE_FORCE_CAP):
        if inst.n > cap:
            raise SizeCapError(f"instance has {inst.n} agents; Pareto scan cap is {cap}")
        self.inst = inst
        self.perms = list(itertools.permutations(range(inst.n)))
        rows = [scaled_utilities(inst, p) for p in self.perms]
        big = max((abs(x) for r in rows for x in r), default=0) >= 2**62
        self.utils = np.array(rows, dtype=object if big else np.int64).reshape(len(self.perms), inst.n)
        self._memo: dict = {}

    def dominating(self, alloc: Sequence[int]) -> Optional[Allocation]:
        key = tuple(alloc)
        if key in self._memo:
            return self._memo[key]
        base = np.array(scaled_utilities(self.inst, key), dtype=self.utils.dtype)
        weakly = np.all(self.utils >= base, axis=1)
        strictly = np.any(self.utils > base, axis=1)
        hits = np.flatnonzero(weakly & strictly)
        out = Allocation(self.perms[hits[0]]) if len(hits) else None
        self._memo[key] = out
        return out


def check_pareto(inst: Instance, alloc, cap: int = DEFAULT_BRUTE_FORCE_CAP) -> Optional[Allocation]:
    """Lexicographically smallest allocation dominating ``alloc``, or ``None`` if it is PO."""
    alloc = alloc if isinstance(alloc, Allocation) else Allocation(tuple(alloc))
    if len(alloc) != inst.n:
        raise InstanceError("allocation size does not match the instance")
    return AllocationTable(inst, cap).dominating(alloc.assignment)


# -- running a mechanism under fixed bits ---------------------------------------


class _Runner:
    """Outcome of a mechanism for given (bits, reports), with per-report caching."""

    def __init__(self, inst: Instance, mech: MechanismId, memo: bool = True):
        self.inst = inst
        self.mech = mech
        self.memo = memo  # memoize whole runs (exhaustive scans) or replay them (sampling)
        self._engines: dict = {}

    def placement(self, bits: RandomBits, reports: tuple) -> tuple:
        if self.mech in CLOSED_FORM:
            eng = self._engines.get(reports)
            if eng is None:
                eng = self._engines[reports] = Engine(self.inst, self.mech, reports)
            if self.memo:
                return eng.final_placement((UNPLACED,) * self.inst.n, bits)
            return eng.run(bits)[0]
        tree = self._engines.get(reports)
        if tree is None:
            if self.inst.n > DEFAULT_ORACLE_CAP:
                raise SizeCapError(f"instance has {self.inst.n} agents; game-tree cap is {DEFAULT_ORACLE_CAP}")
            tree = self._engines[reports] = GameTree(self.inst, self.mech, reports)
        return tree.play(bits, informed=True)[0]

    def utilities(self, bits: RandomBits, reports: tuple) -> tuple:
        d = self.inst.scaled.denom
        return tuple(Fraction(x, d) for x in scaled_utilities(self.inst, self.placement(bits, reports)))


def _require_size(inst: Instance, cap: int) -> None:
    if inst.n > cap:
        raise SizeCapError(f"instance has {inst.n} agents; exhaustive check cap is {cap}")


def check_universal_po(
    inst: Instance, mech, reports: Optional[Sequence] = None, cap: int = DEFAULT_CHECK_CAP
) -> Optional[tuple[RandomBits, Allocation]]:
    """First bits realization (in enumeration order) whose outcome is dominated."""
    mech = MechanismId.parse(mech)
    _require_size(inst, cap)
    reports = tuple(inst.truthful_reports() if reports is None else reports)
    table = AllocationTable(inst)
    runner = _Runner(inst, mech)
    for bits in enumerate_bits(inst, mech):
        dom = table.dominating(runner.placement(bits, reports))
        if dom is not None:
            return bits, dom
    return None


def deviations(inst: Instance, agent: int) -> list:
    """Friendship reports other than the truth: nobody, or any other agent."""
    truth = inst.friend(agent)
    opts = [None] + [j for j in range(inst.n) if j != agent]
    return [r for r in opts if r != truth]


def check_universal_ft(inst: Instance, mech, cap: int = DEFAULT_CHECK_CAP) -> Optional[FtViolation]:
    """Search every bits realization and unilateral misreport for a profitable lie.

    Agents know the bits; the deviator optimizes her true utility given her
    report, the others play truthfully.
    """
    mech = MechanismId.parse(mech)
    if mech not in REPORTING:
        raise InstanceError(f"{mech.value} elicits no friendship reports")
    _require_size(inst, cap)
    truth = inst.truthful_reports()
    runner = _Runner(inst, mech)
    lies = [(i, r) for i in range(inst.n) for r in deviations(inst, i)]
    for bits in enumerate_bits(inst, mech):
        honest = runner.utilities(bits, truth)
        for i, r in lies:
            reports = truth[:i] + (r,) + truth[i + 1 :]
            x = runner.utilities(bits, reports)[i]
            if x > honest[i]:
                return FtViolation(i, truth[i], r, bits, honest[i], x)
    return None


def check_interim_ft(inst: Instance, mech, prefix: Sequence[int] = (), cap: int = DEFAULT_CHECK_CAP):
    """Like :func:`check_universal_ft`, but on expected utilities (bits unknown to agents).

    ``prefix`` conditions on the first draws, e.g. ``(0,)`` for "agent 0 is
    drawn first"; only agents in the prefix are considered as deviators when
    it is given.
    """
    mech = MechanismId.parse(mech)
    if mech not in REPORTING:
        raise InstanceError(f"{mech.value} elicits no friendship reports")
    _require_size(inst, cap)
    truth = inst.truthful_reports()
    honest = expectimax_solve(inst, mech, reports=truth, prefix=prefix, cap=cap).values
    agents = list(prefix) if prefix else range(inst.n)
    for i in agents:
        for r in deviations(inst, i):
            reports = truth[:i] + (r,) + truth[i + 1 :]
            x = expectimax_solve(inst, mech, reports=reports, prefix=prefix, cap=cap).values[i]
            if x > honest[i]:
                return FtViolation(i, truth[i], r, None, honest[i], x)
    return None


def replay_violation(inst: Instance, mech, v: FtViolation) -> tuple[Fraction, Fraction]:
    """Recompute ``(truthful, lying)`` utilities of a universal violation under its bits."""
    if v.bits is None:
        raise InstanceError("only violations with stored bits can be replayed")
    runner = _Runner(inst, MechanismId.parse(mech))
    truth = inst.truthful_reports()
    lie = truth[: v.agent] + (v.lying_report,) + truth[v.agent + 1 :]
    return runner.utilities(v.bits, truth)[v.agent], runner.utilities(v.bits, lie)[v.agent]


# -- expected welfare -------------------------------------------------------------


def _opt(inst: Instance, opt, opt_cap: int) -> Optional[Fraction]:
    if opt is not None:
        return Fraction(opt)
    if inst.n <= opt_cap:
        return brute_force_opt(inst, cap=opt_cap).welfare
    return None


def exact_expected_sw(
    inst: Instance,
    mech,
    reports: Optional[Sequence] = None,
    *,
    cap: int = DEFAULT_EXACT_CAP,
    opt=None,
    opt_cap: int = DEFAULT_BRUTE_FORCE_CAP,
) -> WelfareReport:
    """Exact expected social welfare over all random bits.

    Closed-form mechanisms use the memoized run engine; the others go through
    the game-tree oracle (whose own cap applies).  ``opt`` may be supplied
    when it is known; otherwise it is brute-forced if ``n <= opt_cap``.
    """
    mech = MechanismId.parse(mech)
    if mech in CLOSED_FORM:
        if inst.n > cap:
            raise SizeCapError(f"instance has {inst.n} agents; exact expectation cap is {cap}")
        eng = Engine(inst, mech, reports)
        total = sum(eng.expected(), Fraction(0)) / inst.scaled.denom
    else:
        total = sum(expectimax_solve(inst, mech, reports=reports, cap=min(cap, 7)).values, Fraction(0))
    return WelfareReport(mech, True, total, _opt(inst, opt, opt_cap))


def monte_carlo_sw(
    inst: Instance,
    mech,
    reports: Optional[Sequence] = None,
    samples: int = 10_000,
    seed: int = 0,
    *,
    opt=None,
    opt_cap: int = DEFAULT_BRUTE_FORCE_CAP,
) -> WelfareReport:
    """Sample mean of the welfare with a 99% normal-approximation CI half-width.

    With a single sample the half-width is reported as infinite.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    mech = MechanismId.parse(mech)
    rng = random.Random(seed)
    reports = tuple(inst.truthful_reports() if reports is None else reports)
    runner = _Runner(inst, mech, memo=False)
    seen: dict = {}
    total = Fraction(0)
    total_sq = Fraction(0)
    for _ in range(samples):
        bits = random_bits(inst, rng)
        sw = seen.get(bits)
        if sw is None:
            sw = sum(runner.utilities(bits, reports), Fraction(0))
            if len(seen) < 200_000:
                seen[bits] = sw
        total += sw
        total_sq += sw * sw
    mean = total / samples
    if samples > 1:
        var = (total_sq - samples * mean * mean) / (samples - 1)
        half = Z_99 * math.sqrt(max(float(var), 0.0) / samples)
    else:
        half = math.inf
    return WelfareReport(mech, False, mean, _opt(inst, opt, opt_cap), half, samples, seed)
