"""Runs of the mechanisms whose strategies have a closed form.

An :class:`Engine` is bound to an instance, a mechanism and a report profile.
Each round it lists the equally likely draws (an agent, a friend pair with a
coin, or the final arbitrary pairing), and :meth:`Engine.step` plays one
round.  A run follows the draws selected by a :class:`RandomBits`; the exact
expectation averages over all draws recursively, memoized on the placement.

Agents whose report differs from the truth are *deviators*: when they pick,
they look ahead over every plot and keep the one maximizing their true final
utility (realized under the same bits, or in expectation when no bits are
given).  Truthful agents follow the closed-form strategies.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

from ..core import Instance, InstanceError
from .base import (
    CLOSED_FORM,
    UNPLACED,
    MechanismId,
    Pick,
    RandomBits,
    RunOutcome,
    make_outcome,
    normalize_reports,
    scaled_utilities,
)
from .strategies import _best_response, _ca_choice, _ct_choice, _with

TAIL = "tail"

_ONLINE = (MechanismId.ON_CT_RSD, MechanismId.ON_CA_RSD, MechanismId.ON_CA_RSD_STAR)
_ADJACENT = (MechanismId.ON_CA_RSD, MechanismId.ON_CA_RSD_STAR)


class Engine:
    def __init__(self, inst: Instance, mech, reports: Optional[Sequence] = None):
        mech = MechanismId.parse(mech)
        if mech not in CLOSED_FORM:
            raise InstanceError(f"{mech.value} has no closed-form strategies; use the game-tree oracle")
        if not inst.degree_one:
            raise InstanceError("mechanisms need a friendship graph of maximum degree 1")
        self.inst = inst
        self.mech = mech
        self.sc = inst.scaled
        self.n = inst.n
        self.reports = normalize_reports(inst, reports)
        truth = inst.truthful_reports()
        self.deviators = frozenset(i for i in range(self.n) if self.reports[i] != truth[i])
        # friend pairs: instance pairs first (indexed like RandomBits.pair_permutation),
        # then mutual-report pairs that are not real friendships
        self.pairs = list(inst.friendships.pairs)
        self.t = len(self.pairs)
        if mech is MechanismId.FF_CT_RSD_STAR:
            mutual = {
                (min(i, r), max(i, r))
                for i, r in enumerate(self.reports)
                if r is not None and self.reports[r] == i
            }
            self.pairs += sorted(mutual - set(self.pairs))
            self.mutual = [k for k, p in enumerate(self.pairs) if p in mutual]
        else:
            self.mutual = []
        self._steps: dict = {}
        self._draws: dict = {}
        self._finals: dict = {}
        self._expect: dict = {}

    # -- rounds -------------------------------------------------------------

    def _avail(self, placed: tuple) -> frozenset:
        taken = set(placed)
        return frozenset(v for v in range(self.n) if v not in taken)

    def _rsd_star_draws(self, placed: tuple, avail: frozenset) -> list:
        vals = self.sc.values
        eligible = [
            a for a in range(self.n) if placed[a] == UNPLACED and any(vals[a][v] > 0 for v in avail)
        ]
        if eligible:
            return eligible
        return [TAIL] if avail else []

    def draws(self, placed: tuple) -> list:
        """Equally likely draws for the next round; empty once everybody is placed."""
        hit = self._draws.get(placed)
        if hit is None:
            hit = self._draws[placed] = self._list_draws(placed)
        return hit

    def _list_draws(self, placed: tuple) -> list:
        avail = self._avail(placed)
        if not avail:
            return []
        mech = self.mech
        if mech in (MechanismId.ON_CT_RSD, MechanismId.ON_CA_RSD):
            return [a for a in range(self.n) if placed[a] == UNPLACED]
        if mech is MechanismId.ON_CA_RSD_STAR:
            vals = self.sc.values
            active = [
                a
                for a in range(self.n)
                if placed[a] == UNPLACED
                and not (self.reports[a] is None and all(vals[a][v] == 0 for v in avail))
            ]
            return active or [TAIL]
        if mech is MechanismId.RSD_STAR:
            return self._rsd_star_draws(placed, avail)
        # FF-CT-RSD*: friend pairs while two adjacent free plots remain
        rem = [k for k in self.mutual if all(placed[a] == UNPLACED for a in self.pairs[k])]
        if rem and any(self.sc.nbrs[v] & avail for v in avail):
            return [(k, coin) for k in rem for coin in (False, True)]
        return self._rsd_star_draws(placed, avail)

    def select(self, placed: tuple, options: list, bits: RandomBits):
        first = options[0]
        if first == TAIL:
            return TAIL
        if isinstance(first, tuple):
            live = {k for k, _ in options}
            order = list(bits.pair_order(self.t)) + list(range(self.t, len(self.pairs)))
            for k in order:
                if k in live:
                    return (k, bits.coin(k) if k < self.t else False)
        else:
            live = set(options)
            for a in bits.agent_permutation:
                if a in live:
                    return a
        raise InstanceError("random bits do not cover the eligible draws")

    def _bits_key(self, placed: tuple, bits: Optional[RandomBits]):
        """The part of ``bits`` that can still influence a run from ``placed``."""
        if bits is None:
            return None
        rest = tuple(a for a in bits.agent_permutation if placed[a] == UNPLACED)
        if self.mech is MechanismId.FF_CT_RSD_STAR:
            return rest, bits.pair_permutation, bits.pair_coins
        return rest

    def _acts_on_bits(self, draw) -> bool:
        if draw == TAIL:
            return False
        if isinstance(draw, tuple):
            k, coin = draw
            i, j = self.pairs[k]
            return (j if coin else i) in self.deviators
        return draw in self.deviators

    def step(self, placed: tuple, draw, bits: Optional[RandomBits] = None) -> tuple[tuple, tuple]:
        """Play one round; returns the new placement and its transcript events."""
        # only a deviator's lookahead depends on the bits
        key = (placed, draw, self._bits_key(placed, bits) if self._acts_on_bits(draw) else None)
        hit = self._steps.get(key)
        if hit is None:
            hit = self._steps[key] = self._step(placed, draw, bits)
        return hit

    def _step(self, placed, draw, bits):
        avail = self._avail(placed)
        if draw == TAIL:
            out = list(placed)
            events = []
            free = iter(sorted(avail))
            for a in range(self.n):
                if out[a] == UNPLACED:
                    out[a] = next(free)
                    events.append(Pick(a, out[a], None, "tail"))
            return tuple(out), tuple(events)
        if isinstance(draw, tuple):
            return self._pair_step(placed, avail, draw, bits)
        if self.mech in _ONLINE:
            return self._online_step(placed, avail, draw, bits)
        return self._solo_step(placed, avail, draw, bits)

    def _lookahead(self, agent, avail, play, bits) -> int:
        """Plot maximizing ``agent``'s true final utility; ``play(v)`` -> placement."""
        best_v, best_x = -1, None
        for v in sorted(avail):
            nxt = play(v)
            x = self.continuation(nxt, bits)[agent]
            if best_x is None or x > best_x:
                best_v, best_x = v, x
        return best_v

    def _solo_step(self, placed, avail, a, bits):
        if a in self.deviators:
            v = self._lookahead(a, avail, lambda v: _with(placed, a, v), bits)
        else:
            v = _best_response(self.sc, placed, a, avail)
        return _with(placed, a, v), (Pick(a, v, None, "drawn"),)

    def _invite(self, placed, avail, a, v, k):
        """``a`` takes ``v`` and names ``k`` (or nobody); ``k`` answers at once."""
        placed = _with(placed, a, v)
        events = [Pick(a, v, k, "drawn")]
        if k is not None:
            rest = avail - {v}
            allowed = rest
            role = "invited"
            if self.mech in _ADJACENT and self.sc.nbrs[v] & rest:
                allowed = rest & self.sc.nbrs[v]
                role = "forced"
            w = _best_response(self.sc, placed, k, allowed)
            placed = _with(placed, k, w)
            events.append(Pick(k, w, None, role))
        return placed, tuple(events)

    def _online_step(self, placed, avail, a, bits):
        k = self.reports[a]
        if k is not None and placed[k] != UNPLACED:
            k = None
        if a in self.deviators:
            v = self._lookahead(a, avail, lambda v: self._invite(placed, avail, a, v, k)[0], bits)
        elif k is None:
            v = _best_response(self.sc, placed, a, avail)
        elif self.mech is MechanismId.ON_CT_RSD:
            v = _ct_choice(self.sc, placed, avail, a, k)
        else:
            v = _ca_choice(self.sc, avail, a, k)
        return self._invite(placed, avail, a, v, k)

    def _pair_step(self, placed, avail, draw, bits):
        k, coin = draw
        i, j = self.pairs[k]
        first, second = (j, i) if coin else (i, j)

        def play(v):
            p = _with(placed, first, v)
            return _with(p, second, _best_response(self.sc, p, second, avail - {v}))

        if first in self.deviators:
            v = self._lookahead(first, avail, play, bits)
        else:
            v = _ct_choice(self.sc, placed, avail, first, second)
        out = play(v)
        events = (Pick(first, v, second, "pair"), Pick(second, out[second], None, "pair"))
        return out, events

    # -- whole runs ---------------------------------------------------------

    def run(self, bits: RandomBits, start: Optional[tuple] = None) -> tuple[tuple, tuple]:
        bits.check(self.inst)
        placed = start if start is not None else (UNPLACED,) * self.n
        events: list = []
        while True:
            options = self.draws(placed)
            if not options:
                return placed, tuple(events)
            placed, ev = self.step(placed, self.select(placed, options, bits), bits)
            events.extend(ev)

    def final_placement(self, placed: tuple, bits: RandomBits) -> tuple:
        key = (placed, self._bits_key(placed, bits))
        hit = self._finals.get(key)
        if hit is None:
            options = self.draws(placed)
            if not options:
                hit = placed
            else:
                nxt, _ = self.step(placed, self.select(placed, options, bits), bits)
                hit = self.final_placement(nxt, bits)
            self._finals[key] = hit
        return hit

    def expected(self, placed: Optional[tuple] = None) -> tuple:
        """Exact expected (scaled) utilities from ``placed`` onward."""
        if placed is None:
            placed = (UNPLACED,) * self.n
        hit = self._expect.get(placed)
        if hit is not None:
            return hit
        options = self.draws(placed)
        if not options:
            hit = tuple(Fraction(x) for x in scaled_utilities(self.inst, placed))
        else:
            acc = [Fraction(0)] * self.n
            for d in options:
                nxt, _ = self.step(placed, d, None)
                for i, x in enumerate(self.expected(nxt)):
                    acc[i] += x
            m = len(options)
            hit = tuple(x / m for x in acc)
        self._expect[placed] = hit
        return hit

    def continuation(self, placed: tuple, bits: Optional[RandomBits]) -> tuple:
        if bits is None:
            return self.expected(placed)
        return scaled_utilities(self.inst, self.final_placement(placed, bits))

    def outcome(self, bits: RandomBits) -> RunOutcome:
        placed, events = self.run(bits)
        return make_outcome(self.inst, placed, events, self.mech, bits)


def run_mechanism(inst: Instance, mech, bits: RandomBits, reports=None) -> RunOutcome:
    return Engine(inst, mech, reports).outcome(bits)


def run_on_ct_rsd(inst: Instance, bits: RandomBits, reports=None) -> RunOutcome:
    return run_mechanism(inst, MechanismId.ON_CT_RSD, bits, reports)


def run_on_ca_rsd(inst: Instance, bits: RandomBits, reports=None) -> RunOutcome:
    return run_mechanism(inst, MechanismId.ON_CA_RSD, bits, reports)


def run_rsd_star(inst: Instance, bits: RandomBits) -> RunOutcome:
    return run_mechanism(inst, MechanismId.RSD_STAR, bits)


def run_ff_ct_rsd_star(inst: Instance, bits: RandomBits, reports=None) -> RunOutcome:
    return run_mechanism(inst, MechanismId.FF_CT_RSD_STAR, bits, reports)


def run_on_ca_rsd_star(inst: Instance, bits: RandomBits, reports=None) -> RunOutcome:
    return run_mechanism(inst, MechanismId.ON_CA_RSD_STAR, bits, reports)


def expected_utilities(inst: Instance, mech, reports=None) -> tuple:
    """Exact expected utility of every agent (closed-form mechanisms)."""
    eng = Engine(inst, mech, reports)
    d = inst.scaled.denom
    return tuple(x / d for x in eng.expected())
