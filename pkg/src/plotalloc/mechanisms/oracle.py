"""Backward induction over the extensive-form game of every mechanism.

Chance nodes draw agents (or friend pairs, or the announced order for the
queue variants) uniformly; decision nodes let the acting agent maximize her
own expected utility with full knowledge of everyone's preferences.  Values
are exact rationals.  Ties: the true friend over no declaration over anybody
else, then the lowest plot index, and declining over accepting.

Two information regimes exist.  *Informed* agents know the random bits, so
chance is resolved by the bits while solving (this is what universal
properties quantify over).  *Uninformed* agents decide on expected values and
the bits only pick the realized path (hidden-order RSD, back-to-pool).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from ..core import Instance, InstanceError, SizeCapError
from .base import (
    UNPLACED,
    MechanismId,
    Pick,
    RandomBits,
    RunOutcome,
    make_outcome,
    normalize_reports,
    scaled_utilities,
)
from .strategies import _with

DEFAULT_ORACLE_CAP = 7
TAIL = "tail"

_NO_DECLARATIONS = (MechanismId.SD, MechanismId.RSD_HIDDEN_ORDER, MechanismId.RSD_STAR)
_QUEUE = (MechanismId.CA_BQ_RSD, MechanismId.CA_BE_RSD)
_INVITE = (MechanismId.CA_BP_RSD, MechanismId.CA_BQ_RSD, MechanismId.CA_BE_RSD)
_UNINFORMED_BY_DEFAULT = (MechanismId.RSD_HIDDEN_ORDER, MechanismId.CA_BP_RSD)


@dataclass(frozen=True)
class ExpectimaxResult:
    values: tuple  # expected (or realized, when bits are given) utility per agent
    outcome: Optional[RunOutcome]
    policy: dict = field(default_factory=dict, repr=False)


class GameTree:
    """Memoized expectimax for one (instance, mechanism, reports) triple.

    Nodes are ``(placed, queue)``; ``queue`` is only used by the back-to-queue
    and back-to-end variants.  ``declarations="fixed"`` makes each drawn agent
    name exactly her report (if that agent is still unplaced);
    ``"free"`` turns the declaration into a strategic move.

    Methods taking ``bits`` solve the informed game (chance resolved by the
    bits); ``bits=None`` solves the game against uniform chance.  One tree
    serves any number of bits realizations.
    """

    def __init__(
        self,
        inst: Instance,
        mech,
        reports: Optional[Sequence] = None,
        *,
        declarations: str = "fixed",
        order: Optional[Sequence[int]] = None,
    ):
        if not inst.degree_one:
            raise InstanceError("mechanisms need a friendship graph of maximum degree 1")
        if declarations not in ("fixed", "free"):
            raise ValueError("declarations must be 'fixed' or 'free'")
        self.inst = inst
        self.mech = MechanismId.parse(mech)
        self.sc = inst.scaled
        self.n = inst.n
        self.reports = normalize_reports(inst, reports)
        self.free = declarations == "free" and self.mech is not MechanismId.FF_CT_RSD_STAR
        # serial dictatorship without bits follows this fixed order
        self.order = RandomBits(tuple(order) if order is not None else tuple(range(self.n)))
        self.pairs = list(inst.friendships.pairs)
        self.t = len(self.pairs)
        if self.mech is MechanismId.FF_CT_RSD_STAR:
            mutual = {
                (min(i, r), max(i, r))
                for i, r in enumerate(self.reports)
                if r is not None and self.reports[r] == i
            }
            self.pairs += sorted(mutual - set(self.pairs))
            self.mutual = [k for k, p in enumerate(self.pairs) if p in mutual]
        else:
            self.mutual = []
        self._values: dict = {}
        self._macros: dict = {}
        self._draws: dict = {}
        self.policy: dict = {}

    # -- chance ---------------------------------------------------------------

    def root(self, queue: tuple = ()) -> tuple:
        return ((UNPLACED,) * self.n, tuple(queue))

    def _avail(self, placed) -> frozenset:
        taken = set(placed)
        return frozenset(v for v in range(self.n) if v not in taken)

    def _eligible_star(self, placed, avail) -> list:
        vals = self.sc.values
        el = [a for a in range(self.n) if placed[a] == UNPLACED and any(vals[a][v] > 0 for v in avail)]
        return el or [TAIL]

    def draws(self, node) -> list:
        """Draws available at a chance node; empty once everybody is placed."""
        hit = self._draws.get(node)
        if hit is None:
            hit = self._draws[node] = self._list_draws(node)
        return hit

    def _list_draws(self, node) -> list:
        placed, queue = node
        avail = self._avail(placed)
        if not avail:
            return []
        mech = self.mech
        unplaced = [a for a in range(self.n) if placed[a] == UNPLACED]
        if mech in _QUEUE:
            return [queue[0]]
        if mech in (
            MechanismId.SD,
            MechanismId.RSD_HIDDEN_ORDER,
            MechanismId.ON_CT_RSD,
            MechanismId.ON_CA_RSD,
            MechanismId.CA_BP_RSD,
        ):
            return unplaced
        if mech is MechanismId.RSD_STAR:
            return self._eligible_star(placed, avail)
        if mech is MechanismId.ON_CA_RSD_STAR:
            vals = self.sc.values
            act = [
                a
                for a in unplaced
                if not (self.reports[a] is None and all(vals[a][v] == 0 for v in avail))
            ]
            return act or [TAIL]
        rem = [k for k in self.mutual if all(placed[a] == UNPLACED for a in self.pairs[k])]
        if rem and any(self.sc.nbrs[v] & avail for v in avail):
            return [(k, c) for k in rem for c in (False, True)]
        return self._eligible_star(placed, avail)

    def select(self, options: list, bits: RandomBits):
        """The draw the bits pick among ``options`` (permutation scanning)."""
        first = options[0]
        if len(options) == 1:
            return first
        if isinstance(first, tuple):
            live = {k for k, _ in options}
            order = list(bits.pair_order(self.t)) + list(range(self.t, len(self.pairs)))
            k = next(k for k in order if k in live)
            return (k, bits.coin(k) if k < self.t else False)
        live = set(options)
        return next(a for a in bits.agent_permutation if a in live)

    def _bits_key(self, node, bits: Optional[RandomBits]):
        """The part of ``bits`` that can still matter below ``node``."""
        if bits is None or self.mech in _QUEUE:
            return None
        placed = node[0]
        rest = tuple(a for a in bits.agent_permutation if placed[a] == UNPLACED)
        if self.mech is MechanismId.FF_CT_RSD_STAR:
            return rest, bits.pair_permutation, bits.pair_coins
        return rest

    def _chance(self, node, bits: Optional[RandomBits]) -> list:
        options = self.draws(node)
        if bits is None and self.mech is MechanismId.SD:
            bits = self.order
        if bits is not None and options:
            return [self.select(options, bits)]
        return options

    def value(self, node, bits: Optional[RandomBits] = None) -> tuple:
        """Expected scaled utilities at a chance node."""
        key = (node, self._bits_key(node, bits))
        hit = self._values.get(key)
        if hit is not None:
            return hit
        options = self._chance(node, bits)
        if not options:
            hit = tuple(Fraction(x) for x in scaled_utilities(self.inst, node[0]))
        else:
            acc = [Fraction(0)] * self.n
            for d in options:
                nxt = self.macro(node, d, bits)[0]
                for i, x in enumerate(self.value(nxt, bits)):
                    acc[i] += x
            hit = tuple(x / len(options) for x in acc)
        self._values[key] = hit
        return hit

    def play(self, bits: RandomBits, informed: bool = True, node=None) -> tuple[tuple, list]:
        """Realize one run under ``bits``; uninformed agents decide on expectations."""
        if node is None:
            node = self.root(bits.agent_permutation if self.mech in _QUEUE else ())
        solve_bits = bits if informed else None
        events: list = []
        while True:
            options = self.draws(node)
            if not options:
                return node[0], events
            node, ev = self.macro(node, self.select(options, bits), solve_bits)
            events.extend(ev)

    # -- decisions --------------------------------------------------------------

    def _decl_options(self, placed, a) -> list:
        if self.mech in _NO_DECLARATIONS:
            return [None]
        if not self.free:
            r = self.reports[a]
            return [r] if r is not None and placed[r] == UNPLACED else [None]
        friend = self.sc.friend[a]
        opts = []
        if friend is not None and placed[friend] == UNPLACED:
            opts.append(friend)
        opts.append(None)
        opts += [b for b in range(self.n) if b not in (a, friend) and placed[b] == UNPLACED]
        return opts

    def _best_plot(self, agent, plots, successor, bits):
        """Argmax over ``plots`` (ascending) of ``agent``'s value at ``successor(v)``."""
        best = None
        for v in sorted(plots):
            nxt = successor(v)
            x = self.value(nxt, bits)[agent]
            if best is None or x > best[1]:
                best = (v, x, nxt)
        return best

    def macro(self, node, draw, bits: Optional[RandomBits] = None):
        """Optimal play from a chance node after ``draw``: ``(next node, events)``."""
        key = (node, draw, self._bits_key(node, bits))
        hit = self._macros.get(key)
        if hit is None:
            hit = self._macros[key] = self._macro(node, draw, bits)
        return hit

    def _macro(self, node, draw, bits):
        placed, queue = node
        avail = self._avail(placed)
        mech = self.mech
        if draw == TAIL:
            out = list(placed)
            free = iter(sorted(avail))
            events = []
            for a in range(self.n):
                if out[a] == UNPLACED:
                    out[a] = next(free)
                    events.append(Pick(a, out[a], None, "tail"))
            return (tuple(out), ()), tuple(events)
        if isinstance(draw, tuple):
            k, coin = draw
            i, j = self.pairs[k]
            first, second = (j, i) if coin else (i, j)

            def after_first(v):
                p = _with(placed, first, v)
                return self._best_plot(second, avail - {v}, lambda w: (_with(p, second, w), ()), bits)[2]

            v, _, nxt = self._best_plot(first, avail, after_first, bits)
            w = nxt[0][second]
            self.policy[(placed, first, "pair")] = v
            return nxt, (Pick(first, v, second, "pair"), Pick(second, w, None, "pair"))

        a = draw
        if mech in _NO_DECLARATIONS:
            v, _, nxt = self._best_plot(a, avail, lambda v: (_with(placed, a, v), queue), bits)
            self.policy[(placed, a, "pick")] = v
            return nxt, (Pick(a, v, None, "drawn"),)

        best = None
        for decl in self._decl_options(placed, a):
            for v in sorted(avail):
                nxt, events = self._after_pick(placed, queue, avail, a, v, decl, bits)
                x = self.value(nxt, bits)[a]
                if best is None or x > best[0]:
                    best = (x, decl, v, nxt, events)
        _, decl, v, nxt, events = best
        self.policy[(placed, queue, a, "pick")] = (v, decl)
        return nxt, events

    def _after_pick(self, placed, queue, avail, a, v, decl, bits):
        """Resolve the invitee's response once ``a`` took ``v`` and named ``decl``."""
        p = _with(placed, a, v)
        rest = avail - {v}
        q = tuple(b for b in queue if b != a)
        head = Pick(a, v, decl, "drawn")
        if decl is None or not rest:
            return (p, q), (head,)
        mech = self.mech
        if mech is MechanismId.ON_CT_RSD:
            w, _, nxt = self._best_plot(decl, rest, lambda w: (_with(p, decl, w), q), bits)
            return nxt, (head, Pick(decl, w, None, "invited"))
        near = rest & self.sc.nbrs[v]
        allowed = near if near else rest
        qa = tuple(b for b in q if b != decl)
        w, x_acc, acc = self._best_plot(decl, allowed, lambda w: (_with(p, decl, w), qa), bits)
        accept = (acc, (head, Pick(decl, w, None, "forced" if near else "invited")))
        if mech not in _INVITE:
            return accept
        qd = qa + (decl,) if mech is MechanismId.CA_BE_RSD else q
        dec_node = (p, qd)
        x_dec = self.value(dec_node, bits)[decl]
        self.policy[(p, q, decl, "invite")] = "decline" if x_dec >= x_acc else "accept"
        if x_dec >= x_acc:
            return dec_node, (head, Pick(decl, UNPLACED, None, "declined"))
        return accept


def _check(inst: Instance, cap: int) -> None:
    if inst.n > cap:
        raise SizeCapError(f"instance has {inst.n} agents; game-tree cap is {cap}")


def expectimax_solve(
    inst: Instance,
    mech,
    bits: Optional[RandomBits] = None,
    reports: Optional[Sequence] = None,
    *,
    declarations: str = "fixed",
    informed: Optional[bool] = None,
    prefix: Sequence[int] = (),
    cap: int = DEFAULT_ORACLE_CAP,
    tree: Optional[GameTree] = None,
) -> ExpectimaxResult:
    """Solve the mechanism's game by backward induction.

    With ``bits`` the realized run is returned together with its utilities.
    Without ``bits`` the exact expected utilities are returned; ``prefix``
    forces the first draws (e.g. ``prefix=(0,)``: agent 0 is drawn first) while
    players keep reasoning about the unconditioned lottery afterwards.  A
    ``tree`` built earlier for the same instance, mechanism and reports may be
    passed in to reuse its memo.
    """
    mech = MechanismId.parse(mech)
    _check(inst, cap)
    if informed is None:
        informed = mech not in _UNINFORMED_BY_DEFAULT
    if tree is None:
        order = bits.agent_permutation if bits is not None and mech is MechanismId.SD else None
        tree = GameTree(inst, mech, reports, declarations=declarations, order=order)
    d = inst.scaled.denom
    if bits is not None:
        bits.check(inst)
        placed, events = tree.play(bits, informed)
        outcome = make_outcome(inst, placed, [e for e in events if e.role != "declined"], mech, bits)
        return ExpectimaxResult(outcome.utilities, outcome, dict(tree.policy))

    prefix = tuple(prefix)
    if mech in _QUEUE:
        # the default order is announced before anybody moves
        rest = [a for a in range(inst.n) if a not in prefix]
        acc = [Fraction(0)] * inst.n
        count = 0
        for tail in itertools.permutations(rest):
            for i, x in enumerate(tree.value(tree.root(prefix + tail))):
                acc[i] += x
            count += 1
        vals = tuple(x / count for x in acc)
    else:
        vals = _prefixed_value(tree, tree.root(), prefix)
    return ExpectimaxResult(tuple(x / d for x in vals), None, dict(tree.policy))


def _prefixed_value(tree: GameTree, node, prefix) -> tuple:
    if not prefix:
        return tree.value(node)
    if prefix[0] not in tree.draws(node):
        raise InstanceError(f"agent {prefix[0]} cannot be drawn at this point")
    nxt, _ = tree.macro(node, prefix[0])
    return _prefixed_value(tree, nxt, prefix[1:])
