"""Closed-form strategies for the online choose-together / choose-adjacent mechanisms.

The helpers prefixed with an underscore work on the scaled-integer image of an
instance and a bare placement tuple; the public functions take an
:class:`Instance` and a :class:`MechanismState`.  All ties go to the lowest
plot index.
"""

from __future__ import annotations

from typing import Iterable, Optional

from ..core import Instance, InstanceError, Scaled
from .base import UNPLACED, MechanismState


def _plot_value(sc: Scaled, placed: tuple, agent: int, v: int) -> int:
    x = sc.values[agent][v]
    j = sc.friend[agent]
    if j is not None:
        w = placed[j]
        if w != UNPLACED and w in sc.nbrs[v]:
            x += sc.phi[(agent, j)]
    return x


def _best_response(sc: Scaled, placed: tuple, agent: int, allowed: Iterable[int]) -> int:
    best_v, best_x = -1, None
    for v in sorted(allowed):
        x = _plot_value(sc, placed, agent, v)
        if best_x is None or x > best_x:
            best_v, best_x = v, x
    if best_v < 0:
        raise InstanceError(f"agent {agent} has no plot to choose from")
    return best_v


def _with(placed: tuple, agent: int, v: int) -> tuple:
    out = list(placed)
    out[agent] = v
    return tuple(out)


def _ct_choice(sc: Scaled, placed: tuple, avail: frozenset, agent: int, partner: int) -> int:
    """Plot for ``agent`` when ``partner`` picks right after her, unconstrained."""
    bonus = sc.phi.get((agent, partner), 0)
    best_v, best_x = -1, None
    for v in sorted(avail):
        rest = avail - {v}
        x = sc.values[agent][v]
        if rest and bonus:
            resp = _best_response(sc, _with(placed, agent, v), partner, rest)
            if resp in sc.nbrs[v]:
                x += bonus
        if best_x is None or x > best_x:
            best_v, best_x = v, x
    return best_v


def _ca_choice(sc: Scaled, avail: frozenset, agent: int, partner: int) -> int:
    """Plot for ``agent`` when ``partner`` must then pick adjacent to a non-singleton pick.

    Compares the best plot overall with the best non-singleton plot plus the
    friendship weight; ties favour the friendship option.
    """
    row = sc.values[agent]
    best_all = max(sorted(avail), key=lambda v: (row[v], -v))
    non_single = [v for v in sorted(avail) if sc.nbrs[v] & avail]
    if not non_single:
        return best_all
    best_ns = max(non_single, key=lambda v: (row[v], -v))
    if row[best_ns] + sc.phi.get((agent, partner), 0) >= row[best_all]:
        return best_ns
    return best_all


def _forced_options(sc: Scaled, avail: frozenset, declarer_plot: int, was_singleton: bool) -> frozenset:
    if was_singleton:
        return avail
    return avail & sc.nbrs[declarer_plot]


def _state_avail(inst: Instance, state: MechanismState, agent: int) -> tuple[tuple, frozenset]:
    if not 0 <= agent < inst.n:
        raise InstanceError(f"agent {agent} out of range")
    if state.is_placed(agent):
        raise InstanceError(f"agent {agent} is already placed")
    return tuple(state.placed), state.available


def best_response(inst: Instance, state: MechanismState, agent: int, allowed=None) -> int:
    """Utility-maximizing plot among ``allowed`` (default: all available)."""
    placed, avail = _state_avail(inst, state, agent)
    return _best_response(inst.scaled, placed, agent, avail if allowed is None else set(allowed) & avail)


def on_ct_strategy(
    inst: Instance, state: MechanismState, agent: int, friend: Optional[int] = None
) -> tuple[int, Optional[int]]:
    """Choose-together pick: ``(plot, declared agent or None)``.

    Without an unplaced ``friend`` this is the best available plot, counting
    adjacency to a placed friend.  Otherwise every plot is tried, the friend's
    best response is simulated, and the friend is declared (declaring never
    hurts: she picks next instead of later).
    """
    placed, avail = _state_avail(inst, state, agent)
    sc = inst.scaled
    if friend is None or placed[friend] != UNPLACED:
        return _best_response(sc, placed, agent, avail), None
    return _ct_choice(sc, placed, avail, agent, friend), friend


def on_ca_strategy(
    inst: Instance, state: MechanismState, agent: int, friend: Optional[int] = None
) -> tuple[int, Optional[int]]:
    """Choose-adjacent pick: best plot vs best non-singleton plot plus friendship weight."""
    placed, avail = _state_avail(inst, state, agent)
    sc = inst.scaled
    if friend is None or placed[friend] != UNPLACED:
        return _best_response(sc, placed, agent, avail), None
    return _ca_choice(sc, avail, agent, friend), friend
