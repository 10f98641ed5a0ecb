"""Exact land allocation with friends.

Instances, exact welfare optimization, RSD-style mechanisms with strategic
agents, property checkers and instance/result file formats.
"""

from .core import (
    Allocation,
    FriendshipGraph,
    Instance,
    InstanceError,
    PlotGraph,
    SizeCapError,
    dominates,
    is_generic,
    social_welfare,
    utilities,
    utility,
)
from .mechanisms import MechanismId, RandomBits, expectimax_solve, random_bits, run_mechanism
from .optimize import OptResult, brute_force_opt, two_approx

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "FriendshipGraph",
    "Instance",
    "InstanceError",
    "MechanismId",
    "OptResult",
    "PlotGraph",
    "RandomBits",
    "SizeCapError",
    "brute_force_opt",
    "dominates",
    "expectimax_solve",
    "is_generic",
    "random_bits",
    "run_mechanism",
    "social_welfare",
    "two_approx",
    "utilities",
    "utility",
]
