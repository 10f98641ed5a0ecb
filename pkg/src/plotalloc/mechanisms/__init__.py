"""Mechanisms: random bits, closed-form strategic runs, and the game-tree oracle."""

from .base import (
    CLOSED_FORM,
    REPORTING,
    UNPLACED,
    MechanismId,
    MechanismState,
    Pick,
    RandomBits,
    RunOutcome,
    bits_space_size,
    enumerate_bits,
    identity_bits,
    random_bits,
)
from .engine import (
    Engine,
    expected_utilities,
    run_ff_ct_rsd_star,
    run_mechanism,
    run_on_ca_rsd,
    run_on_ca_rsd_star,
    run_on_ct_rsd,
    run_rsd_star,
)
from .oracle import DEFAULT_ORACLE_CAP, ExpectimaxResult, GameTree, expectimax_solve
from .strategies import best_response, on_ca_strategy, on_ct_strategy

__all__ = [
    "CLOSED_FORM",
    "DEFAULT_ORACLE_CAP",
    "REPORTING",
    "UNPLACED",
    "Engine",
    "ExpectimaxResult",
    "GameTree",
    "MechanismId",
    "MechanismState",
    "Pick",
    "RandomBits",
    "RunOutcome",
    "best_response",
    "bits_space_size",
    "enumerate_bits",
    "expectimax_solve",
    "expected_utilities",
    "identity_bits",
    "on_ca_strategy",
    "on_ct_strategy",
    "random_bits",
    "run_ff_ct_rsd_star",
    "run_mechanism",
    "run_on_ca_rsd",
    "run_on_ca_rsd_star",
    "run_on_ct_rsd",
    "run_rsd_star",
]
