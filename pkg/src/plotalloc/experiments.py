"""Named experiment suites producing CSV result rows."""

from __future__ import annotations

import time
from fractions import Fraction
from typing import Callable, Iterator

from .analysis import exact_expected_sw, monte_carlo_sw
from .generators import RandomSpec, paper_fixture, random_instance
from .io import ResultRow
from .mechanisms import MechanismId


def _timed(fn: Callable, timing: bool):
    t0 = time.perf_counter()
    rep = fn()
    ms = round((time.perf_counter() - t0) * 1000) if timing else None
    return rep, ms


def _row(name: str, rep, seed, ms) -> ResultRow:
    return ResultRow(name, rep.mechanism.value, seed, rep.expected_sw, rep.opt, ms)


def examples_suite(timing: bool = False, **_) -> Iterator[ResultRow]:
    """Exact expectations on the worked families."""
    cases = [
        ("hub_n8", MechanismId.ON_CT_RSD, {}),
        ("hub_n8", MechanismId.FF_CT_RSD_STAR, {}),
        ("prop12_n6", MechanismId.FF_CT_RSD_STAR, {}),
        ("prop13_star_n6", MechanismId.ON_CA_RSD_STAR, {}),
        ("prop13_star_n10", MechanismId.ON_CA_RSD_STAR, {"opt_cap": 10}),
    ]
    for name, mech, kw in cases:
        inst = paper_fixture(name).instance
        rep, ms = _timed(lambda: exact_expected_sw(inst, mech, cap=10, **kw), timing)
        yield _row(name, rep, "exact", ms)


def bounds_suite(count: int = 10, seed: int = 0, timing: bool = False, **_) -> Iterator[ResultRow]:
    """Exact expectations of the star mechanisms on seeded binary instances."""
    for phi in (Fraction(2), Fraction(1, 2)):
        for k in range(count):
            n = 4 + k % 3
            spec = RandomSpec(n, ("path", "star", "grid", "random")[k % 4], 1 + k % 2, (phi, phi), "binary", True)
            s = seed + k
            inst = random_instance(spec, s)
            for mech in (MechanismId.FF_CT_RSD_STAR, MechanismId.ON_CA_RSD_STAR):
                rep, ms = _timed(lambda: exact_expected_sw(inst, mech), timing)
                yield _row(f"binary_n{n}_phi{phi}_s{s}".replace("/", "_"), rep, "exact", ms)


def hub_scaling_suite(samples: int = 20_000, seed: int = 0, timing: bool = False, **_) -> Iterator[ResultRow]:
    """Sampled On-CT-RSD welfare on the hub family as n grows."""
    for n in (10, 20, 50):
        fx = paper_fixture("hub", n=n)
        rep, ms = _timed(
            lambda: monte_carlo_sw(fx.instance, MechanismId.ON_CT_RSD, samples=samples, seed=seed, opt=fx.expected["opt"]),
            timing,
        )
        yield _row(fx.name, rep, seed, ms)


SUITES = {
    "examples": examples_suite,
    "bounds": bounds_suite,
    "hub-scaling": hub_scaling_suite,
}


def run_suite(name: str, **params) -> list:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; known: {', '.join(SUITES)}")
    return list(SUITES[name](**params))
