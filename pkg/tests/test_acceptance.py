"""Acceptance criteria 1-9, one test each.

A pass/fail line per criterion is printed at the end of the session (see
``conftest.pytest_terminal_summary``).  Run standalone with
``python3 tests/test_acceptance.py``.
"""

import time
from fractions import Fraction

import pytest

from plotalloc.analysis import (
    check_interim_ft,
    check_pareto,
    check_universal_ft,
    check_universal_po,
    exact_expected_sw,
    monte_carlo_sw,
)
from plotalloc.core import is_generic
from plotalloc.generators import (
    RainbowInstance,
    RandomSpec,
    has_rainbow_matching,
    paper_fixture,
    proper_colorings,
    rainbow_reduction,
    random_instance,
)
from plotalloc.io import export_mip, mip_model, mip_point, mip_scale, parse_lp, render_lp
from plotalloc.mechanisms import (
    Engine,
    GameTree,
    MechanismId,
    RandomBits,
    enumerate_bits,
    expected_utilities,
    expectimax_solve,
    run_mechanism,
)
from plotalloc.optimize import brute_force_opt, two_approx

F = Fraction
TOPS = ("path", "star", "grid", "random")
CT, CA = MechanismId.ON_CT_RSD, MechanismId.ON_CA_RSD
FF, CA_STAR = MechanismId.FF_CT_RSD_STAR, MechanismId.ON_CA_RSD_STAR

TITLES = {
    1: "golden examples",
    2: "2-approximation on 500 random instances",
    3: "universal PO/FT, exhaustive",
    4: "welfare bounds on binary instances",
    5: "star family I2 upper bounds",
    6: "rainbow reduction soundness",
    7: "oracle/strategy agreement",
    8: "Monte Carlo sanity",
    9: "MIP export round-trip",
}


def acceptance(number):
    """Tag a test with its criterion number (read by the summary hook)."""
    return pytest.mark.acceptance(number)


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.1f}s, budget {self.seconds}s"


def generic_spec(k, phi_lo, phi_hi):
    n = 3 + k % 3
    return RandomSpec(n, TOPS[k % 4], (k // 4) % (n // 2) + 1, (phi_lo, phi_hi), "generic")


# -- 1 --------------------------------------------------------------------------------


@acceptance(1)
def test_criterion_1_golden_examples():
    failures = []

    def expect(label, got, want):
        if got != want:
            failures.append(f"{label}: got {got}, want {want}")

    with Budget(10):
        e1 = paper_fixture("example1")
        res = expectimax_solve(e1.instance, "sd", RandomBits(e1.expected["sd_order"]))
        expect("example1 SD outcome", res.outcome.allocation, e1.expected["sd_allocation"])

        e2 = paper_fixture("example2")
        order = RandomBits((0, 1, 2))
        ct = run_mechanism(e2.instance, CT, order).allocation
        expect("example2 On-CT outcome", ct, e2.expected["on_ct_allocation"])
        expect("example2 domination witness", check_pareto(e2.instance, ct), e2.expected["dominating"])
        expect("example2 On-CA outcome", run_mechanism(e2.instance, CA, order).allocation, e2.expected["on_ca_allocation"])

        v = check_universal_ft(e2.instance, CT)
        expect("example2 misreport utilities", (v.lying_utility, v.truthful_utility), (F(7, 5), F(1)))

        e5 = paper_fixture("example5")
        truthful = expectimax_solve(e5.instance, "ca-bp-rsd", prefix=(0,)).values
        if not truthful[e5.expected["invitee"]] >= F(1, 3):
            failures.append("example5 decline EU below 1/3")
        v5 = check_interim_ft(e5.instance, "ca-bp-rsd", prefix=(0,))
        expect("example5 misreport EU", v5.lying_utility if v5 else None, F(11, 10))

        hub = paper_fixture("hub_n8").instance
        expect("hub_n8 On-CT expected SW", sum(expected_utilities(hub, CT)), F(51))
        expect("hub_n8 OPT", brute_force_opt(hub).welfare, F(202))

        p12 = paper_fixture("prop12", n=6, phi=F(3, 10)).instance
        sw = sum(expected_utilities(p12, FF))
        if not sw <= F(11, 5):
            failures.append(f"prop12_n6 FF-CT-RSD* expected SW {sw} > 2.2")
        expect("prop12_n6 OPT", brute_force_opt(p12).welfare, F(13, 5))

    assert not failures, "; ".join(failures)


# -- 2 --------------------------------------------------------------------------------


@acceptance(2)
def test_criterion_2_two_approximation():
    modes = ("binary", "uniform-rational", "generic")
    with Budget(60):
        for seed in range(500):
            n = 2 + seed % 6
            spec = RandomSpec(n, TOPS[seed % 4], seed % (n // 2 + 1), (F(0), F(3)), modes[seed % 3], seed % 7 == 0)
            inst = random_instance(spec, seed)
            assert 2 * two_approx(inst).welfare >= brute_force_opt(inst).welfare, f"seed {seed}"


# -- 3 --------------------------------------------------------------------------------


@acceptance(3)
def test_criterion_3_universal_po_ft():
    with Budget(300):
        for k in range(200):
            inst = random_instance(generic_spec(k, F(1, 10), F(2)), k)
            assert is_generic(inst)
            assert check_universal_po(inst, CA) is None, f"On-CA PO witness, seed {k}"
            assert check_universal_ft(inst, CA) is None, f"On-CA FT violation, seed {k}"
        for k in range(200):
            inst = random_instance(generic_spec(k, F(11, 10), F(3)), k)
            assert is_generic(inst) and inst.friendships.phi_min > 1
            assert check_universal_po(inst, CT) is None, f"On-CT PO witness, seed {k}"
            assert check_universal_ft(inst, CT) is None, f"On-CT FT violation, seed {k}"
            ct, ca = Engine(inst, CT), Engine(inst, CA)
            for bits in enumerate_bits(inst, CT):
                assert ct.run(bits)[0] == ca.run(bits)[0], f"On-CT/On-CA differ, seed {k}"


# -- 4 --------------------------------------------------------------------------------


@acceptance(4)
def test_criterion_4_welfare_bounds():
    def binary(k, phi):
        n = 4 + k % 3
        return random_instance(RandomSpec(n, TOPS[k % 4], 1 + k % (n // 2), (phi, phi), "binary", True), k)

    with Budget(600):
        for phi in (F(2), F(3, 2), F(1, 2), F(1, 5)):
            for k in range(100):
                inst = binary(k, phi)
                opt = brute_force_opt(inst).welfare
                ff = exact_expected_sw(inst, FF, opt=opt).expected_sw
                ca = exact_expected_sw(inst, CA_STAR, opt=opt).expected_sw
                if phi > 1:
                    assert ff >= opt / 4, f"FF-CT-RSD*, phi {phi}, seed {k}"
                    assert ca >= opt / (2 * phi + 2), f"On-CA-RSD*, phi {phi}, seed {k}"
                else:
                    bound = phi * opt / (4 * phi + 4)
                    assert ff >= bound and ca >= bound, f"phi {phi}, seed {k}"


# -- 5 --------------------------------------------------------------------------------


@acceptance(5)
def test_criterion_5_star_family():
    phi = F(3, 10)
    for n in (6, 10):
        inst = paper_fixture("prop13_star", n=n, variant="I2", phi=phi).instance
        sw = sum(expected_utilities(inst, CA_STAR))
        opt = brute_force_opt(inst, cap=10).welfare
        assert sw <= F(2, n) + 2 * phi
        assert sw / opt <= (F(2, n) + 2 * phi) / (1 + 2 * phi)


# -- 6 --------------------------------------------------------------------------------


@acceptance(6)
def test_criterion_6_rainbow_reduction():
    with Budget(120):
        for s in range(1, 7):
            for coloring in proper_colorings(s - 1):
                q = max(coloring) + 1 if coloring else 0
                for k in range(q + 2):
                    r = RainbowInstance(s, q, coloring, k)
                    inst, threshold = rainbow_reduction(r)
                    reaches = brute_force_opt(inst, cap=inst.n).welfare >= threshold
                    assert reaches == has_rainbow_matching(r), (s, coloring, k)


# -- 7 --------------------------------------------------------------------------------


@acceptance(7)
def test_criterion_7_oracle_agreement():
    for k in range(100):
        inst = random_instance(generic_spec(k, F(1, 10), F(2)), 1000 + k)
        for mech in (CT, CA):
            tree = GameTree(inst, mech)
            for bits in enumerate_bits(inst, mech):
                want = run_mechanism(inst, mech, bits).allocation
                got = expectimax_solve(inst, mech, bits, tree=tree).outcome.allocation
                assert got == want, (k, mech.value, bits.agent_permutation)


# -- 8 --------------------------------------------------------------------------------


@acceptance(8)
def test_criterion_8_monte_carlo():
    mechs = (CT, CA, FF, CA_STAR)
    hits = 0
    for k in range(20):
        n = 3 + k % 4
        inst = random_instance(RandomSpec(n, TOPS[k % 4], 1, (F(1, 10), F(2)), "uniform-rational"), k)
        mech = mechs[k % 4]
        exact = exact_expected_sw(inst, mech).expected_sw
        hits += monte_carlo_sw(inst, mech, samples=50_000, seed=k).contains(exact)
    assert hits >= 19, f"only {hits}/20 intervals contain the exact expectation"


# -- 9 --------------------------------------------------------------------------------


@acceptance(9)
def test_criterion_9_mip_round_trip():
    for k in range(50):
        n = 1 + k % 5
        inst = random_instance(RandomSpec(n, TOPS[k % 4], k % (n // 2 + 1), (F(0), F(2)), "uniform-rational"), k)
        text = export_mip(inst)
        model = parse_lp(text)
        assert render_lp(model) == text
        assert model == mip_model(inst)
        best = brute_force_opt(inst)
        point = mip_point(inst, best.allocation)
        assert model.feasible(point)
        assert model.evaluate(point) / mip_scale(model) == best.welfare


@acceptance(9)
def test_criterion_9_optional_solver_check():
    milp = pytest.importorskip("scipy.optimize").milp
    np = pytest.importorskip("numpy")
    from scipy.optimize import Bounds, LinearConstraint

    for k in range(50):
        n = 1 + k % 5
        inst = random_instance(RandomSpec(n, TOPS[k % 4], k % (n // 2 + 1), (F(0), F(2)), "uniform-rational"), k)
        model = parse_lp(export_mip(inst))
        names = sorted(set(model.binaries))
        col = {v: c for c, v in enumerate(names)}
        c = np.zeros(len(names))
        for v, coef in model.objective.items():
            c[col[v]] = -float(coef)
        rows, lo, hi = [], [], []
        for _, row, op, rhs in model.constraints:
            a = np.zeros(len(names))
            for v, coef in row.items():
                a[col[v]] = float(coef)
            rows.append(a)
            lo.append(-np.inf if op == "<=" else float(rhs))
            hi.append(np.inf if op == ">=" else float(rhs))
        res = milp(c, constraints=LinearConstraint(np.array(rows), lo, hi), integrality=np.ones(len(names)), bounds=Bounds(0, 1))
        assert res.success
        point = {v: round(res.x[col[v]]) for v in names}
        assert model.evaluate(point) / mip_scale(model) == brute_force_opt(inst).welfare


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
