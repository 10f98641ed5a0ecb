import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import instances
from plotalloc.core import Allocation, Instance, InstanceError, social_welfare, utilities
from plotalloc.generators import RandomSpec, paper_fixture, random_instance
from plotalloc.mechanisms import (
    CLOSED_FORM,
    Engine,
    GameTree,
    MechanismId,
    RandomBits,
    bits_space_size,
    enumerate_bits,
    expected_utilities,
    expectimax_solve,
    identity_bits,
    random_bits,
    run_ff_ct_rsd_star,
    run_mechanism,
    run_on_ca_rsd,
    run_on_ca_rsd_star,
    run_on_ct_rsd,
    run_rsd_star,
)

F = Fraction
ORDER = RandomBits((0, 1, 2))


@pytest.fixture(scope="module")
def ex2():
    return paper_fixture("example2")


class TestIds:
    @pytest.mark.parametrize("name", ["on-ct-rsd", "ON_CT_RSD", "on_ct_rsd"])
    def test_parse(self, name):
        assert MechanismId.parse(name) is MechanismId.ON_CT_RSD

    def test_unknown(self):
        with pytest.raises(ValueError, match="known"):
            MechanismId.parse("lottery")

    def test_oracle_only_mechanisms_refuse_engine(self):
        with pytest.raises(InstanceError):
            Engine(paper_fixture("example5").instance, "ca-bp-rsd")


class TestBits:
    def test_space_size_matches_enumeration(self):
        inst = Instance.build([[0] * 4] * 4, [(0, 1)], [(0, 1, 1), (2, 3, 1)])
        for mech in (MechanismId.ON_CT_RSD, MechanismId.FF_CT_RSD_STAR):
            assert sum(1 for _ in enumerate_bits(inst, mech)) == bits_space_size(inst, mech)
        assert bits_space_size(inst, MechanismId.FF_CT_RSD_STAR) == 24 * 2 * 4

    def test_random_bits_are_seeded(self):
        inst = paper_fixture("example5").instance
        a = random_bits(inst, random.Random(3))
        assert a == random_bits(inst, random.Random(3))
        assert sorted(a.agent_permutation) == [0, 1, 2, 3]
        assert identity_bits(inst).agent_permutation == (0, 1, 2, 3)


class TestGoldenRuns:
    def test_example2_on_ct(self, ex2):
        out = run_on_ct_rsd(ex2.instance, ORDER)
        assert out.allocation == ex2.expected["on_ct_allocation"]
        assert out.transcript[0].declared == 1 and out.transcript[1].role == "invited"

    def test_example2_on_ca(self, ex2):
        assert run_on_ca_rsd(ex2.instance, ORDER).allocation == ex2.expected["on_ca_allocation"]

    def test_example2_lie_pays(self, ex2):
        lie = ex2.expected["ft_lie"]
        out = run_on_ct_rsd(ex2.instance, ORDER, reports=(lie, 0, None))
        assert out.utilities[0] == ex2.expected["ft_lying_utility"]
        assert run_on_ct_rsd(ex2.instance, ORDER).utilities[0] == ex2.expected["ft_truthful_utility"]

    def test_example1_serial_dictatorship(self):
        fx = paper_fixture("example1")
        res = expectimax_solve(fx.instance, "sd", RandomBits(fx.expected["sd_order"]))
        assert res.outcome.allocation == fx.expected["sd_allocation"]
        assert res.values == fx.expected["sd_utilities"]
        assert res.outcome.welfare == fx.expected["sd_welfare"]

    def test_example4_forced_adjacent_pick(self):
        fx = paper_fixture("example4")
        out = run_on_ca_rsd(fx.instance, identity_bits(fx.instance))
        assert out.allocation[0] == fx.expected["first_plot"]
        assert out.allocation[1] == fx.expected["forced_plot"]

    def test_hub_expectations(self):
        fx = paper_fixture("hub_n8")
        assert sum(expected_utilities(fx.instance, "on-ct-rsd")) == fx.expected["on_ct_expected_sw"]
        assert sum(expected_utilities(fx.instance, "ff-ct-rsd-star")) == fx.expected["ff_ct_expected_sw"]


class TestExample5:
    @pytest.fixture(scope="module")
    def fx(self):
        return paper_fixture("example5")

    def test_interim_lie(self, fx):
        e = fx.expected
        first = e["first"]
        truth = expectimax_solve(fx.instance, "ca-bp-rsd", prefix=(first,)).values[first]
        lie = list(fx.instance.truthful_reports())
        lie[first] = e["lie"]
        lying = expectimax_solve(fx.instance, "ca-bp-rsd", prefix=(first,), reports=lie).values[first]
        assert (truth, lying) == (e["truthful_eu"], e["lying_eu"])

    def test_decline_value_beats_bound(self, fx):
        # with agent 0 drawn first, the invited friend declines and re-enters the pool
        res = expectimax_solve(fx.instance, "ca-bp-rsd", prefix=(fx.expected["first"],))
        eu = res.values[fx.expected["invitee"]]
        assert eu == fx.expected["invitee_decline_eu"]
        assert eu >= fx.expected["decline_lower_bound"]

    @pytest.mark.parametrize("mech", ["ca-bp-rsd", "ca-bq-rsd", "ca-be-rsd"])
    def test_universal_lie(self, fx, mech):
        e = fx.expected
        bits = RandomBits(e["universal_order"])
        lie = list(fx.instance.truthful_reports())
        lie[0] = e["lie"]
        honest = expectimax_solve(fx.instance, mech, bits, informed=True).values[0]
        lying = expectimax_solve(fx.instance, mech, bits, reports=lie, informed=True).values[0]
        assert (honest, lying) == (e["universal_truthful_utility"], e["universal_lying_utility"])


class TestStarVariants:
    def test_rsd_star_skips_zero_agents(self):
        # agent 0 values nothing; she must end on the leftover plot
        inst = Instance.build([[0, 0, 0], [1, "1/2", 0], ["1/2", 1, 0]])
        out = run_rsd_star(inst, RandomBits((0, 1, 2)))
        assert out.allocation == Allocation((2, 0, 1))
        assert [ev.agent for ev in out.transcript][:2] == [1, 2]

    def test_ff_pairs_pick_first(self):
        inst = Instance.build([[1, 0, 0, 0]] * 4, [(2, 3)], [(1, 2, 2)])
        out = run_ff_ct_rsd_star(inst, RandomBits((0, 1, 2, 3), (0,), (False,)))
        assert {out.allocation[1], out.allocation[2]} == {2, 3}
        assert out.transcript[0].agent == 1

    def test_ff_coin_swaps_pair_order(self):
        inst = Instance.build([[1, 0, 0, 0]] * 4, [(2, 3)], [(1, 2, 2)])
        out = run_ff_ct_rsd_star(inst, RandomBits((0, 1, 2, 3), (0,), (True,)))
        assert out.transcript[0].agent == 2

    def test_on_ca_star_defers_friendless_zero_agents(self):
        fx = paper_fixture("prop13_star_n6")
        out = run_on_ca_rsd_star(fx.instance, identity_bits(fx.instance))
        zero = [i for i in range(6) if not any(fx.instance.values[i]) and fx.instance.friend(i) is None]
        tail = [ev.agent for ev in out.transcript][-len(zero):] if zero else []
        assert sorted(tail) == sorted(zero)


class TestRunContract:
    @settings(max_examples=80, deadline=None)
    @given(instances(max_n=6), st.sampled_from(sorted(CLOSED_FORM, key=lambda m: m.value)), st.integers(0, 999))
    def test_bijection_and_replay(self, inst, mech, seed):
        bits = random_bits(inst, random.Random(seed))
        out = run_mechanism(inst, mech, bits)
        assert sorted(out.allocation) == list(range(inst.n))
        assert out.replay(inst.n) == out.allocation
        assert out.utilities == utilities(inst, out.allocation)
        assert out.welfare == social_welfare(inst, out.allocation)
        assert run_mechanism(inst, mech, bits) == out

    @settings(max_examples=40, deadline=None)
    @given(instances(max_n=5), st.sampled_from(["on-ct-rsd", "on-ca-rsd", "ff-ct-rsd-star", "on-ca-rsd-star"]))
    def test_expectation_is_average_of_runs(self, inst, mech):
        m = MechanismId.parse(mech)
        runs = [run_mechanism(inst, m, b).welfare for b in enumerate_bits(inst, m)]
        assert sum(expected_utilities(inst, m)) == sum(runs) / len(runs)


class TestOracleAgreement:
    def test_closed_form_equals_game_tree(self):
        for seed in range(12):
            n = 3 + seed % 3
            spec = RandomSpec(n, ("path", "star", "random")[seed % 3], 1 + seed % 2 if n > 3 else 1, (F(1, 10), F(2)), "generic")
            inst = random_instance(spec, seed)
            for mech in (MechanismId.ON_CT_RSD, MechanismId.ON_CA_RSD):
                tree = GameTree(inst, mech)
                for bits in enumerate_bits(inst, mech):
                    want = run_mechanism(inst, mech, bits).allocation
                    assert expectimax_solve(inst, mech, bits, tree=tree).outcome.allocation == want

    def test_uninformed_sd_averages_orders(self):
        inst = paper_fixture("example1").instance
        res = expectimax_solve(inst, "rsd-hidden")
        assert res.outcome is None and len(res.values) == 4

    def test_cap(self):
        from plotalloc.core import SizeCapError

        with pytest.raises(SizeCapError):
            expectimax_solve(paper_fixture("hub_n8").instance, "sd", cap=7)
