"""Why declaring friends online breaks Pareto optimality and truthfulness.

Three agents, one pair of adjacent plots.  Agent 1 and agent 2 are friends.
We run On-CT-RSD (the invited friend may pick any plot) and On-CA-RSD (the
friend must settle next door) with agent 1 drawn first, then let agent 1 lie.
"""

from plotalloc.analysis import check_pareto, check_universal_ft
from plotalloc.core import utilities
from plotalloc.generators import paper_fixture
from plotalloc.mechanisms import RandomBits, run_mechanism


def show(label, inst, out):
    utils = ", ".join(str(u) for u in utilities(inst, out.allocation))
    print(f"{label:<28} {out.allocation}  utilities ({utils})")


def main():
    inst = paper_fixture("example2").instance
    order = RandomBits((0, 1, 2))

    ct = run_mechanism(inst, "on-ct-rsd", order)
    show("On-CT-RSD, truthful:", inst, ct)
    print(f"{'':<28} dominated by {check_pareto(inst, ct.allocation)}")

    show("On-CA-RSD, truthful:", inst, run_mechanism(inst, "on-ca-rsd", order))

    lie = run_mechanism(inst, "on-ct-rsd", order, reports=(2, 0, None))
    show("On-CT-RSD, agent 1 lies:", inst, lie)

    v = check_universal_ft(inst, "on-ct-rsd")
    print(f"\nexhaustive search: agent {v.agent + 1} gains {v.lying_utility} > {v.truthful_utility} by naming agent {v.lying_report + 1}")
    print("On-CA-RSD admits no such lie:", check_universal_ft(inst, "on-ca-rsd") is None)


if __name__ == "__main__":
    main()
